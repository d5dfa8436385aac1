#pragma once

#include <string>
#include <vector>

#include "exosolve/perception.hpp"
#include "exosolve/query.hpp"
#include "exosolve/semantic_map.hpp"
#include "exosolve/vec3.hpp"

namespace exosolve {

/// Probability over the map's objects, aligned with map order.
struct ScoreDistribution {
  std::vector<std::string> object_ids;
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  static ScoreDistribution uniform(const SemanticMap& map);
};

/// Isotropic demonstrative-region Gaussians; meters.
struct DemonstrativeModel {
  double sigma_ko = 0.75;
  double sigma_so = 1.0;
  double sigma_a = 1.5;
  /// Distance from the wrist along the eye->wrist ray to the distal-region mean.
  double pointer_tip_distance = 2.0;

  double sigma_for(DemonstrativeSeries s) const;
  void validate() const;  // throws ConfigError
};

struct PointingModel {
  double kappa = 4.0;
  void validate() const;  // throws ConfigError
};

/// g(c) = (1 + c) / 2, maps cosine similarity onto [0, 1] preserving order.
constexpr double shift_cosine(double c) { return 0.5 * (1.0 + c); }

/// P1: product of shifted label and visual cosine similarities, normalized.
/// Uniform for demonstrative-only queries. Throws DimensionError on embedding size mismatch.
ScoreDistribution estimate_linguistic(const SemanticMap& map, const ParsedQuery& query);

/// (2 pi sigma^2)^(-3/2) exp(-|x-mu|^2 / (2 sigma^2)). Throws std::domain_error
/// for non-finite inputs or sigma <= 0.
double gaussian3_pdf(const Vec3& x, const Vec3& mu, double sigma);

/// Region center: KO -> wrist, SO -> robot, A -> wrist + d * unit(wrist - eye).
/// Throws SkeletonMissing for KO/A without a skeleton, std::invalid_argument for DO/NONE
/// or a degenerate eye==wrist ray.
Vec3 demonstrative_mean(DemonstrativeSeries series, const UserObservation& obs, const Vec3& robot_pos,
                        const DemonstrativeModel& model);

/// P2. Uniform for DO/NONE or when the series needs a skeleton that is absent.
ScoreDistribution estimate_demonstrative(const SemanticMap& map, DemonstrativeSeries series,
                                         const UserObservation& obs, const Vec3& robot_pos,
                                         const DemonstrativeModel& model);

/// Modified Bessel function of the first kind, order 0, by power series.
double bessel_i0(double x);

/// exp(kappa cos theta) / (2 pi I0(kappa)). Throws std::domain_error for
/// non-finite theta or kappa < 0.
double von_mises_pdf(double theta, double kappa);

/// Angle in [0, pi] between (wrist - eye) and (object - eye). Throws
/// SkeletonMissing without a skeleton and std::invalid_argument for a zero-length vector.
double pointing_angle(const UserObservation& obs, const Vec3& object_pos);

/// P3. Uniform without a skeleton or pointing gesture. Objects coincident with
/// the eye are scored as if perpendicular to the ray.
ScoreDistribution estimate_pointing(const SemanticMap& map, const UserObservation& obs,
                                    const PointingModel& model);

struct RankedObject {
  std::size_t index;  // into map order
  std::string object_id;
  double probability;
};

struct Fusion {
  ScoreDistribution fused;
  std::vector<RankedObject> ranking;  // every object, best first
  /// First k entries of the ranking.
  std::vector<RankedObject> top(std::size_t k) const;
};

/// fused ~ P1 * P2 * P3, normalized; ranked by probability, ties by id. An
/// all-zero product yields a uniform distribution. Throws DimensionError when the
/// inputs disagree on length or object order.
Fusion fuse(const ScoreDistribution& p1, const ScoreDistribution& p2, const ScoreDistribution& p3);

/// Top-k of fuse(); k >= 1 (std::invalid_argument otherwise).
std::vector<RankedObject> fuse_top_k(const ScoreDistribution& p1, const ScoreDistribution& p2,
                                     const ScoreDistribution& p3, std::size_t k = 5);

}  // namespace exosolve
