#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exosolve/estimators.hpp"
#include "exosolve/resolver.hpp"

namespace exosolve {

struct EstimatorParams {
  DemonstrativeModel demonstrative;
  PointingModel pointing;
  std::size_t top_k = 5;

  void validate() const;  // throws ConfigError
};

/// Everything one estimation pass produces.
struct Estimates {
  ScoreDistribution p1, p2, p3;
  Fusion fusion;
  Shortlist shortlist;
  /// Active demonstrative region, when one applied.
  std::optional<Vec3> region_mean;
  double region_sigma = 0.0;
};

/// Query parsing plus the three estimators and fusion over one map. Holds
/// references; the map, provider and lexicon must outlive it. Const methods are
/// safe to call concurrently.
class Pipeline {
 public:
  Pipeline(const SemanticMap& map, const EmbeddingProvider& provider, const Lexicon& lexicon,
           EstimatorParams params);

  const SemanticMap& map() const { return map_; }
  const Lexicon& lexicon() const { return lexicon_; }
  const EstimatorParams& params() const { return params_; }
  const std::vector<std::string>& class_vocabulary() const { return vocabulary_; }

  /// Throws DimensionError when the provider's dimensions disagree with the map.
  ParsedQuery parse(std::string_view text) const;

  Estimates estimate(const ParsedQuery& query, const UserObservation& obs, const Vec3& robot_pos) const;

  /// Reestimator for the resolver: re-parses the augmented text and re-runs estimation.
  Reestimator reestimator(const UserObservation& obs, const Vec3& robot_pos) const;

 private:
  const SemanticMap& map_;
  const EmbeddingProvider& provider_;
  const Lexicon& lexicon_;
  EstimatorParams params_;
  std::vector<std::string> vocabulary_;
};

}  // namespace exosolve
