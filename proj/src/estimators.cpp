#include "exosolve/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "exosolve/errors.hpp"
#include "exosolve/kernels.hpp"

namespace exosolve {
namespace {

std::vector<std::string> ids_of(const SemanticMap& map) {
  std::vector<std::string> ids;
  ids.reserve(map.size());
  for (const auto& o : map.objects()) ids.push_back(o.id);
  return ids;
}

/// Normalizes non-negative weights; falls back to uniform when they sum to zero.
void normalize_weights(std::vector<double>& w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return;
  }
  for (double& x : w) x /= sum;
}

/// exp(log_w - max) normalized; the shift keeps large exponents finite.
std::vector<double> softmax(std::vector<double> log_w) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  for (double& x : log_w) x = std::exp(x - top);
  normalize_weights(log_w);
  return log_w;
}

Embedding unit_copy(const Embedding& v, std::size_t expected_dim, const char* what) {
  if (v.size() != expected_dim)
    throw DimensionError(std::string(what) + " has dimension " + std::to_string(v.size()) +
                         ", map expects " + std::to_string(expected_dim));
  Embedding u = v;
  if (!normalize_in_place(u)) throw DimensionError(std::string(what) + " is a zero vector");
  return u;
}

}  // namespace

ScoreDistribution ScoreDistribution::uniform(const SemanticMap& map) {
  return {ids_of(map), std::vector<double>(map.size(), 1.0 / static_cast<double>(map.size()))};
}

double DemonstrativeModel::sigma_for(DemonstrativeSeries s) const {
  switch (s) {
    case DemonstrativeSeries::KO: return sigma_ko;
    case DemonstrativeSeries::SO: return sigma_so;
    case DemonstrativeSeries::A: return sigma_a;
    default: throw std::invalid_argument("no demonstrative region for series " + std::string(to_string(s)));
  }
}

void DemonstrativeModel::validate() const {
  for (double v : {sigma_ko, sigma_so, sigma_a, pointer_tip_distance})
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("demonstrative model parameters must be > 0");
}

void PointingModel::validate() const {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be finite and >= 0");
}

ScoreDistribution estimate_linguistic(const SemanticMap& map, const ParsedQuery& query) {
  if (query.demonstrative_only()) return ScoreDistribution::uniform(map);

  const auto d_text = static_cast<std::size_t>(map.d_text());
  const auto d_vis = static_cast<std::size_t>(map.d_vis());
  const Embedding text = unit_copy(query.text_embedding, d_text, "query text embedding");
  const Embedding vis = unit_copy(query.vis_text_embedding, d_vis, "query vision-text embedding");

  std::vector<double> label_cos(map.size()), visual_cos(map.size());
  kernels::dot_rows(map.label_matrix(), d_text, text, label_cos);
  kernels::dot_rows(map.visual_matrix(), d_vis, vis, visual_cos);

  std::vector<double> w(map.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = shift_cosine(std::clamp(label_cos[i], -1.0, 1.0)) *
           shift_cosine(std::clamp(visual_cos[i], -1.0, 1.0));
  normalize_weights(w);
  return {ids_of(map), std::move(w)};
}

double gaussian3_pdf(const Vec3& x, const Vec3& mu, double sigma) {
  if (!x.finite() || !mu.finite() || !std::isfinite(sigma))
    throw std::domain_error("gaussian3_pdf: non-finite input");
  if (!(sigma > 0.0)) throw std::domain_error("gaussian3_pdf: sigma must be > 0");
  const double var = sigma * sigma;
  const Vec3 d = x - mu;
  return std::pow(2.0 * std::numbers::pi * var, -1.5) * std::exp(-d.dot(d) / (2.0 * var));
}

Vec3 demonstrative_mean(DemonstrativeSeries series, const UserObservation& obs, const Vec3& robot_pos,
                        const DemonstrativeModel& model) {
  switch (series) {
    case DemonstrativeSeries::SO:
      if (!robot_pos.finite()) throw std::invalid_argument("robot position is not finite");
      return robot_pos;
    case DemonstrativeSeries::KO:
      if (!obs.skeleton) throw SkeletonMissing("ko-series region needs the user's wrist");
      return obs.skeleton->wrist;
    case DemonstrativeSeries::A: {
      if (!obs.skeleton) throw SkeletonMissing("a-series region needs the user's eye and wrist");
      const Vec3 ray = obs.skeleton->wrist - obs.skeleton->eye;
      const double len = ray.norm();
      if (!(len > 0.0)) throw std::invalid_argument("eye and wrist coincide; pointing ray undefined");
      return obs.skeleton->wrist + ray * (model.pointer_tip_distance / len);
    }
    default:
      throw std::invalid_argument("series " + std::string(to_string(series)) + " has no demonstrative region");
  }
}

ScoreDistribution estimate_demonstrative(const SemanticMap& map, DemonstrativeSeries series,
                                         const UserObservation& obs, const Vec3& robot_pos,
                                         const DemonstrativeModel& model) {
  if (series == DemonstrativeSeries::DO || series == DemonstrativeSeries::NONE)
    return ScoreDistribution::uniform(map);
  Vec3 mean;
  try {
    mean = demonstrative_mean(series, obs, robot_pos, model);
  } catch (const SkeletonMissing&) {
    return ScoreDistribution::uniform(map);
  } catch (const std::invalid_argument&) {
    return ScoreDistribution::uniform(map);
  }
  const double sigma = model.sigma_for(series);

  // Densities share the normalizing constant, so only the exponent matters.
  std::vector<double> d2(map.size());
  kernels::squared_distances(map.positions(), mean, d2);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  for (double& x : d2) x = -x * inv_two_var;
  return {ids_of(map), softmax(std::move(d2))};
}

double bessel_i0(double x) {
  // I0(x) = sum_k ((x/2)^k / k!)^2; terms are positive so the loop stops once a
  // term no longer moves the sum.
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

double von_mises_pdf(double theta, double kappa) {
  if (!std::isfinite(theta)) throw std::domain_error("von_mises_pdf: non-finite angle");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::domain_error("von_mises_pdf: kappa must be >= 0");
  return std::exp(kappa * std::cos(theta)) / (2.0 * std::numbers::pi * bessel_i0(kappa));
}

double pointing_angle(const UserObservation& obs, const Vec3& object_pos) {
  if (!obs.skeleton) throw SkeletonMissing("pointing angle needs the user's eye and wrist");
  const Vec3 pointing = obs.skeleton->wrist - obs.skeleton->eye;
  const Vec3 to_object = object_pos - obs.skeleton->eye;
  const double lp = pointing.norm();
  const double lo = to_object.norm();
  if (!(lp > 0.0) || !(lo > 0.0)) throw std::invalid_argument("pointing angle: zero-length vector");
  return std::acos(std::clamp(pointing.dot(to_object) / (lp * lo), -1.0, 1.0));
}

ScoreDistribution estimate_pointing(const SemanticMap& map, const UserObservation& obs,
                                    const PointingModel& model) {
  if (!obs.pointing_available()) return ScoreDistribution::uniform(map);
  const Vec3 ray = obs.skeleton->wrist - obs.skeleton->eye;
  const double len = ray.norm();
  if (!(len > 0.0)) return ScoreDistribution::uniform(map);

  // cos(theta_n) straight from the geometry; the von Mises normalizer cancels.
  std::vector<double> cosines(map.size());
  kernels::direction_cosines(map.positions(), obs.skeleton->eye, ray * (1.0 / len), cosines);
  for (double& c : cosines) c = model.kappa * std::clamp(c, -1.0, 1.0);
  return {ids_of(map), softmax(std::move(cosines))};
}

std::vector<RankedObject> Fusion::top(std::size_t k) const {
  return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranking.size()))};
}

Fusion fuse(const ScoreDistribution& p1, const ScoreDistribution& p2, const ScoreDistribution& p3) {
  if (p1.size() == 0) throw DimensionError("fuse: empty distributions");
  if (p1.size() != p2.size() || p1.size() != p3.size() || p1.object_ids != p2.object_ids ||
      p1.object_ids != p3.object_ids || p1.object_ids.size() != p1.size())
    throw DimensionError("fuse: distributions are not aligned on the same objects");

  Fusion out;
  out.fused.object_ids = p1.object_ids;
  out.fused.p.resize(p1.size());
  const double sum = kernels::triple_product(p1.p, p2.p, p3.p, out.fused.p);
  if (sum > 0.0 && std::isfinite(sum)) {
    for (double& x : out.fused.p) x /= sum;
  } else {
    normalize_weights(out.fused.p);
  }

  std::vector<std::size_t> order(p1.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.fused.p[a] != out.fused.p[b]) return out.fused.p[a] > out.fused.p[b];
    return out.fused.object_ids[a] < out.fused.object_ids[b];
  });
  out.ranking.reserve(order.size());
  for (std::size_t i : order) out.ranking.push_back({i, out.fused.object_ids[i], out.fused.p[i]});
  return out;
}

std::vector<RankedObject> fuse_top_k(const ScoreDistribution& p1, const ScoreDistribution& p2,
                                     const ScoreDistribution& p3, std::size_t k) {
  if (k < 1) throw std::invalid_argument("top-k needs k >= 1");
  return fuse(p1, p2, p3).top(k);
}

}  // namespace exosolve
