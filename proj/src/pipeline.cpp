#include "exosolve/pipeline.hpp"

#include "exosolve/errors.hpp"

namespace exosolve {

void EstimatorParams::validate() const {
  demonstrative.validate();
  pointing.validate();
  if (top_k < 1) throw ConfigError("topk must be >= 1");
}

Pipeline::Pipeline(const SemanticMap& map, const EmbeddingProvider& provider, const Lexicon& lexicon,
                   EstimatorParams params)
    : map_(map), provider_(provider), lexicon_(lexicon), params_(params), vocabulary_(map.class_labels()) {
  params_.validate();
  if (provider.text_dim() != map.d_text() || provider.vision_dim() != map.d_vis())
    throw DimensionError("embedding provider dimensions (" + std::to_string(provider.text_dim()) + ", " +
                         std::to_string(provider.vision_dim()) + ") do not match the map (" +
                         std::to_string(map.d_text()) + ", " + std::to_string(map.d_vis()) + ")");
}

ParsedQuery Pipeline::parse(std::string_view text) const {
  return parse_query(text, provider_, lexicon_, vocabulary_);
}

Estimates Pipeline::estimate(const ParsedQuery& query, const UserObservation& obs, const Vec3& robot_pos) const {
  Estimates e;
  e.p1 = estimate_linguistic(map_, query);
  e.p2 = estimate_demonstrative(map_, query.series, obs, robot_pos, params_.demonstrative);
  e.p3 = estimate_pointing(map_, obs, params_.pointing);
  e.fusion = fuse(e.p1, e.p2, e.p3);

  try {
    e.region_mean = demonstrative_mean(query.series, obs, robot_pos, params_.demonstrative);
    e.region_sigma = params_.demonstrative.sigma_for(query.series);
  } catch (const std::exception&) {
    e.region_mean.reset();
  }

  for (const auto& r : e.fusion.top(params_.top_k)) {
    const ObjectEntry& obj = map_.at(r.index);
    e.shortlist.push_back({obj.id, obj.class_label, r.probability, obj.image_ref, obj.features,
                           e.p1.p[r.index], e.p2.p[r.index], e.p3.p[r.index]});
  }
  return e;
}

Reestimator Pipeline::reestimator(const UserObservation& obs, const Vec3& robot_pos) const {
  return [this, obs, robot_pos](const std::string& augmented_text) {
    ParsedQuery q = parse(augmented_text);
    Estimates e = estimate(q, obs, robot_pos);
    return Reestimate{std::move(q), std::move(e.shortlist)};
  };
}

}  // namespace exosolve
