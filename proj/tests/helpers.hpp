#pragma once

#include <string>
#include <vector>

#include "exosolve/semantic_map.hpp"

namespace exosolve::test {

struct ObjSpec {
  std::string id;
  std::string class_label;
  Vec3 position;
  std::vector<std::string> features = {};
};

inline constexpr int kDim = 32;

/// Map whose embeddings come from the toy provider at kDim.
inline SemanticMap make_map(const std::vector<ObjSpec>& specs) {
  const ToyEmbeddingProvider toy(kDim, kDim);
  std::vector<ObjectEntry> objects;
  for (const auto& s : specs) {
    ObjectEntry e;
    e.id = s.id;
    e.class_label = s.class_label;
    e.position = s.position;
    e.features = s.features;
    e.label_embedding = toy.embed_text(s.class_label);
    std::string vis;
    for (const auto& f : s.features) vis += f + " ";
    e.visual_embedding = toy.embed_text_for_vision(vis + s.class_label);
    objects.push_back(std::move(e));
  }
  return SemanticMap("map", kDim, kDim, std::move(objects));
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace exosolve::test
