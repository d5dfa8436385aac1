#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exosolve/embedding.hpp"
#include "exosolve/kernels.hpp"
#include "exosolve/rng.hpp"
#include "exosolve/vec3.hpp"

namespace exosolve {

struct ObjectEntry {
  std::string id;
  std::string class_label;
  Vec3 position;
  Embedding label_embedding;
  Embedding visual_embedding;
  std::optional<std::string> image_ref;
  /// Attribute words visible on the object (color, size, ...). Stands in for
  /// what a resolver would read off the object image.
  std::vector<std::string> features;

  bool operator==(const ObjectEntry&) const = default;
};

/// Immutable collection of map objects. Construction validates every invariant
/// and normalizes embeddings; estimators read the contiguous views.
class SemanticMap {
 public:
  /// Throws ValidationError on empty input, dimension mismatch, duplicate id,
  /// non-finite position or zero embedding.
  SemanticMap(std::string frame_id, int d_text, int d_vis, std::vector<ObjectEntry> objects);

  const std::string& frame_id() const { return frame_id_; }
  int d_text() const { return d_text_; }
  int d_vis() const { return d_vis_; }
  std::size_t size() const { return objects_.size(); }
  const std::vector<ObjectEntry>& objects() const { return objects_; }
  const ObjectEntry& at(std::size_t i) const { return objects_.at(i); }

  /// Index of the object with this id, if any.
  std::optional<std::size_t> find(std::string_view id) const;

  /// Distinct class labels in first-appearance order.
  std::vector<std::string> class_labels() const;

  kernels::PositionsView positions() const { return {xs_, ys_, zs_}; }
  /// Row-major size() x d_text() matrix of label embeddings.
  std::span<const double> label_matrix() const { return label_rows_; }
  /// Row-major size() x d_vis() matrix of visual embeddings.
  std::span<const double> visual_matrix() const { return visual_rows_; }

  bool operator==(const SemanticMap& o) const {
    return frame_id_ == o.frame_id_ && d_text_ == o.d_text_ && d_vis_ == o.d_vis_ &&
           objects_ == o.objects_;
  }

 private:
  std::string frame_id_;
  int d_text_;
  int d_vis_;
  std::vector<ObjectEntry> objects_;
  std::vector<double> xs_, ys_, zs_;
  std::vector<double> label_rows_, visual_rows_;
};

nlohmann::json map_to_json(const SemanticMap& map);
/// Throws ParseError for missing/ill-typed fields, ValidationError for semantic violations.
SemanticMap map_from_json(const nlohmann::json& doc);

SemanticMap load_map(const std::filesystem::path& path);

/// Fills absent label/visual embeddings of a hand-written map document from the
/// class label and the feature words, and absent d_text/d_vis from the provider.
nlohmann::json embed_map_document(nlohmann::json doc, const EmbeddingProvider& provider);
void save_map(const SemanticMap& map, const std::filesystem::path& path);

struct RoomBounds {
  double width = 8.0;   // x
  double depth = 6.0;   // y
  double height = 2.5;  // z
};

struct SceneGenConfig {
  int object_count = 114;
  int class_count = 39;
  /// Candidate class labels; the first class_count are used. Empty selects the
  /// built-in household vocabulary.
  std::vector<std::string> vocabulary;
  RoomBounds room;
  /// Distractor policy: at most this many same-class instances per class.
  int max_same_class = 6;
  /// Feature words drawn per object: one color, one size.
  std::vector<std::string> colors{"red", "blue", "green", "yellow", "white", "black", "pink", "brown"};
  std::vector<std::string> sizes{"small", "large"};
  /// Weight of per-object noise mixed into visual embeddings (0 = clean).
  double visual_noise = 0.35;
  int d_text = 64;
  int d_vis = 64;
};

const std::vector<std::string>& default_class_vocabulary();

/// Vision embedding of "features... class" with a random unit vector mixed in at
/// the given weight, renormalized.
Embedding synthetic_visual_embedding(const EmbeddingProvider& embedder, const std::string& class_label,
                                     const std::vector<std::string>& features, double noise_weight, Rng& rng);

/// Deterministic for (config, seed). Embeddings come from ToyEmbeddingProvider
/// with its default seeds: label = class label, visual = features + class label
/// plus seeded noise. Throws ConfigError for an unusable config.
SemanticMap generate_synthetic_map(const SceneGenConfig& config, std::uint64_t seed);

}  // namespace exosolve
