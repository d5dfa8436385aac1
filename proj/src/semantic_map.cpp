#include "exosolve/semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "exosolve/errors.hpp"
#include "exosolve/rng.hpp"

namespace exosolve {
namespace {

// Vectors already within this of unit squared norm are kept bit-for-bit, which
// makes save/load a fixed point.
constexpr double kUnitTolerance = 1e-12;

void normalize_embedding(Embedding& v, const std::string& id, const char* which) {
  double n2 = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("object " + id + ": non-finite " + which);
    n2 += x * x;
  }
  if (std::abs(n2 - 1.0) <= kUnitTolerance) return;
  if (!normalize_in_place(v)) throw ValidationError("object " + id + ": zero " + which);
}

}  // namespace

SemanticMap::SemanticMap(std::string frame_id, int d_text, int d_vis, std::vector<ObjectEntry> objects)
    : frame_id_(std::move(frame_id)), d_text_(d_text), d_vis_(d_vis), objects_(std::move(objects)) {
  if (objects_.empty()) throw ValidationError("semantic map has no objects");
  if (d_text_ < 1 || d_vis_ < 1) throw ValidationError("embedding dimensions must be positive");

  std::unordered_set<std::string> seen;
  for (auto& obj : objects_) {
    if (obj.id.empty()) throw ValidationError("object with empty id");
    if (!seen.insert(obj.id).second) throw ValidationError("duplicate object id \"" + obj.id + "\"");
    if (!obj.position.finite()) throw ValidationError("object " + obj.id + ": non-finite position");
    if (static_cast<int>(obj.label_embedding.size()) != d_text_)
      throw ValidationError("object " + obj.id + ": label_embedding has dimension " +
                            std::to_string(obj.label_embedding.size()) + ", map declares " +
                            std::to_string(d_text_));
    if (static_cast<int>(obj.visual_embedding.size()) != d_vis_)
      throw ValidationError("object " + obj.id + ": visual_embedding has dimension " +
                            std::to_string(obj.visual_embedding.size()) + ", map declares " +
                            std::to_string(d_vis_));
    normalize_embedding(obj.label_embedding, obj.id, "label_embedding");
    normalize_embedding(obj.visual_embedding, obj.id, "visual_embedding");
  }

  const std::size_t n = objects_.size();
  xs_.reserve(n);
  ys_.reserve(n);
  zs_.reserve(n);
  label_rows_.reserve(n * static_cast<std::size_t>(d_text_));
  visual_rows_.reserve(n * static_cast<std::size_t>(d_vis_));
  for (const auto& obj : objects_) {
    xs_.push_back(obj.position.x);
    ys_.push_back(obj.position.y);
    zs_.push_back(obj.position.z);
    label_rows_.insert(label_rows_.end(), obj.label_embedding.begin(), obj.label_embedding.end());
    visual_rows_.insert(visual_rows_.end(), obj.visual_embedding.begin(), obj.visual_embedding.end());
  }
}

std::optional<std::size_t> SemanticMap::find(std::string_view id) const {
  for (std::size_t i = 0; i < objects_.size(); ++i)
    if (objects_[i].id == id) return i;
  return std::nullopt;
}

std::vector<std::string> SemanticMap::class_labels() const {
  std::vector<std::string> labels;
  for (const auto& obj : objects_)
    if (std::find(labels.begin(), labels.end(), obj.class_label) == labels.end())
      labels.push_back(obj.class_label);
  return labels;
}

nlohmann::json map_to_json(const SemanticMap& map) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& obj : map.objects()) {
    nlohmann::json o{{"id", obj.id},
                     {"class_label", obj.class_label},
                     {"position", {obj.position.x, obj.position.y, obj.position.z}},
                     {"label_embedding", obj.label_embedding},
                     {"visual_embedding", obj.visual_embedding},
                     {"image_ref", obj.image_ref ? nlohmann::json(*obj.image_ref) : nlohmann::json()}};
    if (!obj.features.empty()) o["features"] = obj.features;
    objects.push_back(std::move(o));
  }
  return {{"frame_id", map.frame_id()},
          {"d_text", map.d_text()},
          {"d_vis", map.d_vis()},
          {"objects", std::move(objects)}};
}

SemanticMap map_from_json(const nlohmann::json& doc) {
  std::string frame_id;
  int d_text = 0, d_vis = 0;
  std::vector<ObjectEntry> objects;
  try {
    frame_id = doc.at("frame_id").get<std::string>();
    d_text = doc.at("d_text").get<int>();
    d_vis = doc.at("d_vis").get<int>();
    for (const auto& o : doc.at("objects")) {
      ObjectEntry e;
      e.id = o.at("id").get<std::string>();
      e.class_label = o.at("class_label").get<std::string>();
      const auto pos = o.at("position").get<std::vector<double>>();
      if (pos.size() != 3) throw ParseError("object " + e.id + ": position must have 3 components");
      e.position = {pos[0], pos[1], pos[2]};
      e.label_embedding = o.at("label_embedding").get<Embedding>();
      e.visual_embedding = o.at("visual_embedding").get<Embedding>();
      if (auto it = o.find("image_ref"); it != o.end() && !it->is_null())
        e.image_ref = it->get<std::string>();
      if (auto it = o.find("features"); it != o.end() && !it->is_null())
        e.features = it->get<std::vector<std::string>>();
      objects.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("map schema: ") + e.what());
  }
  return SemanticMap(std::move(frame_id), d_text, d_vis, std::move(objects));
}

SemanticMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open map file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return map_from_json(doc);
}

void save_map(const SemanticMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file " + path.string());
  out << map_to_json(map).dump(1) << '\n';
}

const std::vector<std::string>& default_class_vocabulary() {
  static const std::vector<std::string> vocab{
      "cup",       "book",          "bottle",     "stuffed animal", "doll",        "bowl",
      "plate",     "remote control", "pillow",    "chair",          "bed",         "sofa",
      "table",     "lamp",          "clock",      "vase",           "towel",       "basket",
      "box",       "bag",           "shoe",       "hat",            "umbrella",    "laptop",
      "phone",     "keyboard",      "mouse",      "speaker",        "camera",      "toothbrush",
      "mug",       "kettle",        "pan",        "spoon",          "scissors",    "glasses",
      "backpack",  "potted plant",  "trash can",  "guitar",         "ball",        "candle",
      "notebook",  "pen",           "headphones", "wallet",         "watch",       "cushion"};
  return vocab;
}

Embedding synthetic_visual_embedding(const EmbeddingProvider& embedder, const std::string& class_label,
                                     const std::vector<std::string>& features, double noise_weight, Rng& rng) {
  std::string text;
  for (const auto& f : features) text += f + " ";
  Embedding v = embedder.embed_text_for_vision(text + class_label);
  if (noise_weight > 0.0) {
    Embedding noise(v.size());
    for (double& x : noise) x = rng.normal();
    normalize_in_place(noise);
    for (std::size_t k = 0; k < noise.size(); ++k) v[k] += noise_weight * noise[k];
    normalize_in_place(v);
  }
  return v;
}

SemanticMap generate_synthetic_map(const SceneGenConfig& config, std::uint64_t seed) {
  const auto& vocab = config.vocabulary.empty() ? default_class_vocabulary() : config.vocabulary;
  if (config.object_count < 1) throw ConfigError("object count must be >= 1");
  if (vocab.empty()) throw ConfigError("class vocabulary is empty");
  if (config.class_count < 1 || config.class_count > static_cast<int>(vocab.size()))
    throw ConfigError("class count must be in [1, " + std::to_string(vocab.size()) + "]");
  if (config.class_count > config.object_count)
    throw ConfigError("class count exceeds object count");
  if (config.max_same_class < 1 ||
      static_cast<long>(config.max_same_class) * config.class_count < config.object_count)
    throw ConfigError("max_same_class too small to place every object");
  if (config.colors.empty() || config.sizes.empty()) throw ConfigError("feature pools are empty");
  if (!(config.room.width > 0 && config.room.depth > 0 && config.room.height > 0))
    throw ConfigError("room bounds must be positive");

  Rng rng(derive_seed(seed, "scene"));
  const auto n_classes = static_cast<std::size_t>(config.class_count);

  // Every class appears once; the rest are same-class duplicates under the cap.
  std::vector<std::size_t> class_of;
  std::vector<int> counts(n_classes, 0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    class_of.push_back(c);
    counts[c] = 1;
  }
  while (class_of.size() < static_cast<std::size_t>(config.object_count)) {
    const auto c = static_cast<std::size_t>(rng.below(n_classes));
    if (counts[c] >= config.max_same_class) continue;
    ++counts[c];
    class_of.push_back(c);
  }
  // Shuffle so ids do not encode class (Fisher-Yates over our own draws).
  for (std::size_t i = class_of.size(); i > 1; --i)
    std::swap(class_of[i - 1], class_of[static_cast<std::size_t>(rng.below(i))]);

  const ToyEmbeddingProvider embedder(config.d_text, config.d_vis);
  const int id_width = std::max(3, static_cast<int>(std::to_string(config.object_count - 1).size()));

  std::vector<ObjectEntry> objects;
  objects.reserve(class_of.size());
  for (std::size_t i = 0; i < class_of.size(); ++i) {
    ObjectEntry e;
    std::string num = std::to_string(i);
    e.id = "obj_" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
    e.class_label = vocab[class_of[i]];
    e.position = {rng.uniform(0.0, config.room.width), rng.uniform(0.0, config.room.depth),
                  rng.uniform(0.0, 0.8 * config.room.height)};
    e.features = {config.colors[rng.below(config.colors.size())],
                  config.sizes[rng.below(config.sizes.size())]};

    e.label_embedding = embedder.embed_text(e.class_label);
    e.visual_embedding = synthetic_visual_embedding(embedder, e.class_label, e.features, config.visual_noise, rng);
    objects.push_back(std::move(e));
  }
  return SemanticMap("map", config.d_text, config.d_vis, std::move(objects));
}

nlohmann::json embed_map_document(nlohmann::json doc, const EmbeddingProvider& provider) {
  if (!doc.is_object() || !doc.contains("objects") || !doc["objects"].is_array())
    throw ParseError("map document needs an objects array");
  if (!doc.contains("frame_id")) doc["frame_id"] = "map";
  if (!doc.contains("d_text")) doc["d_text"] = provider.text_dim();
  if (!doc.contains("d_vis")) doc["d_vis"] = provider.vision_dim();
  for (auto& o : doc["objects"]) {
    const auto cls = o.at("class_label").get<std::string>();
    std::string visual_text;
    for (const auto& f : o.value("features", std::vector<std::string>{})) visual_text += f + " ";
    visual_text += cls;
    if (!o.contains("label_embedding")) o["label_embedding"] = provider.embed_text(cls);
    if (!o.contains("visual_embedding")) o["visual_embedding"] = provider.embed_text_for_vision(visual_text);
  }
  return doc;
}

}  // namespace exosolve
