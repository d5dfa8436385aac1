#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exosolve {

using Embedding = std::vector<double>;

/// Lowercased ASCII alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Scales v to unit L2 norm in place. Returns false (leaving v untouched) for a zero vector.
bool normalize_in_place(std::span<double> v);

double cosine(std::span<const double> a, std::span<const double> b);

/// Deterministic hash-seeded embedding: every token maps to a fixed random unit
/// vector, the text embedding is the normalized mean of its token vectors.
/// Throws std::invalid_argument for dim < 2 or text without tokens.
Embedding toy_embed(std::string_view text, int dim, std::uint64_t seed);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Sentence-encoder space, compared against object label embeddings.
  virtual Embedding embed_text(std::string_view text) const = 0;
  /// Vision-language text space, compared against object visual embeddings.
  virtual Embedding embed_text_for_vision(std::string_view text) const = 0;
  virtual int text_dim() const = 0;
  virtual int vision_dim() const = 0;
};

/// Backs both spaces with toy_embed under distinct seeds. Function words are
/// dropped before embedding so that sentences score against their content words;
/// text made only of function words is embedded as-is. Safe for concurrent use.
class ToyEmbeddingProvider final : public EmbeddingProvider {
 public:
  static constexpr std::uint64_t kDefaultTextSeed = 0x5eed'0001;
  static constexpr std::uint64_t kDefaultVisionSeed = 0x5eed'0002;

  ToyEmbeddingProvider(int text_dim, int vision_dim, std::uint64_t text_seed = kDefaultTextSeed,
                       std::uint64_t vision_seed = kDefaultVisionSeed);

  Embedding embed_text(std::string_view text) const override;
  Embedding embed_text_for_vision(std::string_view text) const override;
  int text_dim() const override { return text_dim_; }
  int vision_dim() const override { return vision_dim_; }

  static bool is_function_word(std::string_view token);

 private:
  std::string content_words(std::string_view text) const;

  int text_dim_;
  int vision_dim_;
  std::uint64_t text_seed_;
  std::uint64_t vision_seed_;
};

/// Client for an external service: POST {base}/embed {"text":..,"space":"text"|"vision"}
/// -> {"vector":[..]}. Returned vectors are normalized; a dimension other than the
/// declared one is a TransportError. Each call opens its own connection.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string base_url, int text_dim, int vision_dim);

  /// Reads EXOSOLVE_EMBED_ENDPOINT; nullptr when unset.
  static std::unique_ptr<HttpEmbeddingProvider> from_env(int text_dim, int vision_dim);

  Embedding embed_text(std::string_view text) const override;
  Embedding embed_text_for_vision(std::string_view text) const override;
  int text_dim() const override { return text_dim_; }
  int vision_dim() const override { return vision_dim_; }

 private:
  Embedding request(std::string_view text, std::string_view space, int dim) const;

  std::string base_url_;
  int text_dim_;
  int vision_dim_;
};

}  // namespace exosolve
