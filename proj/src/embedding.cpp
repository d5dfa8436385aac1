#include "exosolve/embedding.hpp"

#include <httplib.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <stdexcept>
#include <unordered_set>

#include "exosolve/errors.hpp"
#include "exosolve/rng.hpp"
#include "http_util.hpp"

namespace exosolve {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool normalize_in_place(std::span<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (!(n2 > 0.0) || !std::isfinite(n2)) return false;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return true;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

Embedding toy_embed(std::string_view text, int dim, std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("toy_embed: dim must be >= 2");
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw std::invalid_argument("toy_embed: text has no tokens");

  Embedding sum(static_cast<std::size_t>(dim), 0.0);
  Embedding token_vec(static_cast<std::size_t>(dim));
  for (const auto& token : tokens) {
    Rng rng(derive_seed(seed, token));
    for (double& x : token_vec) x = rng.normal();
    normalize_in_place(token_vec);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += token_vec[i];
  }
  if (!normalize_in_place(sum)) {
    // Tokens cancelled exactly; astronomically unlikely but keep the output unit-norm.
    sum.assign(sum.size(), 0.0);
    sum[0] = 1.0;
  }
  return sum;
}

ToyEmbeddingProvider::ToyEmbeddingProvider(int text_dim, int vision_dim, std::uint64_t text_seed,
                                           std::uint64_t vision_seed)
    : text_dim_(text_dim), vision_dim_(vision_dim), text_seed_(text_seed), vision_seed_(vision_seed) {
  if (text_dim < 2 || vision_dim < 2) throw ConfigError("embedding dimensions must be >= 2");
}

bool ToyEmbeddingProvider::is_function_word(std::string_view token) {
  static const std::unordered_set<std::string_view> words{
      // English request scaffolding
      "a", "an", "the", "me", "i", "you", "it", "its", "is", "are", "was", "be", "please", "bring",
      "get", "give", "take", "fetch", "hand", "pass", "grab", "can", "could", "would", "will", "to",
      "for", "of", "and", "or", "one", "thing", "object", "want", "need", "over", "there", "here",
      "this", "that", "these", "those", "which", "what", "with", "on", "in", "at", "my", "your",
      // romanized Japanese demonstratives and particles
      "kore", "kono", "koko", "kocchi", "sore", "sono", "soko", "socchi", "ano", "asoko", "acchi",
      "dore", "dono", "doko", "docchi", "wo", "o", "wa", "ga", "no", "ni", "de", "motte", "kite",
      "kudasai", "totte", "desu"};
  return words.contains(token);
}

std::string ToyEmbeddingProvider::content_words(std::string_view text) const {
  std::string content;
  for (const auto& token : tokenize(text)) {
    if (is_function_word(token)) continue;
    if (!content.empty()) content.push_back(' ');
    content += token;
  }
  return content.empty() ? std::string(text) : content;
}

Embedding ToyEmbeddingProvider::embed_text(std::string_view text) const {
  return toy_embed(content_words(text), text_dim_, text_seed_);
}

Embedding ToyEmbeddingProvider::embed_text_for_vision(std::string_view text) const {
  return toy_embed(content_words(text), vision_dim_, vision_seed_);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, int text_dim, int vision_dim)
    : base_url_(std::move(base_url)), text_dim_(text_dim), vision_dim_(vision_dim) {}

std::unique_ptr<HttpEmbeddingProvider> HttpEmbeddingProvider::from_env(int text_dim, int vision_dim) {
  const char* endpoint = std::getenv("EXOSOLVE_EMBED_ENDPOINT");
  if (!endpoint || !*endpoint) return nullptr;
  return std::make_unique<HttpEmbeddingProvider>(endpoint, text_dim, vision_dim);
}

Embedding HttpEmbeddingProvider::embed_text(std::string_view text) const {
  return request(text, "text", text_dim_);
}

Embedding HttpEmbeddingProvider::embed_text_for_vision(std::string_view text) const {
  return request(text, "vision", vision_dim_);
}

Embedding HttpEmbeddingProvider::request(std::string_view text, std::string_view space,
                                         int dim) const {
  const auto [host, prefix] = detail::split_url(base_url_);
  httplib::Client client(host);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  const nlohmann::json body{{"text", text}, {"space", space}};
  auto res = client.Post(prefix + "/embed", body.dump(), "application/json");
  if (!res) throw TransportError("embedding endpoint " + base_url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("embedding endpoint returned HTTP " + std::to_string(res->status));
  Embedding v;
  try {
    v = nlohmann::json::parse(res->body).at("vector").get<Embedding>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("embedding endpoint: malformed response: ") + e.what());
  }
  if (static_cast<int>(v.size()) != dim)
    throw TransportError("embedding endpoint returned dimension " + std::to_string(v.size()) +
                         ", expected " + std::to_string(dim));
  if (!normalize_in_place(v)) throw TransportError("embedding endpoint returned a zero vector");
  return v;
}

}  // namespace exosolve
