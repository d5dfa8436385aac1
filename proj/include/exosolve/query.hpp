#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "exosolve/embedding.hpp"

namespace exosolve {

enum class DemonstrativeSeries { KO, SO, A, DO, NONE };

std::string_view to_string(DemonstrativeSeries s);
/// Accepts "KO"/"SO"/"A"/"DO"/"NONE" (case-insensitive).
std::optional<DemonstrativeSeries> series_from_string(std::string_view s);

/// Surface-form tables driving the rule-based query analysis.
///
/// Demonstrative patterns are token sequences; "..." inside a pattern is a gap,
/// so "that ... over there" matches "that" followed anywhere later by "over there".
class Lexicon {
 public:
  /// English and romanized-Japanese defaults.
  static Lexicon defaults();
  /// Defaults overlaid with the sections present in the file
  /// ("demonstratives", "class_aliases", "features", "translations").
  static Lexicon load(const std::filesystem::path& path);
  static Lexicon from_json(const nlohmann::json& doc);

  void set_demonstrative(std::string_view pattern, DemonstrativeSeries series);
  void set_class_alias(std::string_view phrase, std::string canonical_class);
  void set_feature(std::string_view surface, std::string canonical);
  void set_translation(std::string_view source_token, std::string target_phrase);

  struct Pattern {
    std::vector<std::vector<std::string>> parts;  // split on "..."
    DemonstrativeSeries series;
    std::size_t token_count() const;
  };

  const std::vector<Pattern>& demonstratives() const { return demonstratives_; }
  const std::map<std::string, std::string>& class_aliases() const { return class_aliases_; }
  const std::map<std::string, std::string>& features() const { return features_; }
  const std::map<std::string, std::string>& translations() const { return translations_; }

 private:
  std::vector<Pattern> demonstratives_;
  std::map<std::string, std::string> class_aliases_;
  std::map<std::string, std::string> features_;
  std::map<std::string, std::string> translations_;
};

/// Series of the first demonstrative in the text; NONE when nothing matches.
/// At one position the pattern with the most tokens wins.
DemonstrativeSeries extract_demonstrative(std::string_view text, const Lexicon& lexicon);

/// Translation stand-in: lowercase tokens, dictionary substitution, single spaces.
std::string normalize_text(std::string_view text, const Lexicon& lexicon);

enum class QueryLevel { L1 = 1, L2 = 2, L3 = 3 };

struct ParsedQuery {
  std::string raw_text;
  std::string normalized_text;
  DemonstrativeSeries series = DemonstrativeSeries::NONE;
  std::optional<std::string> class_term;
  std::vector<std::string> feature_terms;
  Embedding text_embedding;
  Embedding vis_text_embedding;
  /// Evaluation metadata; inferred from the extracted terms unless the caller overrides it.
  QueryLevel level = QueryLevel::L3;

  /// No class and no feature content: only the demonstrative carries information.
  bool demonstrative_only() const { return !class_term && feature_terms.empty(); }
};

/// First class mention: alias phrases always apply; plain class names (and their
/// "s" plurals) only when a vocabulary is supplied. Longest phrase wins at a position.
std::optional<std::string> extract_class_term(std::string_view normalized_text, const Lexicon& lexicon,
                                              std::span<const std::string> class_vocabulary);

/// Canonical feature words in order of first appearance, deduplicated.
std::vector<std::string> extract_feature_terms(std::string_view normalized_text, const Lexicon& lexicon);

/// Throws std::invalid_argument for blank text; provider errors propagate with
/// the query text prepended.
ParsedQuery parse_query(std::string_view text, const EmbeddingProvider& provider, const Lexicon& lexicon,
                        std::span<const std::string> class_vocabulary = {});

}  // namespace exosolve
