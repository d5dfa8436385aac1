#include "exosolve/query.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "exosolve/errors.hpp"

namespace exosolve {

std::string_view to_string(DemonstrativeSeries s) {
  switch (s) {
    case DemonstrativeSeries::KO: return "KO";
    case DemonstrativeSeries::SO: return "SO";
    case DemonstrativeSeries::A: return "A";
    case DemonstrativeSeries::DO: return "DO";
    case DemonstrativeSeries::NONE: return "NONE";
  }
  return "NONE";
}

std::optional<DemonstrativeSeries> series_from_string(std::string_view s) {
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "KO") return DemonstrativeSeries::KO;
  if (up == "SO") return DemonstrativeSeries::SO;
  if (up == "A") return DemonstrativeSeries::A;
  if (up == "DO") return DemonstrativeSeries::DO;
  if (up == "NONE") return DemonstrativeSeries::NONE;
  return std::nullopt;
}

std::size_t Lexicon::Pattern::token_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.size();
  return n;
}

void Lexicon::set_demonstrative(std::string_view pattern, DemonstrativeSeries series) {
  Pattern p{{}, series};
  std::vector<std::string> part;
  // "..." must be detected before tokenizing since tokenize drops punctuation.
  std::string_view rest = pattern;
  while (true) {
    const auto gap = rest.find("...");
    const auto chunk = rest.substr(0, gap);
    auto tokens = tokenize(chunk);
    if (!tokens.empty()) p.parts.push_back(std::move(tokens));
    if (gap == std::string_view::npos) break;
    rest = rest.substr(gap + 3);
  }
  if (p.parts.empty()) throw ConfigError("empty demonstrative pattern");
  std::erase_if(demonstratives_, [&](const Pattern& q) { return q.parts == p.parts; });
  demonstratives_.push_back(std::move(p));
}

namespace {

std::string join_tokens(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

void Lexicon::set_class_alias(std::string_view phrase, std::string canonical_class) {
  class_aliases_[join_tokens(phrase)] = std::move(canonical_class);
}

void Lexicon::set_feature(std::string_view surface, std::string canonical) {
  features_[join_tokens(surface)] = std::move(canonical);
}

void Lexicon::set_translation(std::string_view source_token, std::string target_phrase) {
  translations_[join_tokens(source_token)] = join_tokens(target_phrase);
}

Lexicon Lexicon::defaults() {
  using S = DemonstrativeSeries;
  Lexicon lx;
  for (auto w : {"kore", "kono", "koko", "kocchi", "kochira", "konna"}) lx.set_demonstrative(w, S::KO);
  for (auto w : {"sore", "sono", "soko", "socchi", "sochira", "sonna"}) lx.set_demonstrative(w, S::SO);
  for (auto w : {"are", "ano", "asoko", "acchi", "achira", "anna"}) lx.set_demonstrative(w, S::A);
  for (auto w : {"dore", "dono", "doko", "docchi", "dochira", "donna"}) lx.set_demonstrative(w, S::DO);
  // English: "that" defaults to the listener-proximal reading; distal needs "over there".
  lx.set_demonstrative("this", S::KO);
  lx.set_demonstrative("these", S::KO);
  lx.set_demonstrative("that", S::SO);
  lx.set_demonstrative("those", S::SO);
  lx.set_demonstrative("that ... over there", S::A);
  lx.set_demonstrative("those ... over there", S::A);
  lx.set_demonstrative("which", S::DO);

  for (auto a : {"stuffed pig", "stuffed bear", "stuffed rabbit", "stuffed dog", "stuffed toy",
                 "teddy bear", "plush", "plushie", "stuffed animals"})
    lx.set_class_alias(a, "stuffed animal");
  for (auto a : {"pet bottle", "plastic bottle"}) lx.set_class_alias(a, "bottle");
  for (auto a : {"cell phone", "smartphone", "mobile phone"}) lx.set_class_alias(a, "phone");
  lx.set_class_alias("remote", "remote control");
  lx.set_class_alias("couch", "sofa");
  lx.set_class_alias("plant", "potted plant");
  for (auto a : {"trash bin", "garbage can", "dustbin"}) lx.set_class_alias(a, "trash can");

  for (auto f : {"red", "blue", "green", "yellow", "white", "black", "pink", "brown", "orange",
                 "purple", "gray", "silver", "gold", "small", "large", "tall", "short", "round",
                 "square", "rectangular", "long", "flat", "striped", "dotted", "plain", "wooden",
                 "metal", "pig", "bear", "rabbit", "dog", "cat"})
    lx.set_feature(f, f);
  lx.set_feature("grey", "gray");
  lx.set_feature("big", "large");
  lx.set_feature("huge", "large");
  lx.set_feature("little", "small");
  lx.set_feature("tiny", "small");

  // A few romanized nouns/adjectives so Japanese-style queries normalize to English.
  lx.set_translation("koppu", "cup");
  lx.set_translation("hon", "book");
  lx.set_translation("nuigurumi", "stuffed animal");
  lx.set_translation("ningyou", "doll");
  lx.set_translation("akai", "red");
  lx.set_translation("aoi", "blue");
  lx.set_translation("shiroi", "white");
  lx.set_translation("kuroi", "black");
  lx.set_translation("ookii", "large");
  lx.set_translation("chiisai", "small");
  return lx;
}

Lexicon Lexicon::from_json(const nlohmann::json& doc) {
  Lexicon lx = defaults();
  try {
    if (auto it = doc.find("demonstratives"); it != doc.end()) {
      for (const auto& [pattern, value] : it->items()) {
        const auto series = series_from_string(value.get<std::string>());
        if (!series) throw ConfigError("lexicon: unknown series \"" + value.get<std::string>() + "\"");
        lx.set_demonstrative(pattern, *series);
      }
    }
    if (auto it = doc.find("class_aliases"); it != doc.end())
      for (const auto& [phrase, cls] : it->items()) lx.set_class_alias(phrase, cls.get<std::string>());
    if (auto it = doc.find("features"); it != doc.end()) {
      if (it->is_array()) {
        for (const auto& f : *it) lx.set_feature(f.get<std::string>(), f.get<std::string>());
      } else {
        for (const auto& [surface, canon] : it->items()) lx.set_feature(surface, canon.get<std::string>());
      }
    }
    if (auto it = doc.find("translations"); it != doc.end())
      for (const auto& [src, dst] : it->items()) lx.set_translation(src, dst.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("lexicon: ") + e.what());
  }
  return lx;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

bool match_at(const std::vector<std::string>& tokens, std::size_t pos, const std::vector<std::string>& seq) {
  if (pos + seq.size() > tokens.size()) return false;
  return std::equal(seq.begin(), seq.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos));
}

bool pattern_matches(const std::vector<std::string>& tokens, std::size_t pos, const Lexicon::Pattern& p) {
  if (!match_at(tokens, pos, p.parts.front())) return false;
  std::size_t cursor = pos + p.parts.front().size();
  for (std::size_t k = 1; k < p.parts.size(); ++k) {
    bool found = false;
    for (std::size_t j = cursor; j < tokens.size(); ++j) {
      if (match_at(tokens, j, p.parts[k])) {
        cursor = j + p.parts[k].size();
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

std::string join_range(const std::vector<std::string>& tokens, std::size_t pos, std::size_t len) {
  std::string out;
  for (std::size_t k = pos; k < pos + len; ++k) {
    if (k > pos) out.push_back(' ');
    out += tokens[k];
  }
  return out;
}

constexpr std::size_t kMaxPhraseTokens = 3;

}  // namespace

DemonstrativeSeries extract_demonstrative(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Lexicon::Pattern* best = nullptr;
    for (const auto& p : lexicon.demonstratives())
      if (pattern_matches(tokens, i, p) && (!best || p.token_count() > best->token_count())) best = &p;
    if (best) return best->series;
  }
  return DemonstrativeSeries::NONE;
}

std::string normalize_text(std::string_view text, const Lexicon& lexicon) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    const auto it = lexicon.translations().find(t);
    if (!out.empty()) out.push_back(' ');
    out += it == lexicon.translations().end() ? t : it->second;
  }
  return out;
}

std::optional<std::string> extract_class_term(std::string_view normalized_text, const Lexicon& lexicon,
                                              std::span<const std::string> class_vocabulary) {
  const auto tokens = tokenize(normalized_text);
  std::vector<std::string> vocab;
  for (const auto& c : class_vocabulary) vocab.push_back(join_tokens(c));

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t len = std::min(kMaxPhraseTokens, tokens.size() - i); len >= 1; --len) {
      const auto phrase = join_range(tokens, i, len);
      if (auto it = lexicon.class_aliases().find(phrase); it != lexicon.class_aliases().end())
        return it->second;
      for (std::size_t c = 0; c < vocab.size(); ++c)
        if (phrase == vocab[c] || phrase == vocab[c] + "s") return class_vocabulary[c];
    }
  }
  return std::nullopt;
}

std::vector<std::string> extract_feature_terms(std::string_view normalized_text, const Lexicon& lexicon) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(normalized_text)) {
    const auto it = lexicon.features().find(t);
    if (it != lexicon.features().end() && std::find(out.begin(), out.end(), it->second) == out.end())
      out.push_back(it->second);
  }
  return out;
}

ParsedQuery parse_query(std::string_view text, const EmbeddingProvider& provider, const Lexicon& lexicon,
                        std::span<const std::string> class_vocabulary) {
  if (tokenize(text).empty()) throw std::invalid_argument("query text is empty");

  ParsedQuery q;
  q.raw_text = std::string(text);
  q.normalized_text = normalize_text(text, lexicon);
  q.series = extract_demonstrative(text, lexicon);
  if (q.series == DemonstrativeSeries::NONE) q.series = extract_demonstrative(q.normalized_text, lexicon);
  q.class_term = extract_class_term(q.normalized_text, lexicon, class_vocabulary);
  q.feature_terms = extract_feature_terms(q.normalized_text, lexicon);
  q.level = q.demonstrative_only() ? QueryLevel::L3
            : q.feature_terms.empty() ? QueryLevel::L2
                                      : QueryLevel::L1;
  try {
    q.text_embedding = provider.embed_text(q.normalized_text);
    q.vis_text_embedding = provider.embed_text_for_vision(q.normalized_text);
  } catch (const TransportError& e) {
    throw TransportError("embedding query \"" + q.raw_text + "\": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("embedding query \"" + q.raw_text + "\": " + e.what());
  }
  return q;
}

}  // namespace exosolve
