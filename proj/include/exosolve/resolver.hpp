#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exosolve/query.hpp"

namespace exosolve {

struct ShortlistItem {
  std::string object_id;
  std::string class_label;
  double fused_probability = 0.0;
  std::optional<std::string> image_ref;
  /// What the resolver can "see" on the object; stands in for the image.
  std::vector<std::string> features;
  /// Per-estimator probabilities, for inspection.
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
};

/// Ordered by descending fused probability.
using Shortlist = std::vector<ShortlistItem>;

struct ResolverDecision {
  enum class Kind { Identified, Ask, Unavailable };
  Kind kind = Kind::Unavailable;
  std::string object_id;  // Identified
  std::string question;   // Ask
  std::string detail;     // Unavailable: why the backend could not decide

  static ResolverDecision identified(std::string id) { return {Kind::Identified, std::move(id), {}, {}}; }
  static ResolverDecision ask(std::string q) { return {Kind::Ask, {}, std::move(q), {}}; }
  static ResolverDecision unavailable(std::string why) { return {Kind::Unavailable, {}, {}, std::move(why)}; }
};

enum class ResolutionPath { FirstPass, AfterQa, ArgmaxFallback };
std::string_view to_string(ResolutionPath p);

struct QAExchange {
  std::string question;
  std::string answer;
  bool operator==(const QAExchange&) const = default;
};

/// At most one exchange, enforced by add_exchange.
class QATranscript {
 public:
  static constexpr std::size_t kMaxExchanges = 1;

  const std::vector<QAExchange>& exchanges() const { return exchanges_; }
  bool budget_spent() const { return exchanges_.size() >= kMaxExchanges; }
  /// Throws std::logic_error once the budget is spent.
  void add_exchange(std::string question, std::string answer);

  std::string final_id;
  ResolutionPath path = ResolutionPath::ArgmaxFallback;

  bool operator==(const QATranscript&) const = default;

 private:
  std::vector<QAExchange> exchanges_;
};

nlohmann::json to_json(const QATranscript& t);
nlohmann::json to_json(const ShortlistItem& item);
nlohmann::json to_json(const Shortlist& shortlist);

class ResolverBackend {
 public:
  virtual ~ResolverBackend() = default;
  virtual ResolverDecision decide(const Shortlist& shortlist, const ParsedQuery& query,
                                  const QATranscript& transcript) = 0;
};

struct ObjectAttributes {
  std::string class_label;
  std::vector<std::string> features;
};

/// Ground-truth attribute table keyed by object id.
using SceneAttributes = std::map<std::string, ObjectAttributes>;

class UserOracle {
 public:
  virtual ~UserOracle() = default;
  virtual std::string answer(const std::string& question, const std::string& ground_truth_target,
                             const SceneAttributes& scene) = 0;
};

/// Deterministic stand-in for the language-model judge. An item is consistent
/// when it matches the known class and carries every known feature word; the
/// decision is IDENTIFIED iff exactly one item is consistent. Otherwise it asks
/// about the class (when unknown and the candidates disagree on it) or about a
/// feature that splits the candidates.
class RuleBackend final : public ResolverBackend {
 public:
  /// The lexicon and vocabulary are used to read constraints out of prior answers.
  RuleBackend(Lexicon lexicon, std::vector<std::string> class_vocabulary);

  ResolverDecision decide(const Shortlist& shortlist, const ParsedQuery& query,
                          const QATranscript& transcript) override;

  struct Constraints {
    std::optional<std::string> class_label;
    std::vector<std::string> features;
  };
  Constraints constraints(const ParsedQuery& query, const QATranscript& transcript) const;

 private:
  Lexicon lexicon_;
  std::vector<std::string> vocabulary_;
};

/// Truthful scripted user. Answers come only from the attribute table.
class ScriptedOracle final : public UserOracle {
 public:
  enum class Disclosure {
    /// Always states the class and one feature that tells the target apart.
    ClassAndFeature,
    /// Answers only the attribute the question is about.
    AskedAttribute,
  };

  explicit ScriptedOracle(Disclosure mode = Disclosure::ClassAndFeature) : mode_(mode) {}

  std::string answer(const std::string& question, const std::string& ground_truth_target,
                     const SceneAttributes& scene) override;

  /// The target feature that is rarest among same-class objects in the scene,
  /// preferring features named in the question; empty when the target has none.
  static std::string distinguishing_feature(const std::string& question, const std::string& target,
                                            const SceneAttributes& scene);

 private:
  Disclosure mode_;
};

/// Result of re-running estimation on the query with the user's answer appended.
struct Reestimate {
  ParsedQuery query;
  Shortlist shortlist;
};
using Reestimator = std::function<Reestimate(const std::string& augmented_text)>;

/// One resolution as an explicit state machine so the same logic can be driven
/// by a scripted oracle, a terminal, or the HTTP session API.
///
///   begin -> Resolved                      (identified, or no question possible)
///   begin -> AwaitingAnswer -> Resolved    (one question, then re-estimation)
class ResolutionSession {
 public:
  enum class State { Estimated, AwaitingAnswer, Resolved };

  ResolutionSession(ResolverBackend& backend, Reestimator reestimate, bool qa_enabled);

  /// Pass 1. Throws std::invalid_argument for an empty shortlist.
  State begin(Shortlist shortlist, ParsedQuery query);
  /// Pass 2 after the single exchange. A blank answer skips re-estimation and
  /// falls back to the argmax. Throws std::logic_error unless AwaitingAnswer.
  State submit_answer(const std::string& answer);

  State state() const { return state_; }
  const std::optional<std::string>& pending_question() const { return pending_question_; }
  const QATranscript& transcript() const { return transcript_; }
  const Shortlist& shortlist() const { return shortlist_; }
  const Shortlist& initial_shortlist() const { return initial_shortlist_; }
  const ParsedQuery& query() const { return query_; }

 private:
  State finish(ResolutionPath path, std::string id);
  State fallback();
  bool in_shortlist(const std::string& id) const;

  ResolverBackend& backend_;
  Reestimator reestimate_;
  bool qa_enabled_;
  State state_ = State::Estimated;
  Shortlist shortlist_;
  Shortlist initial_shortlist_;
  ParsedQuery query_;
  std::optional<std::string> pending_question_;
  QATranscript transcript_;
};

std::string_view to_string(ResolutionSession::State s);

/// Drives a session to completion with the oracle answering the question.
QATranscript resolve(const Shortlist& shortlist, const ParsedQuery& query, ResolverBackend& backend,
                     UserOracle& oracle, const std::string& ground_truth_target,
                     const SceneAttributes& scene, const Reestimator& reestimate, bool qa_enabled = true);

/// Rule-backend question templates, exposed for tests and the console.
std::string class_question(const std::vector<std::string>& classes);
std::string feature_question(const std::vector<std::string>& features);
std::string describe_question();

}  // namespace exosolve
