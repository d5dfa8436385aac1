#include "exosolve/resolver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exosolve/log.hpp"

namespace exosolve {

std::string_view to_string(ResolutionPath p) {
  switch (p) {
    case ResolutionPath::FirstPass: return "FIRST_PASS";
    case ResolutionPath::AfterQa: return "AFTER_QA";
    case ResolutionPath::ArgmaxFallback: return "ARGMAX_FALLBACK";
  }
  return "?";
}

std::string_view to_string(ResolutionSession::State s) {
  switch (s) {
    case ResolutionSession::State::Estimated: return "ESTIMATED";
    case ResolutionSession::State::AwaitingAnswer: return "AWAITING_ANSWER";
    case ResolutionSession::State::Resolved: return "RESOLVED";
  }
  return "?";
}

void QATranscript::add_exchange(std::string question, std::string answer) {
  if (budget_spent()) throw std::logic_error("question budget spent: only one exchange is allowed");
  exchanges_.push_back({std::move(question), std::move(answer)});
}

nlohmann::json to_json(const QATranscript& t) {
  nlohmann::json ex = nlohmann::json::array();
  for (const auto& e : t.exchanges()) ex.push_back({{"question", e.question}, {"answer", e.answer}});
  return {{"exchanges", ex}, {"final_id", t.final_id}, {"resolution_path", to_string(t.path)}};
}

nlohmann::json to_json(const ShortlistItem& item) {
  return {{"object_id", item.object_id},
          {"class_label", item.class_label},
          {"fused_probability", item.fused_probability},
          {"image_ref", item.image_ref ? nlohmann::json(*item.image_ref) : nlohmann::json()},
          {"features", item.features},
          {"p1", item.p1},
          {"p2", item.p2},
          {"p3", item.p3}};
}

nlohmann::json to_json(const Shortlist& shortlist) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& item : shortlist) out.push_back(to_json(item));
  return out;
}

namespace {

std::string join_options(const std::vector<std::string>& options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i > 0) out += options.size() == 2 ? " or " : (i + 1 == options.size() ? ", or " : ", ");
    out += options[i];
  }
  return out;
}

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

bool has_feature(const ShortlistItem& item, const std::string& f) {
  return std::find(item.features.begin(), item.features.end(), f) != item.features.end();
}

bool consistent(const ShortlistItem& item, const RuleBackend::Constraints& c) {
  if (c.class_label && item.class_label != *c.class_label) return false;
  return std::all_of(c.features.begin(), c.features.end(), [&](const auto& f) { return has_feature(item, f); });
}

double entropy_of_counts(const std::vector<int>& counts) {
  int total = 0;
  for (int c : counts) total += c;
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

std::string class_question(const std::vector<std::string>& classes) {
  return "Which class is it: " + join_options(classes) + "?";
}

std::string feature_question(const std::vector<std::string>& features) {
  return "What does it look like: " + join_options(features) + "?";
}

std::string describe_question() { return "Could you describe the object in more detail?"; }

RuleBackend::RuleBackend(Lexicon lexicon, std::vector<std::string> class_vocabulary)
    : lexicon_(std::move(lexicon)), vocabulary_(std::move(class_vocabulary)) {}

RuleBackend::Constraints RuleBackend::constraints(const ParsedQuery& query,
                                                  const QATranscript& transcript) const {
  Constraints c{query.class_term, query.feature_terms};
  for (const auto& ex : transcript.exchanges()) {
    const auto normalized = normalize_text(ex.answer, lexicon_);
    if (auto cls = extract_class_term(normalized, lexicon_, vocabulary_)) c.class_label = cls;
    for (const auto& f : extract_feature_terms(normalized, lexicon_)) push_unique(c.features, f);
  }
  return c;
}

ResolverDecision RuleBackend::decide(const Shortlist& shortlist, const ParsedQuery& query,
                                     const QATranscript& transcript) {
  const Constraints c = constraints(query, transcript);

  std::vector<const ShortlistItem*> candidates;
  for (const auto& item : shortlist)
    if (consistent(item, c)) candidates.push_back(&item);
  if (candidates.size() == 1) return ResolverDecision::identified(candidates.front()->object_id);

  // Nothing consistent: the constraints contradict the shortlist, ask across all of it.
  if (candidates.empty())
    for (const auto& item : shortlist) candidates.push_back(&item);

  std::vector<std::string> classes;
  std::vector<int> class_counts;
  for (const auto* item : candidates) {
    const auto it = std::find(classes.begin(), classes.end(), item->class_label);
    if (it == classes.end()) {
      classes.push_back(item->class_label);
      class_counts.push_back(1);
    } else {
      ++class_counts[static_cast<std::size_t>(it - classes.begin())];
    }
  }
  const bool class_known = c.class_label && std::find(classes.begin(), classes.end(), *c.class_label) != classes.end();
  if (!class_known && entropy_of_counts(class_counts) > 0.0) return ResolverDecision::ask(class_question(classes));

  // Feature words that split the candidates (held by some but not all).
  std::vector<std::string> splitting;
  for (const auto* item : candidates) {
    for (const auto& f : item->features) {
      const auto holders = std::count_if(candidates.begin(), candidates.end(),
                                         [&](const ShortlistItem* o) { return has_feature(*o, f); });
      if (holders > 0 && static_cast<std::size_t>(holders) < candidates.size() &&
          std::find(c.features.begin(), c.features.end(), f) == c.features.end())
        push_unique(splitting, f);
    }
  }
  if (!splitting.empty()) return ResolverDecision::ask(feature_question(splitting));
  return ResolverDecision::ask(describe_question());
}

std::string ScriptedOracle::distinguishing_feature(const std::string& question, const std::string& target,
                                                   const SceneAttributes& scene) {
  const auto it = scene.find(target);
  if (it == scene.end() || it->second.features.empty()) return {};
  const auto& attrs = it->second;

  std::string best;
  long best_score = 0;
  for (const auto& f : attrs.features) {
    long shared = 0;
    for (const auto& [id, other] : scene)
      if (id != target && other.class_label == attrs.class_label &&
          std::find(other.features.begin(), other.features.end(), f) != other.features.end())
        ++shared;
    const bool mentioned = question.find(f) != std::string::npos;
    // Mentioned features win outright; then fewer same-class holders.
    const long score = (mentioned ? 0 : 1'000'000) + shared;
    if (best.empty() || score < best_score) {
      best = f;
      best_score = score;
    }
  }
  return best;
}

std::string ScriptedOracle::answer(const std::string& question, const std::string& ground_truth_target,
                                   const SceneAttributes& scene) {
  const auto it = scene.find(ground_truth_target);
  if (it == scene.end()) return {};
  const auto& cls = it->second.class_label;
  const std::string feature = distinguishing_feature(question, ground_truth_target, scene);

  if (mode_ == Disclosure::AskedAttribute) {
    if (question.find("class") != std::string::npos || question.find("What kind") != std::string::npos)
      return "It is a " + cls + ".";
    if (question.find("look like") != std::string::npos && !feature.empty()) return "It is " + feature + ".";
  }
  if (feature.empty()) return "It is a " + cls + ".";
  return "It is the " + feature + " " + cls + ".";
}

ResolutionSession::ResolutionSession(ResolverBackend& backend, Reestimator reestimate, bool qa_enabled)
    : backend_(backend), reestimate_(std::move(reestimate)), qa_enabled_(qa_enabled) {}

bool ResolutionSession::in_shortlist(const std::string& id) const {
  return std::any_of(shortlist_.begin(), shortlist_.end(), [&](const auto& s) { return s.object_id == id; });
}

ResolutionSession::State ResolutionSession::finish(ResolutionPath path, std::string id) {
  transcript_.path = path;
  transcript_.final_id = std::move(id);
  pending_question_.reset();
  state_ = State::Resolved;
  return state_;
}

ResolutionSession::State ResolutionSession::fallback() {
  return finish(ResolutionPath::ArgmaxFallback, shortlist_.front().object_id);
}

ResolutionSession::State ResolutionSession::begin(Shortlist shortlist, ParsedQuery query) {
  if (state_ != State::Estimated) throw std::logic_error("resolution already started");
  if (shortlist.empty()) throw std::invalid_argument("cannot resolve over an empty shortlist");
  shortlist_ = std::move(shortlist);
  initial_shortlist_ = shortlist_;
  query_ = std::move(query);

  const ResolverDecision d = backend_.decide(shortlist_, query_, transcript_);
  switch (d.kind) {
    case ResolverDecision::Kind::Identified:
      if (in_shortlist(d.object_id)) return finish(ResolutionPath::FirstPass, d.object_id);
      log::warn("resolver_id_outside_shortlist", {{"object_id", d.object_id}});
      return fallback();
    case ResolverDecision::Kind::Ask:
      if (!qa_enabled_ || d.question.empty()) return fallback();
      pending_question_ = d.question;
      state_ = State::AwaitingAnswer;
      return state_;
    case ResolverDecision::Kind::Unavailable:
      log::warn("resolver_unavailable", {{"detail", d.detail}});
      return fallback();
  }
  return fallback();
}

ResolutionSession::State ResolutionSession::submit_answer(const std::string& answer) {
  if (state_ != State::AwaitingAnswer) throw std::logic_error("no question is pending");
  transcript_.add_exchange(*pending_question_, answer);
  pending_question_.reset();

  if (tokenize(answer).empty()) return fallback();

  Reestimate refreshed = reestimate_(query_.raw_text + " " + answer);
  if (!refreshed.shortlist.empty()) {
    shortlist_ = std::move(refreshed.shortlist);
    query_ = std::move(refreshed.query);
  }

  const ResolverDecision d = backend_.decide(shortlist_, query_, transcript_);
  if (d.kind == ResolverDecision::Kind::Identified && in_shortlist(d.object_id))
    return finish(ResolutionPath::AfterQa, d.object_id);
  if (d.kind == ResolverDecision::Kind::Unavailable)
    log::warn("resolver_unavailable", {{"detail", d.detail}});
  return fallback();
}

QATranscript resolve(const Shortlist& shortlist, const ParsedQuery& query, ResolverBackend& backend,
                     UserOracle& oracle, const std::string& ground_truth_target,
                     const SceneAttributes& scene, const Reestimator& reestimate, bool qa_enabled) {
  ResolutionSession session(backend, reestimate, qa_enabled);
  if (session.begin(shortlist, query) == ResolutionSession::State::AwaitingAnswer)
    session.submit_answer(oracle.answer(*session.pending_question(), ground_truth_target, scene));
  return session.transcript();
}

}  // namespace exosolve
