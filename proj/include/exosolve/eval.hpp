#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "exosolve/pipeline.hpp"
#include "exosolve/scenario.hpp"

namespace exosolve {

struct MethodSpec {
  enum class Kind { Pipeline, Vgpn };
  std::string name;
  Kind kind = Kind::Pipeline;
  bool ssl = true;
  bool qa = true;
  /// Refuse episodes where neither class information nor a skeleton is available.
  bool refuse_uninformed = false;
};

/// "miel", "miel-no-ssl", "miel-no-qa", "ecrap", "vgpn".
std::optional<MethodSpec> method_from_name(std::string_view name);
MethodSpec baseline_ecrap_like();

/// Among objects whose class equals the query's class term, the one with the
/// smallest pointing angle (ties by id). None without a class term or skeleton.
std::optional<std::string> baseline_vgpn(const SemanticMap& map, const ParsedQuery& query,
                                         const UserObservation& obs);

enum class EpisodeStatus { Ok, NotApplicable, Error };
std::string_view to_string(EpisodeStatus s);

struct EpisodeResult {
  std::string scenario_id;
  std::string method;
  QueryLevel level = QueryLevel::L1;
  bool visible = true;
  bool ssl = true;
  bool qa = true;
  EpisodeStatus status = EpisodeStatus::Ok;
  std::string error;
  /// Pre-Q&A shortlist.
  Shortlist shortlist;
  QATranscript transcript;
  std::string final_id;
  bool success_top1 = false;
  /// Target in the pre-Q&A shortlist, or success_top1.
  bool success_top5 = false;
  /// False for methods that produce a single answer and no ranking.
  bool top5_applicable = true;
  std::optional<bool> ssl_success;
  double wall_ms = 0.0;
};

nlohmann::json to_json(const EpisodeResult& r, bool include_timing = false);

using BackendFactory = std::function<std::unique_ptr<ResolverBackend>(const SemanticMap&, const Lexicon&)>;
using OracleFactory = std::function<std::unique_ptr<UserOracle>()>;

BackendFactory rule_backend_factory();
OracleFactory scripted_oracle_factory(ScriptedOracle::Disclosure mode = ScriptedOracle::Disclosure::ClassAndFeature);

struct EpisodeContext {
  const EmbeddingProvider& provider;
  const Lexicon& lexicon;
  EstimatorParams params;
  SSLConfig ssl;
  ResolverBackend& backend;
  UserOracle& oracle;
};

/// One episode: observation gating, parsing, estimation, resolution, scoring.
/// Module errors are caught and reported as EpisodeStatus::Error.
EpisodeResult run_episode(const LoadedScenario& scenario, QueryLevel level, const MethodSpec& method,
                          bool visible, const EpisodeContext& ctx);

/// Mean success over applicable episodes. Throws std::invalid_argument when
/// nothing is applicable; topk must be 1 or 5.
double sr(std::span<const EpisodeResult> results, int topk);

struct SrCell {
  std::string method;
  bool visible = true;
  std::optional<QueryLevel> level;  // nullopt = all levels
  int topk = 1;
  int successes = 0;
  int episodes = 0;
  double rate() const { return episodes ? static_cast<double>(successes) / episodes : 0.0; }
};

struct InvariantCheck {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct BenchmarkReport {
  std::vector<std::string> methods;
  std::vector<SrCell> cells;
  std::vector<EpisodeResult> episodes;
  std::vector<InvariantCheck> invariants;
  bool include_timing = false;

  bool ok() const;
  const SrCell* cell(std::string_view method, bool visible, std::optional<QueryLevel> level, int topk) const;
};

struct BenchmarkOptions {
  std::vector<MethodSpec> methods;
  std::vector<bool> visibility{true, false};
  std::vector<QueryLevel> levels{QueryLevel::L1, QueryLevel::L2, QueryLevel::L3};
  EstimatorParams params;
  SSLConfig ssl;
  BackendFactory backend = rule_backend_factory();
  OracleFactory oracle = scripted_oracle_factory();
  unsigned jobs = 1;
  bool include_timing = false;
};

/// Full cross of methods x visibility x levels x scenarios; episode order is
/// independent of the job count.
BenchmarkReport run_benchmark(std::span<const LoadedScenario> suite, const EmbeddingProvider& provider,
                              const Lexicon& lexicon, const BenchmarkOptions& options);

nlohmann::json report_to_json(const BenchmarkReport& report);
/// One row per (method, visibility, topk); level columns hold "0.63 (19/30)".
std::string report_to_csv(const BenchmarkReport& report);
/// Writes report.json and report.csv.
void write_report(const BenchmarkReport& report, const std::filesystem::path& out_dir);

}  // namespace exosolve
