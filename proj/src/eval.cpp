#include "exosolve/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "exosolve/log.hpp"

namespace exosolve {

std::optional<MethodSpec> method_from_name(std::string_view name) {
  if (name == "miel") return MethodSpec{"miel", MethodSpec::Kind::Pipeline, true, true, false};
  if (name == "miel-no-ssl") return MethodSpec{"miel-no-ssl", MethodSpec::Kind::Pipeline, false, true, false};
  if (name == "miel-no-qa") return MethodSpec{"miel-no-qa", MethodSpec::Kind::Pipeline, true, false, false};
  if (name == "ecrap") return baseline_ecrap_like();
  if (name == "vgpn") return MethodSpec{"vgpn", MethodSpec::Kind::Vgpn, false, false, false};
  return std::nullopt;
}

MethodSpec baseline_ecrap_like() { return {"ecrap", MethodSpec::Kind::Pipeline, false, false, true}; }

std::optional<std::string> baseline_vgpn(const SemanticMap& map, const ParsedQuery& query,
                                         const UserObservation& obs) {
  if (!query.class_term || !obs.skeleton) return std::nullopt;
  std::optional<std::string> best;
  double best_angle = 0.0;
  for (const auto& o : map.objects()) {
    if (o.class_label != *query.class_term) continue;
    double angle;
    try {
      angle = pointing_angle(obs, o.position);
    } catch (const std::invalid_argument&) {
      continue;
    }
    if (!best || angle < best_angle || (angle == best_angle && o.id < *best)) {
      best = o.id;
      best_angle = angle;
    }
  }
  return best;
}

std::string_view to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::Ok: return "ok";
    case EpisodeStatus::NotApplicable: return "not_applicable";
    case EpisodeStatus::Error: return "error";
  }
  return "?";
}

nlohmann::json to_json(const EpisodeResult& r, bool include_timing) {
  nlohmann::json shortlist = nlohmann::json::array();
  for (const auto& item : r.shortlist) shortlist.push_back({{"object_id", item.object_id}, {"p", item.fused_probability}});
  nlohmann::json j{{"scenario", r.scenario_id},
                   {"method", r.method},
                   {"level", static_cast<int>(r.level)},
                   {"visible", r.visible},
                   {"ssl", r.ssl},
                   {"qa", r.qa},
                   {"status", to_string(r.status)},
                   {"shortlist", shortlist},
                   {"transcript", to_json(r.transcript)},
                   {"final_id", r.final_id},
                   {"success_top1", r.success_top1},
                   {"success_top5", r.top5_applicable ? nlohmann::json(r.success_top5) : nlohmann::json()}};
  if (!r.error.empty()) j["error"] = r.error;
  if (r.ssl_success) j["ssl_success"] = *r.ssl_success;
  if (include_timing) j["wall_ms"] = r.wall_ms;
  return j;
}

BackendFactory rule_backend_factory() {
  return [](const SemanticMap& map, const Lexicon& lexicon) -> std::unique_ptr<ResolverBackend> {
    return std::make_unique<RuleBackend>(lexicon, map.class_labels());
  };
}

OracleFactory scripted_oracle_factory(ScriptedOracle::Disclosure mode) {
  return [mode]() -> std::unique_ptr<UserOracle> { return std::make_unique<ScriptedOracle>(mode); };
}

namespace {

void run_pipeline_episode(const LoadedScenario& ls, QueryLevel level, const MethodSpec& method,
                          const UserObservation& obs, const EpisodeContext& ctx, EpisodeResult& r) {
  const Scenario& s = ls.scenario;
  const Pipeline pipeline(*ls.map, ctx.provider, ctx.lexicon, ctx.params);
  ParsedQuery query = pipeline.parse(s.query(level));
  query.level = level;

  if (method.kind == MethodSpec::Kind::Vgpn) {
    r.top5_applicable = false;
    const auto pick = baseline_vgpn(*ls.map, query, obs);
    r.final_id = pick.value_or("");
    r.success_top1 = pick && *pick == s.target;
    return;
  }

  if (method.refuse_uninformed && query.demonstrative_only() && !obs.skeleton) {
    r.status = EpisodeStatus::NotApplicable;
    r.top5_applicable = false;
    return;
  }

  Estimates est = pipeline.estimate(query, obs, s.robot_position);
  r.shortlist = est.shortlist;
  const SceneAttributes attrs = scene_attributes(s, *ls.map);
  r.transcript = resolve(est.shortlist, query, ctx.backend, ctx.oracle, s.target, attrs,
                         pipeline.reestimator(obs, s.robot_position), method.qa);
  r.final_id = r.transcript.final_id;
  r.success_top1 = r.final_id == s.target;
  // A target pulled in by re-estimation still counts: a top-1 hit is a top-5 hit.
  r.success_top5 = r.success_top1 || std::any_of(r.shortlist.begin(), r.shortlist.end(),
                                                 [&](const ShortlistItem& i) { return i.object_id == s.target; });
}

}  // namespace

EpisodeResult run_episode(const LoadedScenario& ls, QueryLevel level, const MethodSpec& method, bool visible,
                          const EpisodeContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  EpisodeResult r;
  r.scenario_id = ls.scenario.id;
  r.method = method.name;
  r.level = level;
  r.visible = visible;
  r.ssl = method.ssl;
  r.qa = method.qa;
  try {
    UserObservation scripted = ls.scenario.observation();
    scripted.visible_initially = visible;
    const UserObservation obs = acquire_observation(scripted, ctx.ssl, method.ssl, ls.scenario.seed);
    if (!visible && method.ssl) r.ssl_success = obs.skeleton.has_value();
    run_pipeline_episode(ls, level, method, obs, ctx, r);
  } catch (const std::exception& e) {
    r.status = EpisodeStatus::Error;
    r.error = e.what();
    r.success_top1 = r.success_top5 = false;
    log::warn("episode_error", {{"scenario", r.scenario_id}, {"method", r.method}, {"error", r.error}});
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

bool applicable(const EpisodeResult& r, int topk) {
  if (r.status == EpisodeStatus::NotApplicable) return false;
  return topk == 1 || r.top5_applicable;
}

bool succeeded(const EpisodeResult& r, int topk) { return topk == 1 ? r.success_top1 : r.success_top5; }

}  // namespace

double sr(std::span<const EpisodeResult> results, int topk) {
  if (topk != 1 && topk != 5) throw std::invalid_argument("topk must be 1 or 5");
  int n = 0, ok = 0;
  for (const auto& r : results) {
    if (!applicable(r, topk)) continue;
    ++n;
    ok += succeeded(r, topk) ? 1 : 0;
  }
  if (n == 0) throw std::invalid_argument("sr over an empty result set");
  return static_cast<double>(ok) / n;
}

bool BenchmarkReport::ok() const {
  return std::all_of(invariants.begin(), invariants.end(), [](const InvariantCheck& c) { return c.ok; });
}

const SrCell* BenchmarkReport::cell(std::string_view method, bool visible, std::optional<QueryLevel> level,
                                    int topk) const {
  for (const auto& c : cells)
    if (c.method == method && c.visible == visible && c.level == level && c.topk == topk) return &c;
  return nullptr;
}

namespace {

struct Job {
  std::size_t scenario;
  std::size_t method;
  bool visible;
  QueryLevel level;
};

std::vector<SrCell> tabulate(const BenchmarkOptions& options, const std::vector<EpisodeResult>& episodes) {
  std::vector<SrCell> cells;
  for (const auto& m : options.methods) {
    for (bool visible : options.visibility) {
      for (int topk : {1, 5}) {
        if (topk == 5 && m.kind == MethodSpec::Kind::Vgpn) continue;
        std::vector<std::optional<QueryLevel>> levels(options.levels.begin(), options.levels.end());
        levels.push_back(std::nullopt);
        for (const auto& level : levels) {
          SrCell c{m.name, visible, level, topk, 0, 0};
          for (const auto& r : episodes) {
            if (r.method != m.name || r.visible != visible || (level && r.level != *level) || !applicable(r, topk))
              continue;
            ++c.episodes;
            c.successes += succeeded(r, topk) ? 1 : 0;
          }
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

std::string level_name(const std::optional<QueryLevel>& level) {
  return level ? std::to_string(static_cast<int>(*level)) : "total";
}

std::vector<InvariantCheck> check_invariants(const BenchmarkOptions& options, const BenchmarkReport& report) {
  std::vector<InvariantCheck> checks;

  InvariantCheck top5{"top5_covers_top1", true, ""};
  for (const auto& r : report.episodes)
    if (r.top5_applicable && r.success_top1 && !r.success_top5) {
      top5.ok = false;
      top5.detail = r.scenario_id + " " + r.method + " level " + std::to_string(static_cast<int>(r.level));
      break;
    }
  checks.push_back(top5);

  InvariantCheck counts{"counts_reconcile", true, ""};
  for (const auto& c : report.cells) {
    if (c.successes < 0 || c.successes > c.episodes || c.rate() < 0.0 || c.rate() > 1.0) counts.ok = false;
    if (c.topk == 5) {
      const SrCell* t1 = report.cell(c.method, c.visible, c.level, 1);
      if (t1 && t1->episodes == c.episodes && c.successes < t1->successes) {
        counts.ok = false;
        counts.detail = c.method + " level " + level_name(c.level) + ": SR(top5) < SR(top1)";
      }
    }
    if (!c.level) {
      int sum = 0;
      for (const auto& other : report.cells)
        if (other.method == c.method && other.visible == c.visible && other.topk == c.topk && other.level)
          sum += other.episodes;
      if (sum != c.episodes) {
        counts.ok = false;
        counts.detail = c.method + ": level counts do not add up to the total";
      }
    }
  }
  checks.push_back(counts);

  const auto has = [&](std::string_view name) {
    return std::any_of(options.methods.begin(), options.methods.end(), [&](const auto& m) { return m.name == name; });
  };

  if (has("miel") && has("miel-no-qa")) {
    InvariantCheck qa{"qa_monotonicity", true, ""};
    for (bool visible : options.visibility) {
      const SrCell* with = report.cell("miel", visible, std::nullopt, 1);
      const SrCell* without = report.cell("miel-no-qa", visible, std::nullopt, 1);
      if (with && without && with->successes < without->successes) {
        qa.ok = false;
        qa.detail = std::string(visible ? "visible" : "hidden") + ": " + std::to_string(with->successes) + " < " +
                    std::to_string(without->successes);
      }
    }
    checks.push_back(qa);
  }

  const bool both_conditions = std::count(options.visibility.begin(), options.visibility.end(), true) > 0 &&
                               std::count(options.visibility.begin(), options.visibility.end(), false) > 0;
  if (has("miel") && both_conditions && options.ssl.noise_std == 0.0) {
    InvariantCheck eq{"visibility_equivalence", true, ""};
    std::map<std::tuple<std::string, int>, std::string> visible_final;
    for (const auto& r : report.episodes)
      if (r.method == "miel" && r.visible) visible_final[{r.scenario_id, static_cast<int>(r.level)}] = r.final_id;
    for (const auto& r : report.episodes) {
      if (r.method != "miel" || r.visible) continue;
      const auto it = visible_final.find({r.scenario_id, static_cast<int>(r.level)});
      if (it == visible_final.end() || it->second != r.final_id) {
        eq.ok = false;
        eq.detail = r.scenario_id + " level " + std::to_string(static_cast<int>(r.level));
        break;
      }
    }
    checks.push_back(eq);
  }
  return checks;
}

}  // namespace

BenchmarkReport run_benchmark(std::span<const LoadedScenario> suite, const EmbeddingProvider& provider,
                              const Lexicon& lexicon, const BenchmarkOptions& options) {
  if (suite.empty()) throw std::invalid_argument("benchmark suite is empty");
  if (options.methods.empty()) throw std::invalid_argument("no methods selected");
  options.params.validate();
  options.ssl.validate();

  std::vector<Job> jobs;
  for (std::size_t m = 0; m < options.methods.size(); ++m)
    for (bool visible : options.visibility)
      for (QueryLevel level : options.levels)
        for (std::size_t s = 0; s < suite.size(); ++s) jobs.push_back({s, m, visible, level});

  BenchmarkReport report;
  report.include_timing = options.include_timing;
  for (const auto& m : options.methods) report.methods.push_back(m.name);
  report.episodes.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr worker_error;
  const auto worker = [&] {
    try {
      std::map<const SemanticMap*, std::unique_ptr<ResolverBackend>> backends;
      const auto oracle = options.oracle();
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        const Job& job = jobs[i];
        const LoadedScenario& ls = suite[job.scenario];
        auto& backend = backends[ls.map.get()];
        if (!backend) backend = options.backend(*ls.map, lexicon);
        const EpisodeContext ctx{provider, lexicon, options.params, options.ssl, *backend, *oracle};
        report.episodes[i] = run_episode(ls, job.level, options.methods[job.method], job.visible, ctx);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      worker_error = std::current_exception();
      next = jobs.size();
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < n; ++t) threads.emplace_back(worker);
  }
  if (worker_error) std::rethrow_exception(worker_error);

  report.cells = tabulate(options, report.episodes);
  report.invariants = check_invariants(options, report);
  return report;
}

nlohmann::json report_to_json(const BenchmarkReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"method", c.method},
                     {"visibility", c.visible ? "visible" : "hidden"},
                     {"level", level_name(c.level)},
                     {"topk", c.topk},
                     {"successes", c.successes},
                     {"episodes", c.episodes},
                     {"sr", c.rate()}});
  nlohmann::json episodes = nlohmann::json::array();
  for (const auto& r : report.episodes) episodes.push_back(to_json(r, report.include_timing));
  nlohmann::json invariants = nlohmann::json::array();
  for (const auto& c : report.invariants) invariants.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
  return {{"methods", report.methods}, {"cells", cells}, {"invariants", invariants}, {"episodes", episodes}};
}

std::string report_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "method,visibility,topk,level1,level2,level3,total\n";
  std::vector<std::tuple<std::string, bool, int>> rows;
  for (const auto& c : report.cells) {
    const auto key = std::tuple{c.method, c.visible, c.topk};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  for (const auto& [method, visible, topk] : rows) {
    out << method << ',' << (visible ? "visible" : "hidden") << ",top" << topk;
    for (std::optional<QueryLevel> level : {std::optional{QueryLevel::L1}, std::optional{QueryLevel::L2},
                                            std::optional{QueryLevel::L3}, std::optional<QueryLevel>{}}) {
      out << ',';
      const SrCell* c = report.cell(method, visible, level, topk);
      if (!c || c->episodes == 0) {
        out << "n/a";
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f (%d/%d)", c->rate(), c->successes, c->episodes);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream json(out_dir / "report.json");
  std::ofstream csv(out_dir / "report.csv");
  if (!json || !csv) throw std::runtime_error("cannot write report to " + out_dir.string());
  json << report_to_json(report).dump(1) << '\n';
  csv << report_to_csv(report);
}

}  // namespace exosolve
