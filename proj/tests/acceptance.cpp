// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "exosolve/eval.hpp"
#include "exosolve/log.hpp"
#include "exosolve/rng.hpp"

using namespace exosolve;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kVonMisesTol = 1e-6;
constexpr double kVonMisesIntegralTol = 1e-6;
constexpr double kGaussianIntegralTol = 1e-3;
constexpr double kSumTol = 1e-9;
constexpr int kHygieneScenes = 1000;
constexpr int kSslSeeds = 10000;
constexpr double kSslNoiseDeg = 15.0;
constexpr double kSslRateTol = 0.01;
constexpr int kAblationEpisodes = 200;
constexpr double kAblationMinRatio = 1.5;
constexpr int kVgpnScenes = 20;
constexpr std::uint64_t kSuiteSeeds[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

constexpr double kDensityBudgetS = 5.0;
constexpr double kHygieneBudgetS = 30.0;
constexpr double kSslBudgetS = 10.0;
constexpr double kQaBudgetS = 60.0;
constexpr double kAblationBudgetS = 120.0;

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

int g_failures = 0;

void report(const char* name, double budget_s, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && s > budget_s) {
    o.pass = false;
    o.detail += "; over time budget";
  }
  if (!o.pass) ++g_failures;
  std::printf("%s %-24s %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared context for suite-level checks.
struct Bench {
  Lexicon lexicon = Lexicon::defaults();
  ToyEmbeddingProvider provider{64, 64};
  SSLConfig ssl;  // noise-free

  EpisodeResult run(const LoadedScenario& ls, QueryLevel level, const std::string& method, bool visible) const {
    auto backend = rule_backend_factory()(*ls.map, lexicon);
    auto oracle = scripted_oracle_factory()();
    const EpisodeContext ctx{provider, lexicon, {}, ssl, *backend, *oracle};
    return run_episode(ls, level, *method_from_name(method), visible, ctx);
  }
};

std::vector<LoadedScenario> loaded(const GeneratedSuite& suite) {
  auto map = std::make_shared<const SemanticMap>(suite.map);
  std::vector<LoadedScenario> out;
  for (const auto& s : suite.scenarios) out.push_back({s, map, {}});
  return out;
}

std::vector<std::vector<LoadedScenario>> standard_suites(bool visible) {
  std::vector<std::vector<LoadedScenario>> out;
  for (auto seed : kSuiteSeeds) {
    SuiteGenConfig cfg;
    cfg.visible_initially = visible;
    out.push_back(loaded(generate_suite(cfg, seed)));
  }
  return out;
}

constexpr QueryLevel kLevels[] = {QueryLevel::L1, QueryLevel::L2, QueryLevel::L3};

// ---------------------------------------------------------------------------

double series_i0(double x) {
  // Independent evaluation: midpoint quadrature of (1/pi) * int_0^pi exp(x cos t) dt.
  const int n = 4000;
  const double h = kPi / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x * std::cos((i + 0.5) * h));
  return s * h / kPi;
}

Outcome density() {
  double worst = 0.0, worst_int = 0.0;
  for (double kappa : {0.0, 0.5, 2.0, 8.0}) {
    const double norm = 2.0 * kPi * series_i0(kappa);
    for (int i = 0; i < 100; ++i) {
      const double theta = -kPi + (i + 0.5) * (2.0 * kPi / 100.0);
      const double oracle = std::exp(kappa * std::cos(theta)) / norm;
      worst = std::max(worst, std::abs(von_mises_pdf(theta, kappa) - oracle));
    }
    const int n = 20000;
    const double h = 2.0 * kPi / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += von_mises_pdf(-kPi + (i + 0.5) * h, kappa);
    worst_int = std::max(worst_int, std::abs(total * h - 1.0));
  }

  const double sigma = 0.7, L = 5.0 * sigma;
  const int n = 120;
  const double h = 2.0 * L / n;
  const Vec3 mu{1.0, -2.0, 0.5};
  double g = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        g += gaussian3_pdf({mu.x - L + (i + 0.5) * h, mu.y - L + (j + 0.5) * h, mu.z - L + (k + 0.5) * h}, mu, sigma);
  const double g_err = std::abs(g * h * h * h - 1.0);

  const bool pass = worst <= kVonMisesTol && worst_int <= kVonMisesIntegralTol && g_err <= kGaussianIntegralTol;
  return {pass, fmt("vm max err %.2e, vm integral err %.2e, gaussian integral err %.2e", worst, worst_int, g_err)};
}

// ---------------------------------------------------------------------------

Outcome hygiene() {
  Rng rng(20240601);
  const Lexicon lexicon = Lexicon::defaults();
  const ToyEmbeddingProvider toy(16, 16);
  const char* dems[] = {"this", "that", "that ... over there", "which", ""};
  int bad_sum = 0, bad_sign = 0, bad_argmax = 0;
  double worst_sum = 0.0;

  for (int scene = 0; scene < kHygieneScenes; ++scene) {
    SceneGenConfig cfg;
    cfg.object_count = 1 + static_cast<int>(rng.below(60));
    cfg.class_count = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(cfg.object_count, 39))));
    cfg.max_same_class = cfg.object_count;
    cfg.d_text = cfg.d_vis = 16;
    const auto map = generate_synthetic_map(cfg, rng.next());
    const Pipeline pipeline(map, toy, lexicon, {});

    const auto& pick = map.at(static_cast<std::size_t>(rng.below(map.size())));
    std::string dem = dems[rng.below(5)];
    std::string words;
    const auto level = rng.below(3);
    if (level == 0) words = pick.features.front() + " " + pick.class_label;
    if (level == 1) words = pick.class_label;
    std::string text;
    if (auto gap = dem.find(" ... "); gap != std::string::npos)
      text = "bring me " + dem.substr(0, gap) + " " + words + " " + dem.substr(gap + 5);
    else
      text = "bring me " + dem + " " + words;
    if (tokenize(text).size() == 2) text += " it";

    UserObservation obs;
    if (rng.uniform() < 0.8) {
      const Vec3 eye{rng.uniform(0, 8), rng.uniform(0, 6), rng.uniform(1.2, 1.8)};
      const Vec3 dir{rng.normal(), rng.normal(), rng.normal() * 0.3};
      obs.skeleton = Skeleton{eye, eye + dir * (0.6 / std::max(dir.norm(), 1e-9))};
      obs.has_pointing = rng.uniform() < 0.9;
    }
    const Vec3 robot{rng.uniform(0, 8), rng.uniform(0, 6), 1.0};

    const auto e = pipeline.estimate(pipeline.parse(text), obs, robot);
    for (const auto* d : {&e.p1, &e.p2, &e.p3, &e.fusion.fused}) {
      double s = 0.0;
      for (double x : d->p) {
        if (!(x >= 0.0)) ++bad_sign;
        s += x;
      }
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      if (std::abs(s - 1.0) > kSumTol) ++bad_sum;
    }

    // Brute-force argmax of the raw triple product, ties to the smaller id.
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      const double v = e.p1.p[i] * e.p2.p[i] * e.p3.p[i];
      if (v > best_v || (v == best_v && map.at(i).id < map.at(best).id)) {
        best = i;
        best_v = v;
      }
    }
    if (e.fusion.ranking.front().object_id != map.at(best).id) {
      // Accept only a genuine numerical tie.
      const auto j = e.fusion.ranking.front().index;
      const double vj = e.p1.p[j] * e.p2.p[j] * e.p3.p[j];
      if (std::abs(vj - best_v) > 1e-12 * std::max(best_v, 1e-300)) ++bad_argmax;
    }
  }
  const bool pass = bad_sum == 0 && bad_sign == 0 && bad_argmax == 0;
  return {pass, fmt("%d scenes, max |sum-1| %.1e, negative %d, sum violations %d, argmax mismatches %d",
                    kHygieneScenes, worst_sum, bad_sign, bad_sum, bad_argmax)};
}

// ---------------------------------------------------------------------------

Outcome ssl_gate_check() {
  const SSLConfig cfg;
  const bool at28 = simulate_ssl_with_error(0.3, deg_to_rad(28.0), cfg).success &&
                    simulate_ssl_with_error(0.3, deg_to_rad(-28.0), cfg).success;
  const bool at30 = !simulate_ssl_with_error(0.3, deg_to_rad(30.0), cfg).success &&
                    !simulate_ssl_with_error(0.3, deg_to_rad(-30.0), cfg).success;
  SSLConfig noisy;
  noisy.noise_std = deg_to_rad(kSslNoiseDeg);
  int ok = 0;
  for (int s = 0; s < kSslSeeds; ++s) ok += simulate_ssl(0.3, noisy, static_cast<std::uint64_t>(s)).success;
  const double rate = static_cast<double>(ok) / kSslSeeds;
  const double oracle = std::erf(rad_to_deg(cfg.success_threshold) / (kSslNoiseDeg * std::sqrt(2.0)));
  const bool pass = at28 && at30 && std::abs(rate - oracle) <= kSslRateTol;
  return {pass, fmt("28deg %s, 30deg %s, rate %.4f vs oracle %.4f", at28 ? "ok" : "FAIL", at30 ? "rejected" : "ACCEPTED",
                    rate, oracle)};
}

// ---------------------------------------------------------------------------

// The target is in the pre-question top-5 and the oracle's disclosure (class
// plus its chosen feature) matches no other top-5 item.
bool uniquely_identifiable(const EpisodeResult& r, const LoadedScenario& ls) {
  const auto attrs = scene_attributes(ls.scenario, *ls.map);
  const auto& target = attrs.at(ls.scenario.target);
  const bool in_top5 = std::any_of(r.shortlist.begin(), r.shortlist.end(),
                                   [&](const auto& i) { return i.object_id == ls.scenario.target; });
  if (!in_top5) return false;
  const auto f = ScriptedOracle::distinguishing_feature("", ls.scenario.target, attrs);
  for (const auto& i : r.shortlist) {
    if (i.object_id == ls.scenario.target || i.class_label != target.class_label) continue;
    if (f.empty() || std::find(i.features.begin(), i.features.end(), f) != i.features.end()) return false;
  }
  return true;
}

Outcome qa_lift() {
  const Bench b;
  int n = 0, skipped = 0, top1_qa = 0, top5_noqa = 0, asked = 0;
  for (const auto& suite : standard_suites(true)) {
    for (const auto& ls : suite) {
      for (auto level : kLevels) {
        const auto without = b.run(ls, level, "miel-no-qa", true);
        if (!uniquely_identifiable(without, ls)) {
          ++skipped;
          continue;
        }
        const auto with = b.run(ls, level, "miel", true);
        ++n;
        top1_qa += with.success_top1;
        top5_noqa += without.success_top5;
        asked += !with.transcript.exchanges().empty();
      }
    }
  }
  const bool pass = n > 0 && top1_qa == top5_noqa;
  return {pass, fmt("%d qualifying episodes (%d excluded), top1 with Q&A %d/%d == top5 without %d/%d, %d asked", n,
                    skipped, top1_qa, n, top5_noqa, n, asked)};
}

// ---------------------------------------------------------------------------

Outcome ssl_ablation() {
  const Bench b;
  int episodes = 0, with = 0, without = 0;
  for (std::uint64_t seed = 101; episodes < kAblationEpisodes; ++seed) {
    SuiteGenConfig cfg;
    cfg.visible_initially = false;
    cfg.user_positions = 4;
    cfg.queries_per_position = 5;
    const auto suite = loaded(generate_suite(cfg, seed));
    for (std::size_t i = 0; i < suite.size() && episodes < kAblationEpisodes; ++i, ++episodes) {
      const auto level = kLevels[i % 3];
      with += b.run(suite[i], level, "miel", false).success_top1;
      without += b.run(suite[i], level, "miel-no-ssl", false).success_top1;
    }
  }
  const double sr_with = static_cast<double>(with) / episodes, sr_without = static_cast<double>(without) / episodes;
  const double ratio = without ? sr_with / sr_without : INFINITY;
  return {ratio >= kAblationMinRatio, fmt("%d hidden episodes, SR %.3f (%d) vs %.3f (%d), ratio %.2f", episodes,
                                          sr_with, with, sr_without, without, ratio)};
}

// ---------------------------------------------------------------------------

Outcome visibility_equivalence() {
  const Bench b;
  int n = 0, diffs = 0;
  for (const auto& suite : standard_suites(true)) {
    for (const auto& ls : suite) {
      for (auto level : kLevels) {
        auto v = to_json(b.run(ls, level, "miel", true));
        auto h = to_json(b.run(ls, level, "miel", false));
        for (auto* j : {&v, &h}) {
          j->erase("visible");
          j->erase("ssl_success");
        }
        ++n;
        diffs += v != h;
      }
    }
  }
  return {diffs == 0, fmt("%d episode pairs, %d differ", n, diffs)};
}

// ---------------------------------------------------------------------------

Outcome level_monotonicity() {
  const Bench b;
  int violations = 0;
  std::string rows;
  for (const auto& suite : standard_suites(true)) {
    int ok[3] = {0, 0, 0};
    for (const auto& ls : suite)
      for (int l = 0; l < 3; ++l) ok[l] += b.run(ls, kLevels[l], "miel", true).success_top1;
    if (!(ok[0] >= ok[1] && ok[1] >= ok[2])) ++violations;
    rows += fmt(" %d/%d/%d", ok[0], ok[1], ok[2]);
  }
  return {violations == 0, fmt("%zu suites of 30, L1/L2/L3 successes:%s", std::size(kSuiteSeeds), rows.c_str())};
}

// ---------------------------------------------------------------------------

std::optional<std::string> brute_force_vgpn(const SemanticMap& map, const std::string& cls, const Skeleton& sk) {
  const Vec3 d = sk.wrist - sk.eye;
  std::optional<std::string> best;
  double best_angle = 0.0;
  for (const auto& o : map.objects()) {
    if (o.class_label != cls) continue;
    const Vec3 v = o.position - sk.eye;
    const double c = d.dot(v) / (d.norm() * v.norm());
    const double angle = std::acos(std::clamp(c, -1.0, 1.0));
    if (!best || angle < best_angle - 1e-12 || (std::abs(angle - best_angle) <= 1e-12 && o.id < *best)) {
      best = o.id;
      best_angle = angle;
    }
  }
  return best;
}

Outcome vgpn_sanity() {
  const Bench b;
  int l3 = 0, l3_bad = 0, hidden = 0, hidden_bad = 0;
  for (const auto& suite : standard_suites(false)) {
    for (const auto& ls : suite) {
      for (auto level : kLevels) {
        const auto r = b.run(ls, level, "vgpn", false);  // no SSL: skeleton absent
        ++hidden;
        hidden_bad += !r.final_id.empty();
        if (level == QueryLevel::L3) {
          const auto v = b.run(ls, level, "vgpn", true);
          ++l3;
          l3_bad += !v.final_id.empty();
        }
      }
    }
  }

  Rng rng(77);
  int agree = 0;
  for (int s = 0; s < kVgpnScenes; ++s) {
    SceneGenConfig cfg;
    cfg.object_count = 10 + static_cast<int>(rng.below(30));
    cfg.class_count = 3 + static_cast<int>(rng.below(5));
    cfg.max_same_class = cfg.object_count;
    const auto map = generate_synthetic_map(cfg, rng.next());
    const Vec3 eye{rng.uniform(0, 8), rng.uniform(0, 6), 1.5};
    const Vec3 dir{rng.normal(), rng.normal(), -0.3};
    const Skeleton sk{eye, eye + dir * (0.6 / dir.norm())};
    const auto cls = map.at(static_cast<std::size_t>(rng.below(map.size()))).class_label;
    UserObservation obs;
    obs.skeleton = sk;
    obs.has_pointing = true;
    ParsedQuery q;
    q.class_term = cls;
    agree += baseline_vgpn(map, q, obs) == brute_force_vgpn(map, cls, sk);
  }
  const bool pass = l3_bad == 0 && hidden_bad == 0 && agree == kVgpnScenes;
  return {pass, fmt("level-3 picks %d/%d, skeleton-absent picks %d/%d, oracle agreement %d/%d", l3_bad, l3, hidden_bad,
                    hidden, agree, kVgpnScenes)};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const Bench b;
  const auto dir = fs::temp_directory_path() / "exosolve_acceptance_determinism";
  fs::remove_all(dir);
  std::vector<LoadedScenario> suite;
  for (auto seed : {1, 2})
    for (auto& ls : loaded(generate_suite(SuiteGenConfig{}, static_cast<std::uint64_t>(seed)))) suite.push_back(ls);

  std::vector<std::string> docs;
  for (unsigned jobs : {1u, 1u, 3u}) {
    BenchmarkOptions opts;
    for (auto n : {"miel", "miel-no-ssl", "miel-no-qa", "ecrap", "vgpn"}) opts.methods.push_back(*method_from_name(n));
    opts.jobs = jobs;
    const auto out = dir / std::to_string(docs.size());
    write_report(run_benchmark(suite, b.provider, b.lexicon, opts), out);
    docs.push_back(slurp(out / "report.json") + slurp(out / "report.csv"));
  }
  fs::remove_all(dir);
  const bool pass = docs[0] == docs[1] && docs[0] == docs[2] && !docs[0].empty();
  return {pass, fmt("3 runs (jobs 1, 1, 3) over %zu scenarios, %zu bytes, identical: %s", suite.size(),
                    docs[0].size(), pass ? "yes" : "no")};
}

}  // namespace

int main() {
  log::set_level(log::Level::Error);
  report("density", kDensityBudgetS, density);
  report("distribution_hygiene", kHygieneBudgetS, hygiene);
  report("ssl_gate", kSslBudgetS, ssl_gate_check);
  report("qa_lift_identity", kQaBudgetS, qa_lift);
  report("ssl_ablation", kAblationBudgetS, ssl_ablation);
  report("visibility_equivalence", 0, visibility_equivalence);
  report("level_monotonicity", 0, level_monotonicity);
  report("baseline_sanity", 0, vgpn_sanity);
  report("determinism", 0, determinism);
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures ? 1 : 0;
}
