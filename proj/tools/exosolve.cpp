#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include "exosolve/config.hpp"
#include "exosolve/errors.hpp"
#include "exosolve/eval.hpp"
#include "exosolve/llm_backend.hpp"
#include "exosolve/log.hpp"
#include "exosolve/rng.hpp"
#include "exosolve/scenario.hpp"
#include "exosolve/session_service.hpp"

using namespace exosolve;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitSchema = 2;

struct Overrides {
  std::optional<double> sigma_ko, sigma_so, sigma_a, lambda_a, kappa, ssl_noise_deg;
  std::optional<int> topk;
};

struct Common {
  std::string config_path;
  std::string lexicon_path;
  std::string log_level = "warn";
  std::string backend = "rule";
  Overrides overrides;
};

void add_estimator_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--sigma-ko", o.sigma_ko, "Spread of the near-speaker region (m)");
  cmd->add_option("--sigma-so", o.sigma_so, "Spread of the near-listener region (m)");
  cmd->add_option("--sigma-a", o.sigma_a, "Spread of the far region (m)");
  cmd->add_option("--lambda-a", o.lambda_a, "Distance of the far-region centre beyond the wrist (m)");
  cmd->add_option("--kappa", o.kappa, "Pointing concentration");
  cmd->add_option("--topk", o.topk, "Shortlist size");
  cmd->add_option("--ssl-noise-deg", o.ssl_noise_deg, "Sound-localization noise std-dev (degrees)");
}

void add_backend_flag(CLI::App* cmd, std::string& backend) {
  cmd->add_option("--backend", backend, "Resolver backend")->check(CLI::IsMember({"rule", "llm"}));
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  const Overrides& o = c.overrides;
  auto& d = cfg.estimators.demonstrative;
  if (o.sigma_ko) d.sigma_ko = *o.sigma_ko;
  if (o.sigma_so) d.sigma_so = *o.sigma_so;
  if (o.sigma_a) d.sigma_a = *o.sigma_a;
  if (o.lambda_a) d.pointer_tip_distance = *o.lambda_a;
  if (o.kappa) cfg.estimators.pointing.kappa = *o.kappa;
  if (o.topk) {
    if (*o.topk < 1) throw ConfigError("--topk must be >= 1");
    cfg.estimators.top_k = static_cast<std::size_t>(*o.topk);
  }
  if (o.ssl_noise_deg) cfg.ssl.noise_std = deg_to_rad(*o.ssl_noise_deg);
  cfg.estimators.validate();
  cfg.ssl.validate();
  return cfg;
}

Lexicon resolve_lexicon(const Common& c) {
  return c.lexicon_path.empty() ? Lexicon::defaults() : Lexicon::load(c.lexicon_path);
}

std::unique_ptr<EmbeddingProvider> make_provider(int d_text, int d_vis) {
  if (auto http = HttpEmbeddingProvider::from_env(d_text, d_vis)) return http;
  return std::make_unique<ToyEmbeddingProvider>(d_text, d_vis);
}

BackendFactory backend_factory(const std::string& name) {
  if (name == "llm") {
    LlmBackend::from_env();  // fail at startup when the endpoint is unset
    return [](const SemanticMap&, const Lexicon&) -> std::unique_ptr<ResolverBackend> { return LlmBackend::from_env(); };
  }
  return rule_backend_factory();
}

void print_result(const EpisodeResult& r, const std::string& query, bool as_json) {
  if (as_json) {
    std::cout << to_json(r).dump(2) << '\n';
    return;
  }
  std::cout << "scenario  " << r.scenario_id << "  level " << static_cast<int>(r.level) << "  ssl "
            << (r.ssl ? "on" : "off") << "  qa " << (r.qa ? "on" : "off") << "  visible " << (r.visible ? "yes" : "no")
            << '\n';
  std::cout << "query     " << query << '\n';
  if (r.ssl_success) std::cout << "ssl       " << (*r.ssl_success ? "localized" : "failed") << '\n';
  std::cout << "shortlist\n";
  for (std::size_t i = 0; i < r.shortlist.size(); ++i) {
    const auto& item = r.shortlist[i];
    std::printf("  %zu. %-10s %-16s p=%.4f\n", i + 1, item.object_id.c_str(), item.class_label.c_str(),
                item.fused_probability);
  }
  std::fflush(stdout);
  for (const auto& ex : r.transcript.exchanges()) {
    std::cout << "question  " << ex.question << '\n';
    std::cout << "answer    " << ex.answer << '\n';
  }
  std::cout << "path      " << to_string(r.transcript.path) << '\n';
  std::cout << "final     " << r.final_id << '\n';
  std::cout << "top1      " << (r.success_top1 ? "success" : "failure") << '\n';
  std::cout << "top5      " << (r.success_top5 ? "success" : "failure") << '\n';
}

LoadedScenario load_with_seed(const std::string& path, const Lexicon& lexicon, std::optional<std::uint64_t> seed) {
  if (!std::filesystem::exists(path)) throw ParseError("scenario file not found: " + path);
  LoadedScenario ls = load_scenario(path, lexicon);
  if (seed) ls.scenario.seed = *seed;
  return ls;
}

/// Human-as-oracle session on stdin/stdout.
int interactive(const LoadedScenario& ls, QueryLevel level, bool ssl_on, bool qa_on, const RunConfig& cfg,
                const Lexicon& lexicon, const BackendFactory& factory, const std::string& save_path) {
  const Scenario& s = ls.scenario;
  const auto provider = make_provider(ls.map->d_text(), ls.map->d_vis());
  const Pipeline pipeline(*ls.map, *provider, lexicon, cfg.estimators);
  const UserObservation obs = acquire_observation(s.observation(), cfg.ssl, ssl_on, s.seed);
  ParsedQuery query = pipeline.parse(s.query(level));
  query.level = level;
  const Estimates est = pipeline.estimate(query, obs, s.robot_position);
  const auto backend = factory(*ls.map, lexicon);

  std::cout << "query: " << s.query(level) << "\nshortlist:\n";
  for (const auto& item : est.shortlist)
    std::printf("  %-10s %-16s p=%.4f\n", item.object_id.c_str(), item.class_label.c_str(), item.fused_probability);
  std::fflush(stdout);

  ResolutionSession session(*backend, pipeline.reestimator(obs, s.robot_position), qa_on);
  if (session.begin(est.shortlist, query) == ResolutionSession::State::AwaitingAnswer) {
    std::cout << "robot: " << *session.pending_question() << "\nyou: " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) line.clear();
    session.submit_answer(line);
  }
  const auto& t = session.transcript();
  std::cout << "\npath:  " << to_string(t.path) << "\nfinal: " << t.final_id << "\n";
  const nlohmann::json saved = to_json(t);
  if (!save_path.empty()) {
    std::ofstream out(save_path);
    if (!out) throw std::runtime_error("cannot write transcript to " + save_path);
    out << saved.dump(2) << '\n';
  } else {
    std::cout << saved.dump(2) << '\n';
  }
  return 0;
}

std::pair<std::string, int> split_bind(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind address must be host:port");
  try {
    const int port = std::stoi(addr.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {addr.substr(0, colon), port};
  } catch (const std::logic_error&) {
    throw ConfigError("invalid port in bind address " + addr);
  }
}

SessionServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exophora resolution engine"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "YAML config with estimators/ssl sections");
  app.add_option("--lexicon", common.lexicon_path, "Lexicon JSON overlaid on the defaults");
  app.add_option("--log-level", common.log_level, "debug|info|warn|error|off");

  // map
  auto* map_cmd = app.add_subcommand("map", "Semantic map utilities");
  map_cmd->require_subcommand(1);
  std::string map_path;
  auto* map_validate = map_cmd->add_subcommand("validate", "Check a map file");
  map_validate->add_option("path", map_path)->required();
  std::string embed_in, embed_out;
  auto* map_embed = map_cmd->add_subcommand("embed", "Fill missing embeddings of a hand-written map");
  map_embed->add_option("input", embed_in)->required();
  map_embed->add_option("-o,--out", embed_out)->required();
  SceneGenConfig scene;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* map_gen = map_cmd->add_subcommand("gen", "Generate a synthetic map");
  map_gen->add_option("--objects", scene.object_count);
  map_gen->add_option("--classes", scene.class_count);
  map_gen->add_option("--dim", scene.d_text, "Embedding dimension (both spaces)");
  map_gen->add_option("--seed", gen_seed);
  map_gen->add_option("-o,--out", gen_out)->required();

  // suite
  auto* suite_cmd = app.add_subcommand("suite", "Scenario suites");
  suite_cmd->require_subcommand(1);
  SuiteGenConfig suite_cfg;
  bool suite_hidden = false;
  std::string suite_out;
  std::uint64_t suite_seed = 1;
  auto* suite_gen = suite_cmd->add_subcommand("gen", "Generate a scenario suite");
  suite_gen->add_option("--positions", suite_cfg.user_positions);
  suite_gen->add_option("--queries", suite_cfg.queries_per_position, "Queries per user position");
  suite_gen->add_option("--objects", suite_cfg.scene.object_count);
  suite_gen->add_option("--classes", suite_cfg.scene.class_count);
  suite_gen->add_option("--pointing-noise-deg", suite_cfg.pointing_noise_deg);
  suite_gen->add_flag("--hidden", suite_hidden, "User starts outside the camera view");
  suite_gen->add_option("--seed", suite_seed);
  suite_gen->add_option("-o,--out", suite_out)->required();

  // run / interactive
  std::string scenario_path;
  int level = 1;
  bool no_qa = false;
  std::optional<bool> ssl_flag;
  std::optional<std::uint64_t> run_seed;
  bool as_json = false;
  std::string save_path;
  auto add_episode_flags = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario_path)->required();
    cmd->add_option("--level", level)->check(CLI::Range(1, 3));
    cmd->add_flag("--no-qa", no_qa, "Disable the clarifying question");
    cmd->add_flag("--ssl,!--no-ssl", ssl_flag, "Enable/disable sound-source localization");
    cmd->add_option("--seed", run_seed, "Override the scenario seed");
    add_backend_flag(cmd, common.backend);
    add_estimator_flags(cmd, common.overrides);
  };
  auto* run_cmd = app.add_subcommand("run", "Run one episode with the scripted oracle");
  add_episode_flags(run_cmd);
  run_cmd->add_flag("--json", as_json, "Print the episode result as JSON");
  auto* inter_cmd = app.add_subcommand("interactive", "Answer the clarifying question yourself");
  add_episode_flags(inter_cmd);
  inter_cmd->add_option("--save", save_path, "Write the transcript JSON here");

  // eval
  std::string suite_dir, out_dir, methods_arg = "miel,miel-no-ssl,miel-no-qa,vgpn", visibility = "both";
  unsigned jobs = 1;
  bool timing = false;
  std::optional<std::uint64_t> eval_seed;
  std::string oracle_mode = "class-feature";
  auto* eval_cmd = app.add_subcommand("eval", "Run a benchmark over a suite");
  eval_cmd->add_option("--suite", suite_dir)->required();
  eval_cmd->add_option("--methods", methods_arg, "Comma-separated: miel, miel-no-ssl, miel-no-qa, ecrap, vgpn");
  eval_cmd->add_option("--out", out_dir)->required();
  eval_cmd->add_option("--visibility", visibility)->check(CLI::IsMember({"both", "visible", "hidden"}));
  eval_cmd->add_option("--jobs", jobs);
  eval_cmd->add_option("--seed", eval_seed, "Re-seed every scenario from this value");
  eval_cmd->add_option("--oracle", oracle_mode)->check(CLI::IsMember({"class-feature", "asked"}));
  eval_cmd->add_flag("--timing", timing, "Include wall time per episode in the JSON report");
  add_backend_flag(eval_cmd, common.backend);
  add_estimator_flags(eval_cmd, common.overrides);

  // serve
  std::string bind_addr, serve_root = ".";
  int idle_timeout = 600;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP session API");
  serve_cmd->add_option("addr", bind_addr, "host:port")->required();
  serve_cmd->add_option("--root", serve_root, "Directory scenario paths are resolved against");
  serve_cmd->add_option("--idle-timeout", idle_timeout, "Seconds before an idle session is dropped");
  add_backend_flag(serve_cmd, common.backend);
  add_estimator_flags(serve_cmd, common.overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitSchema;
  }

  log::Level lvl;
  if (!log::parse_level(common.log_level, lvl)) {
    std::cerr << "error: unknown log level " << common.log_level << '\n';
    return kExitSchema;
  }
  log::set_level(lvl);

  try {
    if (map_validate->parsed()) {
      const SemanticMap map = load_map(map_path);
      std::cout << "ok: " << map.size() << " objects, " << map.class_labels().size() << " classes, d_text "
                << map.d_text() << ", d_vis " << map.d_vis() << '\n';
      return 0;
    }
    if (map_embed->parsed()) {
      std::ifstream in(embed_in);
      if (!in) throw ParseError("cannot open " + embed_in);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(embed_in + ": " + e.what());
      }
      const ToyEmbeddingProvider toy(doc.value("d_text", SceneGenConfig{}.d_text), doc.value("d_vis", SceneGenConfig{}.d_vis));
      const SemanticMap map = map_from_json(embed_map_document(std::move(doc), toy));
      save_map(map, embed_out);
      std::cout << "wrote " << embed_out << '\n';
      return 0;
    }
    if (map_gen->parsed()) {
      scene.d_vis = scene.d_text;
      save_map(generate_synthetic_map(scene, gen_seed), gen_out);
      std::cout << "wrote " << gen_out << '\n';
      return 0;
    }
    if (suite_gen->parsed()) {
      suite_cfg.visible_initially = !suite_hidden;
      const GeneratedSuite suite = generate_suite(suite_cfg, suite_seed);
      write_suite(suite, suite_out);
      std::cout << "wrote " << suite.scenarios.size() << " scenarios to " << suite_out << '\n';
      return 0;
    }

    const RunConfig cfg = resolve_config(common);
    const Lexicon lexicon = resolve_lexicon(common);
    const BackendFactory factory = backend_factory(common.backend);

    if (run_cmd->parsed() || inter_cmd->parsed()) {
      const LoadedScenario ls = load_with_seed(scenario_path, lexicon, run_seed);
      const auto lv = static_cast<QueryLevel>(level);
      const bool ssl_on = ssl_flag.value_or(true);
      if (inter_cmd->parsed()) return interactive(ls, lv, ssl_on, !no_qa, cfg, lexicon, factory, save_path);

      const auto provider = make_provider(ls.map->d_text(), ls.map->d_vis());
      const auto backend = factory(*ls.map, lexicon);
      ScriptedOracle oracle;
      const MethodSpec method{"miel", MethodSpec::Kind::Pipeline, ssl_on, !no_qa, false};
      const EpisodeContext ctx{*provider, lexicon, cfg.estimators, cfg.ssl, *backend, oracle};
      const EpisodeResult r = run_episode(ls, lv, method, ls.scenario.visible_initially, ctx);
      if (r.status == EpisodeStatus::Error) {
        std::cerr << "error: " << r.error << '\n';
        return kExitRuntime;
      }
      print_result(r, ls.scenario.query(lv), as_json);
      return 0;
    }

    if (eval_cmd->parsed()) {
      std::vector<LoadedScenario> suite = load_suite(suite_dir, lexicon);
      if (eval_seed)
        for (auto& ls : suite) ls.scenario.seed = derive_seed(*eval_seed, ls.scenario.id);
      BenchmarkOptions opts;
      for (std::string_view rest = methods_arg; !rest.empty();) {
        const auto comma = rest.find(',');
        const std::string name(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (name.empty()) continue;
        const auto m = method_from_name(name);
        if (!m) throw ConfigError("unknown method " + name);
        opts.methods.push_back(*m);
      }
      if (visibility == "visible") opts.visibility = {true};
      if (visibility == "hidden") opts.visibility = {false};
      opts.params = cfg.estimators;
      opts.ssl = cfg.ssl;
      opts.backend = factory;
      opts.oracle = scripted_oracle_factory(oracle_mode == "asked" ? ScriptedOracle::Disclosure::AskedAttribute
                                                                   : ScriptedOracle::Disclosure::ClassAndFeature);
      opts.jobs = jobs;
      opts.include_timing = timing;
      const auto provider = make_provider(suite.front().map->d_text(), suite.front().map->d_vis());
      const BenchmarkReport report = run_benchmark(suite, *provider, lexicon, opts);
      write_report(report, out_dir);
      std::cout << report_to_csv(report);
      for (const auto& c : report.invariants)
        std::cout << "invariant " << c.name << ": " << (c.ok ? "ok" : "FAILED " + c.detail) << '\n';
      return report.ok() ? 0 : kExitRuntime;
    }

    if (serve_cmd->parsed()) {
      const auto [host, port] = split_bind(bind_addr);
      const ToyEmbeddingProvider toy(SceneGenConfig{}.d_text, SceneGenConfig{}.d_vis);
      SessionServiceOptions sopts;
      sopts.scenario_root = serve_root;
      sopts.config = cfg;
      sopts.backend = factory;
      sopts.idle_timeout = std::chrono::seconds(idle_timeout);
      const auto http = HttpEmbeddingProvider::from_env(toy.text_dim(), toy.vision_dim());
      SessionService service(http ? static_cast<const EmbeddingProvider&>(*http) : toy, lexicon, sopts);
      SessionServer server(service);
      if (!server.bind(host, port)) {
        std::cerr << "error: cannot bind " << bind_addr << '\n';
        return kExitRuntime;
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      log::emit(log::Level::Info, "serving", {{"host", host}, {"port", server.port()}});
      std::cout << "listening on " << host << ':' << server.port() << std::endl;
      server.run();
      g_server = nullptr;
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
