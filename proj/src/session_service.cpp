#include "exosolve/session_service.hpp"

#include <httplib.h>

#include <cstdio>

#include "exosolve/errors.hpp"
#include "exosolve/log.hpp"

namespace exosolve {

struct SessionService::Session {
  std::mutex mutex;
  std::chrono::steady_clock::time_point last_access;
  std::string id;
  LoadedScenario scenario;
  QueryLevel level = QueryLevel::L1;
  bool visible = true;
  bool ssl = true;
  bool qa = true;
  UserObservation obs;
  std::unique_ptr<Pipeline> pipeline;
  std::unique_ptr<ResolverBackend> backend;
  Estimates estimates;
  std::unique_ptr<ResolutionSession> resolution;
};

namespace {

ApiResponse error_response(int status, const std::string& message) { return {status, {{"error", message}}}; }

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

bool inside(const std::filesystem::path& root, const std::filesystem::path& p) {
  const auto rel = p.lexically_relative(root);
  return !rel.empty() && *rel.begin() != "..";
}

}  // namespace

SessionService::SessionService(const EmbeddingProvider& provider, const Lexicon& lexicon,
                               SessionServiceOptions options)
    : provider_(provider), lexicon_(lexicon), options_(std::move(options)) {
  options_.scenario_root = std::filesystem::weakly_canonical(options_.scenario_root);
}

SessionService::~SessionService() = default;

std::size_t SessionService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t SessionService::expire_idle(std::chrono::steady_clock::time_point now) {
  std::lock_guard lock(mutex_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
    if (session_lock && now - it->second->last_access > options_.idle_timeout) {
      session_lock.unlock();
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse SessionService::handle(std::string_view method, std::string_view path, const std::string& body) {
  expire_idle(std::chrono::steady_clock::now());
  if (method == "GET" && path == "/healthz") return {200, {{"status", "ok"}}};
  if (method == "POST" && path == "/sessions") return create(body);

  constexpr std::string_view prefix = "/sessions/";
  if (path.substr(0, prefix.size()) == prefix) {
    std::string_view rest = path.substr(prefix.size());
    constexpr std::string_view answer_suffix = "/answer";
    if (method == "POST" && rest.size() > answer_suffix.size() &&
        rest.substr(rest.size() - answer_suffix.size()) == answer_suffix)
      return answer(std::string(rest.substr(0, rest.size() - answer_suffix.size())), body);
    if (method == "GET" && !rest.empty() && rest.find('/') == std::string_view::npos) return view(std::string(rest));
  }
  return error_response(404, "no route for " + std::string(method) + " " + std::string(path));
}

namespace {

nlohmann::json session_view(const SessionService&, const std::string& id, const LoadedScenario& ls, QueryLevel level,
                            bool visible, bool ssl, bool qa, const UserObservation& obs, const Estimates& est,
                            const ResolutionSession& res) {
  const SemanticMap& map = *ls.map;
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : map.objects())
    objects.push_back({{"id", o.id}, {"class_label", o.class_label}, {"position", vec_json(o.position)}});

  nlohmann::json user{{"visible_initially", obs.visible_initially},
                      {"skeleton_available", obs.skeleton.has_value()},
                      {"has_pointing", obs.has_pointing},
                      {"bearing", obs.true_bearing},
                      {"ssl_bearing", obs.ssl_bearing ? nlohmann::json(*obs.ssl_bearing) : nlohmann::json()}};
  if (obs.skeleton) {
    user["eye"] = vec_json(obs.skeleton->eye);
    user["wrist"] = vec_json(obs.skeleton->wrist);
  }
  nlohmann::json ray;
  if (obs.pointing_available()) {
    Vec3 dir = obs.skeleton->wrist - obs.skeleton->eye;
    const double len = dir.norm();
    if (len > 0.0) dir = dir * (1.0 / len);
    ray = {{"origin", vec_json(obs.skeleton->eye)}, {"direction", vec_json(dir)}};
  }
  nlohmann::json region;
  if (est.region_mean)
    region = {{"series", to_string(res.query().series)}, {"mean", vec_json(*est.region_mean)}, {"sigma", est.region_sigma}};

  const bool resolved = res.state() == ResolutionSession::State::Resolved;
  return {{"session_id", id},
          {"scenario", ls.scenario.id},
          {"level", static_cast<int>(level)},
          {"flags", {{"visible", visible}, {"ssl", ssl}, {"qa", qa}}},
          {"query", ls.scenario.query(level)},
          {"state", to_string(res.state())},
          {"shortlist", to_json(res.shortlist())},
          {"initial_shortlist", to_json(res.initial_shortlist())},
          {"question", res.pending_question() ? nlohmann::json(*res.pending_question()) : nlohmann::json()},
          {"transcript", to_json(res.transcript())},
          {"final_id", resolved ? nlohmann::json(res.transcript().final_id) : nlohmann::json()},
          {"scene",
           {{"frame_id", map.frame_id()},
            {"objects", objects},
            {"user", user},
            {"robot", {{"position", vec_json(ls.scenario.robot_position)}}},
            {"pointing_ray", ray},
            {"region", region}}}};
}

}  // namespace

ApiResponse SessionService::create(const std::string& body) {
  auto session = std::make_shared<Session>();
  try {
    const nlohmann::json req = nlohmann::json::parse(body);
    const nlohmann::json& spec = req.at("scenario");
    if (spec.is_string()) {
      const auto path = std::filesystem::weakly_canonical(options_.scenario_root / spec.get<std::string>());
      if (!inside(options_.scenario_root, path)) return error_response(400, "scenario path leaves the scenario root");
      if (!std::filesystem::exists(path)) return error_response(404, "scenario not found: " + spec.get<std::string>());
      session->scenario = load_scenario(path, lexicon_);
    } else {
      Scenario s = scenario_from_json(spec);
      const auto map_path = std::filesystem::weakly_canonical(options_.scenario_root / s.map_ref);
      if (!inside(options_.scenario_root, map_path)) return error_response(400, "map_ref leaves the scenario root");
      auto map = std::make_shared<const SemanticMap>(load_map(map_path));
      validate_scenario(s, *map, lexicon_);
      session->scenario = {std::move(s), std::move(map), {}};
    }

    const int level = req.value("level", 1);
    if (level < 1 || level > 3) return error_response(400, "level must be 1, 2 or 3");
    session->level = static_cast<QueryLevel>(level);
    const nlohmann::json flags = req.value("flags", nlohmann::json::object());
    session->visible = flags.value("visible", session->scenario.scenario.visible_initially);
    session->ssl = flags.value("ssl", true);
    session->qa = flags.value("qa", true);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("bad request: ") + e.what());
  } catch (const ParseError& e) {
    return error_response(400, e.what());
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  }

  try {
    const Scenario& s = session->scenario.scenario;
    UserObservation scripted = s.observation();
    scripted.visible_initially = session->visible;
    session->obs = acquire_observation(scripted, options_.config.ssl, session->ssl, s.seed);
    session->pipeline =
        std::make_unique<Pipeline>(*session->scenario.map, provider_, lexicon_, options_.config.estimators);
    session->backend = options_.backend(*session->scenario.map, lexicon_);

    ParsedQuery query = session->pipeline->parse(s.query(session->level));
    query.level = session->level;
    session->estimates = session->pipeline->estimate(query, session->obs, s.robot_position);
    session->resolution = std::make_unique<ResolutionSession>(
        *session->backend, session->pipeline->reestimator(session->obs, s.robot_position), session->qa);
    session->resolution->begin(session->estimates.shortlist, std::move(query));
  } catch (const std::exception& e) {
    log::error("session_create_failed", {{"error", e.what()}});
    return error_response(500, e.what());
  }

  session->last_access = std::chrono::steady_clock::now();
  {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_++));
    session->id = buf;
    sessions_[session->id] = session;
  }
  log::info("session_created", {{"session_id", session->id}, {"scenario", session->scenario.scenario.id}});
  std::lock_guard lock(session->mutex);
  return {201, session_view(*this, session->id, session->scenario, session->level, session->visible, session->ssl,
                            session->qa, session->obs, session->estimates, *session->resolution)};
}

ApiResponse SessionService::view(const std::string& id) {
  const auto session = find(id);
  if (!session) return error_response(404, "unknown session " + id);
  std::lock_guard lock(session->mutex);
  session->last_access = std::chrono::steady_clock::now();
  return {200, session_view(*this, session->id, session->scenario, session->level, session->visible, session->ssl,
                            session->qa, session->obs, session->estimates, *session->resolution)};
}

ApiResponse SessionService::answer(const std::string& id, const std::string& body) {
  const auto session = find(id);
  if (!session) return error_response(404, "unknown session " + id);
  std::string text;
  try {
    text = nlohmann::json::parse(body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("bad request: ") + e.what());
  }

  std::lock_guard lock(session->mutex);
  session->last_access = std::chrono::steady_clock::now();
  if (session->resolution->state() != ResolutionSession::State::AwaitingAnswer)
    return error_response(409, "session " + id + " has no pending question");
  try {
    session->resolution->submit_answer(text);
  } catch (const std::exception& e) {
    log::error("session_answer_failed", {{"session_id", id}, {"error", e.what()}});
    return error_response(500, e.what());
  }
  return {200, session_view(*this, session->id, session->scenario, session->level, session->visible, session->ssl,
                            session->qa, session->obs, session->estimates, *session->resolution)};
}

struct SessionServer::Impl {
  httplib::Server server;
};

SessionServer::SessionServer(SessionService& service) : impl_(std::make_unique<Impl>()) {
  const auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse out = service.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  impl_->server.Get(R"(/.*)", dispatch);
  impl_->server.Post(R"(/.*)", dispatch);
}

SessionServer::~SessionServer() { stop(); }

bool SessionServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

bool SessionServer::run() { return impl_->server.listen_after_bind(); }

void SessionServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace exosolve
