#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "exosolve/config.hpp"
#include "exosolve/eval.hpp"

namespace exosolve {

struct SessionServiceOptions {
  /// Scenario paths in requests are resolved against this directory and may not leave it.
  std::filesystem::path scenario_root = ".";
  RunConfig config;
  BackendFactory backend = rule_backend_factory();
  std::chrono::seconds idle_timeout{600};
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// In-memory resolution sessions behind a small JSON API:
///
///   POST /sessions              {scenario, level, flags} -> session view
///   GET  /sessions/{id}         -> session view with scene geometry
///   POST /sessions/{id}/answer  {text} -> session view
///   GET  /healthz
///
/// Each session is mutated under its own lock; idle sessions are dropped on the
/// next request after the timeout.
class SessionService {
 public:
  SessionService(const EmbeddingProvider& provider, const Lexicon& lexicon, SessionServiceOptions options);
  ~SessionService();

  ApiResponse handle(std::string_view method, std::string_view path, const std::string& body);

  std::size_t session_count() const;
  /// Drops sessions idle since before (now - timeout); returns how many.
  std::size_t expire_idle(std::chrono::steady_clock::time_point now);

 private:
  struct Session;

  ApiResponse create(const std::string& body);
  ApiResponse view(const std::string& id);
  ApiResponse answer(const std::string& id, const std::string& body);
  std::shared_ptr<Session> find(const std::string& id);

  const EmbeddingProvider& provider_;
  const Lexicon& lexicon_;
  SessionServiceOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// HTTP front end for a SessionService.
class SessionServer {
 public:
  explicit SessionServer(SessionService& service);
  ~SessionServer();

  /// Port 0 picks a free port. Returns false when the address cannot be bound.
  bool bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Blocks until stop().
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace exosolve
