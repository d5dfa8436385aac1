#pragma once

#include <memory>
#include <string>

#include "exosolve/resolver.hpp"

namespace exosolve {

/// Sends one /decide request body and returns the response body. Throws TransportError.
class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  virtual std::string post_decide(const std::string& json_body) = 0;
};

/// POST {endpoint}/decide over HTTP, bearer-authenticated when a key is given.
/// Independent requests may be issued concurrently.
class HttpLlmTransport final : public LlmTransport {
 public:
  HttpLlmTransport(std::string endpoint, std::string api_key, int timeout_seconds = 60);
  std::string post_decide(const std::string& json_body) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  int timeout_seconds_;
};

/// Parses "ID: <object_id>" or "QUESTION: <text>" (surrounding whitespace
/// ignored); anything else is nullopt. A JSON body {"output": "..."} is unwrapped first.
std::optional<ResolverDecision> parse_llm_response(const std::string& body);

/// Request body: {"shortlist": [...], "query": "...", "transcript": {...}}.
nlohmann::json llm_request(const Shortlist& shortlist, const ParsedQuery& query, const QATranscript& transcript);

/// Resolver backed by an external language-model service. Not deterministic;
/// kept out of golden tests. A malformed reply is retried once; a second
/// malformed reply or a transport failure yields Unavailable.
class LlmBackend final : public ResolverBackend {
 public:
  explicit LlmBackend(std::unique_ptr<LlmTransport> transport);

  /// Reads EXOSOLVE_LLM_ENDPOINT (required) and EXOSOLVE_LLM_KEY (optional).
  /// Throws ConfigError naming EXOSOLVE_LLM_ENDPOINT when it is unset.
  static std::unique_ptr<LlmBackend> from_env();

  ResolverDecision decide(const Shortlist& shortlist, const ParsedQuery& query,
                          const QATranscript& transcript) override;

 private:
  std::unique_ptr<LlmTransport> transport_;
};

}  // namespace exosolve
