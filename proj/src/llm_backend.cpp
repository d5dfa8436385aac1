#include "exosolve/llm_backend.hpp"

#include <httplib.h>

#include <cstdlib>

#include "exosolve/errors.hpp"
#include "exosolve/log.hpp"
#include "http_util.hpp"

namespace exosolve {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

HttpLlmTransport::HttpLlmTransport(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {}

std::string HttpLlmTransport::post_decide(const std::string& json_body) {
  const auto [host, prefix] = detail::split_url(endpoint_);
  httplib::Client client(host);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(prefix + "/decide", headers, json_body, "application/json");
  if (!res) throw TransportError("LLM endpoint " + endpoint_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status));
  return res->body;
}

std::optional<ResolverDecision> parse_llm_response(const std::string& body) {
  std::string text = trim(body);
  if (!text.empty() && text.front() == '{') {
    try {
      text = trim(nlohmann::json::parse(text).at("output").get<std::string>());
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }
  if (text.find('\n') != std::string::npos) return std::nullopt;
  constexpr std::string_view kId = "ID:";
  constexpr std::string_view kQuestion = "QUESTION:";
  if (text.starts_with(kId)) {
    std::string id = trim(std::string_view(text).substr(kId.size()));
    if (id.empty() || id.find_first_of(" \t") != std::string::npos) return std::nullopt;
    return ResolverDecision::identified(std::move(id));
  }
  if (text.starts_with(kQuestion)) {
    std::string q = trim(std::string_view(text).substr(kQuestion.size()));
    if (q.empty()) return std::nullopt;
    return ResolverDecision::ask(std::move(q));
  }
  return std::nullopt;
}

nlohmann::json llm_request(const Shortlist& shortlist, const ParsedQuery& query, const QATranscript& transcript) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : shortlist)
    items.push_back({{"id", s.object_id},
                     {"class", s.class_label},
                     {"probability", s.fused_probability},
                     {"image_ref", s.image_ref ? nlohmann::json(*s.image_ref) : nlohmann::json()}});
  return {{"shortlist", items}, {"query", query.raw_text}, {"transcript", to_json(transcript)}};
}

LlmBackend::LlmBackend(std::unique_ptr<LlmTransport> transport) : transport_(std::move(transport)) {}

std::unique_ptr<LlmBackend> LlmBackend::from_env() {
  const char* endpoint = std::getenv("EXOSOLVE_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) throw ConfigError("--backend llm requires EXOSOLVE_LLM_ENDPOINT to be set");
  const char* key = std::getenv("EXOSOLVE_LLM_KEY");
  return std::make_unique<LlmBackend>(std::make_unique<HttpLlmTransport>(endpoint, key ? key : ""));
}

ResolverDecision LlmBackend::decide(const Shortlist& shortlist, const ParsedQuery& query,
                                    const QATranscript& transcript) {
  const std::string body = llm_request(shortlist, query, transcript).dump();
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = transport_->post_decide(body);
    } catch (const TransportError& e) {
      return ResolverDecision::unavailable(e.what());
    }
    if (auto d = parse_llm_response(reply)) return *d;
    log::warn("llm_malformed_reply", {{"attempt", attempt + 1}, {"reply", reply.substr(0, 200)}});
  }
  return ResolverDecision::unavailable("LLM reply violated the ID:/QUESTION: grammar twice");
}

}  // namespace exosolve
