#include "groundrl/server.hpp"

#include <atomic>

// The library default backlog of 5 drops connections under bursts of
// concurrent clients.
#define CPPHTTPLIB_LISTEN_BACKLOG 256
#include <httplib.h>

#include "groundrl/errors.hpp"
#include "groundrl/serialize.hpp"
#include "groundrl/version.hpp"

namespace groundrl {

namespace {

std::string error_body(const std::string& kind, const std::string& message) {
  return Json{{"error", {{"kind", kind}, {"message", message}}}}.dump();
}

}  // namespace

HttpReply handle_health() {
  return {200, Json{{"status", "ok"}, {"engine_version", kEngineVersion}}.dump()};
}

HttpReply handle_score(const Checkpoint& checkpoint, const std::string& body) {
  ScoreRequest request;
  try {
    request = score_request_from_json(Json::parse(body));
  } catch (const Json::exception& e) {
    return {400, error_body("malformed_body", e.what())};
  } catch (const FormatError& e) {
    return {400, error_body("malformed_body", e.what())};
  }
  try {
    const CopyMixturePolicy policy(checkpoint.vocab, checkpoint.params);
    const ScoreResponse response = process_request(request, &policy, checkpoint.vocab);
    return {200, to_json(response).dump()};
  } catch (const InvalidTokenError& e) {
    return {422, error_body("invalid_token", e.what())};
  } catch (const ConfigError& e) {
    return {422, error_body("invalid_request", e.what())};
  } catch (const std::exception& e) {
    return {500, error_body("internal", e.what())};
  }
}

struct ScoringServer::Impl {
  explicit Impl(Checkpoint c) : checkpoint(std::move(c)) {}
  const Checkpoint checkpoint;
  httplib::Server server;
  std::atomic<bool> running{false};
};

ScoringServer::ScoringServer(Checkpoint checkpoint) : impl_(std::make_unique<Impl>(std::move(checkpoint))) {
  Impl* impl = impl_.get();
  impl->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    const HttpReply r = handle_health();
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  impl->server.Post("/score", [impl](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = handle_score(impl->checkpoint, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
}

ScoringServer::~ScoringServer() { stop(); }

int ScoringServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void ScoringServer::listen() {
  impl_->running = true;
  impl_->server.listen_after_bind();
  impl_->running = false;
}

void ScoringServer::stop() {
  if (impl_) impl_->server.stop();
}

bool ScoringServer::running() const { return impl_->running && impl_->server.is_running(); }

}  // namespace groundrl
