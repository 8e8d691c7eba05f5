#pragma once

#include <memory>
#include <string>

#include "groundrl/checkpoint.hpp"

namespace groundrl {

struct HttpReply {
  int status = 200;
  std::string body;
};

// Transport-independent handlers; the HTTP server only forwards to these.
HttpReply handle_score(const Checkpoint& checkpoint, const std::string& body);
HttpReply handle_health();

/// Stateless scoring endpoint over an immutable checkpoint.
/// POST /score takes one ScoreRequest JSON body; GET /health returns the
/// engine version.
class ScoringServer {
 public:
  explicit ScoringServer(Checkpoint checkpoint);
  ~ScoringServer();
  ScoringServer(const ScoringServer&) = delete;
  ScoringServer& operator=(const ScoringServer&) = delete;

  // Binds to port (0 picks a free one) and returns the bound port; -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace groundrl
