#pragma once

// Line-delimited JSON protocol for learners that run as child processes.
// One request in flight at a time; responses must echo the request id.
// See PROTOCOL.md for the message shapes.

#include <sys/types.h>

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ockl/learners.hpp"

namespace ockl {

inline constexpr int kProtocolVersion = 1;

struct SessionOptions {
  std::vector<std::string> command;  // argv; command[0] is resolved via PATH
  double timeout_s = 30.0;           // per request, including the handshake
};

// Owns the child. Any transport failure (timeout, malformed line, id
// mismatch, early exit) kills the child and leaves the session closed;
// later calls fail with "child_exited".
class Session {
 public:
  explicit Session(SessionOptions options);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Sends {"id", "op", ...payload} and returns the response object. A
  // response with "ok": false raises an Error carrying the remote code.
  nlohmann::json call(const std::string& op, nlohmann::json payload = nlohmann::json::object());

  bool alive() const { return pid_ > 0; }
  const std::vector<std::string>& ops() const { return ops_; }

  // Polite shutdown; kills the child if it does not answer in time.
  void shutdown();

 private:
  void spawn();
  void handshake();
  void send_line(const std::string& line);
  std::string read_line();
  [[noreturn]] void abort_with(const char* code, const std::string& message);
  void kill_child();

  SessionOptions options_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 0;
  std::vector<std::string> ops_;
};

nlohmann::json protocol_item(const KnowledgeItem& item);

class ExternalLearner final : public Learner {
 public:
  ExternalLearner(SessionOptions options, std::size_t embed_dim = kDefaultEmbeddingDim);

  std::string name() const override { return "external"; }
  TrainReport train(std::span<const KnowledgeItem> items) override;
  std::vector<std::string> answer(std::span<const std::string> queries) override;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::vector<double> predict_loss(std::span<const KnowledgeItem> items) override;
  std::uint64_t snapshot_id() override;

  Session& session() { return session_; }

 private:
  Session session_;
  std::size_t embed_dim_;
};

}  // namespace ockl
