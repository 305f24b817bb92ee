#include "ockl/extproto.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "ockl/error.hpp"

namespace ockl {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() <= 0 ? 0 : static_cast<int>(std::min<long long>(left.count(), 1 << 30));
}

Clock::time_point deadline_after(double seconds) {
  if (!std::isfinite(seconds)) return Clock::time_point::max();
  return Clock::now() + std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
}

void ignore_sigpipe() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

std::string excerpt(const std::string& line) {
  return line.size() > 120 ? line.substr(0, 120) + "..." : line;
}

}  // namespace

Session::Session(SessionOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) fail("invalid_argument", "external learner command is empty");
  if (!(options_.timeout_s > 0.0)) fail("invalid_argument", "timeout must be positive");
  ignore_sigpipe();
  spawn();
  handshake();
}

Session::~Session() {
  try {
    shutdown();
  } catch (...) {
    kill_child();
  }
}

void Session::spawn() {
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail("child_exited", std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail("child_exited", std::string("pipe: ") + std::strerror(errno));
  }
  std::vector<char*> argv;
  for (auto& a : options_.command) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) fail("child_exited", std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void Session::kill_child() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
}

void Session::abort_with(const char* code, const std::string& message) {
  kill_child();
  fail(code, message);
}

void Session::send_line(const std::string& line) {
  const auto deadline = deadline_after(options_.timeout_s);
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    pollfd p{to_child_, POLLOUT, 0};
    const int r = ::poll(&p, 1, remaining_ms(deadline));
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) abort_with("timeout", "external learner did not accept input in time");
    if (r < 0 || (p.revents & (POLLERR | POLLHUP))) {
      abort_with("child_exited", "external learner closed its input");
    }
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      abort_with("child_exited", "external learner closed its input");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string Session::read_line() {
  const auto deadline = deadline_after(options_.timeout_s);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd p{from_child_, POLLIN, 0};
    const int r = ::poll(&p, 1, remaining_ms(deadline));
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) {
      abort_with("timeout", "external learner did not respond within " +
                                std::to_string(options_.timeout_s) + " s");
    }
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) abort_with("child_exited", "external learner exited");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

json Session::call(const std::string& op, json payload) {
  if (!alive()) fail("child_exited", "external learner is not running");
  if (!payload.is_object()) fail("invalid_argument", "payload must be an object");
  const std::uint64_t id = next_id_++;
  payload["id"] = id;
  payload["op"] = op;
  send_line(payload.dump());

  const std::string line = read_line();
  json response;
  try {
    response = json::parse(line);
  } catch (const json::exception&) {
    abort_with("protocol_error", "malformed response line: " + excerpt(line));
  }
  if (!response.is_object()) abort_with("protocol_error", "response is not an object");
  const auto rid = response.find("id");
  if (rid == response.end() || !rid->is_number_unsigned() || rid->get<std::uint64_t>() != id) {
    abort_with("protocol_error",
               "response id does not match request id " + std::to_string(id) + ": " + excerpt(line));
  }
  const auto ok = response.find("ok");
  if (ok == response.end() || !ok->is_boolean()) abort_with("protocol_error", "response lacks \"ok\"");
  if (!ok->get<bool>()) {
    std::string code = "remote_error";
    std::string message = "remote error";
    if (const auto e = response.find("error"); e != response.end() && e->is_object()) {
      if (e->contains("code") && (*e)["code"].is_string()) code = (*e)["code"].get<std::string>();
      if (e->contains("message") && (*e)["message"].is_string()) {
        message = (*e)["message"].get<std::string>();
      }
    }
    throw Error(code, op + ": " + message);
  }
  return response;
}

void Session::handshake() {
  json r;
  try {
    r = call("hello", {{"version", kProtocolVersion}});
  } catch (const Error& e) {
    if (alive()) kill_child();
    if (e.code() == "timeout" || e.code() == "protocol_error" || e.code() == "child_exited") throw;
    fail("version_mismatch", std::string("handshake rejected: ") + e.what());
  }
  if (!r.contains("version") || !r["version"].is_number_integer() ||
      r["version"].get<int>() != kProtocolVersion) {
    abort_with("version_mismatch", "external learner speaks protocol version " +
                                       (r.contains("version") ? r["version"].dump() : "?") +
                                       ", expected " + std::to_string(kProtocolVersion));
  }
  if (r.contains("ops") && r["ops"].is_array()) {
    for (const auto& o : r["ops"]) {
      if (o.is_string()) ops_.push_back(o.get<std::string>());
    }
  }
}

void Session::shutdown() {
  if (!alive()) return;
  try {
    call("shutdown");
  } catch (const Error&) {
  }
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    // Give the child a moment to exit on its own.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      ::usleep(10000);
    }
  }
  kill_child();
}

json protocol_item(const KnowledgeItem& item) {
  return {{"item_id", item.item_id},
          {"text", item.text},
          {"date", item.date},
          {"token_count", item.token_count}};
}

namespace {

template <class T>
T field(const json& r, const char* key, const char* op) {
  const auto it = r.find(key);
  if (it == r.end()) fail("protocol_error", std::string(op) + " response lacks \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail("protocol_error", std::string(op) + " response has a malformed \"" + key + "\"");
  }
}

json item_array(std::span<const KnowledgeItem> items) {
  json a = json::array();
  for (const auto& it : items) a.push_back(protocol_item(it));
  return a;
}

json string_array(std::span<const std::string> xs) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(x);
  return a;
}

}  // namespace

ExternalLearner::ExternalLearner(SessionOptions options, std::size_t embed_dim)
    : session_(std::move(options)), embed_dim_(embed_dim) {}

TrainReport ExternalLearner::train(std::span<const KnowledgeItem> items) {
  const json r = session_.call("train", {{"items", item_array(items)}});
  TrainReport report;
  report.tokens_processed = field<std::int64_t>(r, "tokens_processed", "train");
  report.cost_seconds = field<double>(r, "cost_seconds", "train");
  report.items_seen = items.size();
  if (r.contains("items_skipped")) report.items_skipped = field<std::size_t>(r, "items_skipped", "train");
  if (report.tokens_processed < 0 || !(report.cost_seconds >= 0.0)) {
    fail("protocol_error", "train response has negative tokens or cost");
  }
  return report;
}

std::vector<std::string> ExternalLearner::answer(std::span<const std::string> queries) {
  const json r = session_.call("answer", {{"queries", string_array(queries)}});
  auto answers = field<std::vector<std::string>>(r, "answers", "answer");
  if (answers.size() != queries.size()) fail("protocol_error", "answer count does not match query count");
  return answers;
}

std::vector<Embedding> ExternalLearner::embed(std::span<const std::string> texts) {
  const json r = session_.call("embed", {{"texts", string_array(texts)}, {"dim", embed_dim_}});
  auto vectors = field<std::vector<std::vector<double>>>(r, "vectors", "embed");
  if (vectors.size() != texts.size()) fail("protocol_error", "vector count does not match text count");
  std::vector<Embedding> out;
  out.reserve(vectors.size());
  for (auto& v : vectors) {
    if (v.size() != embed_dim_) fail("protocol_error", "embed returned a vector of the wrong dimension");
    out.emplace_back(std::move(v));
  }
  return out;
}

std::vector<double> ExternalLearner::predict_loss(std::span<const KnowledgeItem> items) {
  const json r = session_.call("predict_loss", {{"items", item_array(items)}});
  auto losses = field<std::vector<double>>(r, "losses", "predict_loss");
  if (losses.size() != items.size()) fail("protocol_error", "loss count does not match item count");
  return losses;
}

std::uint64_t ExternalLearner::snapshot_id() {
  const json r = session_.call("snapshot_id");
  const auto it = r.find("snapshot_id");
  if (it == r.end()) fail("protocol_error", "snapshot_id response lacks \"snapshot_id\"");
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) return static_cast<std::uint64_t>(it->get<std::int64_t>());
  if (it->is_string()) return token_hash(it->get<std::string>());
  fail("protocol_error", "snapshot_id must be a number or a string");
}

}  // namespace ockl
