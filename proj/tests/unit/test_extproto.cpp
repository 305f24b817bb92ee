#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <functional>

#include "ockl/config.hpp"
#include "ockl/error.hpp"
#include "ockl/extproto.hpp"
#include "ockl/scheduler.hpp"

using namespace ockl;
using nlohmann::json;

namespace {

SessionOptions echo(std::vector<std::string> args = {}, double timeout_s = 10.0) {
  SessionOptions o;
  o.command = {ECHO_LEARNER};
  o.command.insert(o.command.end(), args.begin(), args.end());
  o.timeout_s = timeout_s;
  return o;
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

RunConfig small_run() {
  RunConfig c;
  GenerationConfig g;
  g.universe = {7, 16, 4, 0.6, 80, 1};
  g.stream = {4, 12, StreamMode::RedundancyFree, 7};
  c.stream.generate = g;
  c.kg_probes = 8;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Protocol, HandshakeAndOps) {
  Session s(echo());
  EXPECT_TRUE(s.alive());
  const auto& ops = s.ops();
  EXPECT_NE(std::find(ops.begin(), ops.end(), "embed"), ops.end());
  const auto r = s.call("snapshot_id");
  EXPECT_TRUE(r.at("ok").get<bool>());
  s.shutdown();
  EXPECT_FALSE(s.alive());
}

TEST(Protocol, LearnerRoundTrip) {
  ExternalLearner ext(echo());
  KnowledgeItem it;
  it.item_id = "k1";
  const auto templates = TemplateSet::standard(kMaxRelations);
  it.text = render_statement(templates[0], "e1", "e2");
  it.date = 10;
  it.token_count = 5;
  const auto before = ext.snapshot_id();
  const auto rep = ext.train(std::span<const KnowledgeItem>(&it, 1));
  EXPECT_EQ(rep.tokens_processed, 5);
  EXPECT_NE(ext.snapshot_id(), before);
  const auto q = render_question(templates[0], "e1");
  const std::vector<std::string> queries = {q};
  EXPECT_EQ(ext.answer(queries), std::vector<std::string>{"e2"});
  const std::vector<std::string> texts = {"a", "b c"};
  const auto vecs = ext.embed(texts);
  ASSERT_EQ(vecs.size(), 2u);
  EXPECT_EQ(vecs[0].dim(), kDefaultEmbeddingDim);
  EXPECT_EQ(ext.predict_loss(std::span<const KnowledgeItem>(&it, 1)).size(), 1u);
}

TEST(Protocol, VersionMismatch) {
  EXPECT_EQ(error_code([] { Session s(echo({"--fault", "version"})); }), "version_mismatch");
}

TEST(Protocol, Timeout) {
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(error_code([] { Session s(echo({"--fault", "hang"}, 0.3)); }), "timeout");
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(Protocol, MalformedResponses) {
  EXPECT_EQ(error_code([] { Session s(echo({"--fault", "wrong-id"})); }), "protocol_error");
  EXPECT_EQ(error_code([] { Session s(echo({"--fault", "garbage"})); }), "protocol_error");
  Session s(echo({"--fault", "garbage", "--fault-op", "answer"}));
  EXPECT_EQ(error_code([&] { s.call("answer", {{"queries", json::array()}}); }), "protocol_error");
  EXPECT_FALSE(s.alive());
  EXPECT_EQ(error_code([&] { s.call("snapshot_id"); }), "child_exited");
}

TEST(Protocol, ChildExit) {
  Session s(echo({"--fault", "exit", "--fault-op", "train"}));
  EXPECT_EQ(error_code([&] { s.call("train", {{"items", json::array()}}); }), "child_exited");
  EXPECT_FALSE(s.alive());
}

TEST(Protocol, RemoteErrorCarriesCode) {
  Session s(echo({"--fault", "remote", "--fault-op", "answer"}));
  EXPECT_EQ(error_code([&] { s.call("answer", {{"queries", json::array()}}); }), "out_of_memory");
  // Remote errors leave the session usable.
  EXPECT_TRUE(s.alive());
  EXPECT_TRUE(s.call("snapshot_id").at("ok").get<bool>());
  EXPECT_EQ(error_code([&] { s.call("frobnicate"); }), "unsupported_op");
}

TEST(Protocol, MissingExecutable) {
  SessionOptions o{{"/nonexistent/ockl-learner"}, 2.0};
  EXPECT_EQ(error_code([&] { Session s(o); }), "child_exited");
}

TEST(Protocol, ExternalRunMatchesInProcess) {
  auto in_process = small_run();
  auto external = small_run();
  external.learner.kind = LearnerKind::External;
  external.learner.command = {ECHO_LEARNER};
  const auto a = run_experiment(in_process);
  const auto b = run_experiment(external);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.final_em, b.final_em);
}

TEST(Protocol, MissingEmbedIsRejectedWhenNeeded) {
  auto c = small_run();
  c.learner.kind = LearnerKind::External;
  c.learner.command = {ECHO_LEARNER, "--no-embed"};
  EXPECT_EQ(error_code([&] { run_experiment(c); }), "protocol_error");
  c.kg_probes = 0;
  EXPECT_NO_THROW(run_experiment(c));
}

TEST(Protocol, ExternalLearnerRejectsParametricStrategies) {
  auto c = small_run();
  c.learner.kind = LearnerKind::External;
  c.learner.command = {ECHO_LEARNER};
  c.strategy.kind = StrategyKind::LowRank;
  EXPECT_EQ(error_code([&] { run_experiment(c); }), "config_error");
}

TEST(Protocol, ChildDeathFailsTheStep) {
  auto c = small_run();
  c.learner.kind = LearnerKind::External;
  c.learner.command = {ECHO_LEARNER, "--fault", "exit", "--fault-op", "train"};
  int rows = 0;
  try {
    run_experiment(c, [&](const MetricsRecord&) { ++rows; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "child_exited");
    EXPECT_EQ(std::string(e.what()).rfind("step 1: ", 0), 0u) << e.what();
  }
  EXPECT_EQ(rows, 0);
}
