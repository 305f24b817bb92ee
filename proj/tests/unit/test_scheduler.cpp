#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ockl/error.hpp"
#include "ockl/scheduler.hpp"

using namespace ockl;

namespace {

GenerationConfig small_generation(StreamMode mode = StreamMode::RedundancyFree) {
  GenerationConfig g;
  g.universe = {3, 12, 4, 0.5, 60, 1};
  g.stream = {6, 10, mode, 3};
  return g;
}

RunConfig small_run(LearnerKind kind = LearnerKind::FactMemory) {
  RunConfig c;
  c.stream.generate = small_generation();
  c.learner.kind = kind;
  c.learner.feature_dim = 256;
  c.kg_probes = 12;
  return c;
}

RunResult run(const RunConfig& c, const RecordCallback& cb = {}) { return run_experiment(c, cb); }

void expect_conservation(const RunResult& r) {
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.tokens_arrived, rec.tokens_selected_out + rec.tokens_discarded + rec.tokens_trained_new) << rec.t;
    EXPECT_EQ(rec.items_arrived, rec.items_selected_out + rec.discarded_items + rec.items_trained) << rec.t;
  }
}

}  // namespace

TEST(BudgetFilter, PrefixRule) {
  const std::vector<double> costs{3, 3, 3};
  EXPECT_EQ(budget_filter(costs, 6).kept, 2u);
  EXPECT_EQ(budget_filter(costs, std::numeric_limits<double>::infinity()).kept, 3u);
  EXPECT_EQ(budget_filter(costs, 0).kept, 0u);
  // The first overflowing item ends the prefix even if a later one would fit.
  EXPECT_EQ(budget_filter(std::vector<double>{1, 5, 1}, 3).kept, 1u);
  EXPECT_THROW(budget_filter(costs, -1), Error);
  EXPECT_THROW(budget_filter(std::vector<double>{1, -2}, 5), Error);
}

TEST(BudgetFilter, MonotoneInBudget) {
  const std::vector<double> costs{0.5, 1.25, 0.25, 2, 0.75, 1};
  std::size_t prev = 0;
  for (double b = 0; b <= 7; b += 0.125) {
    const auto k = budget_filter(costs, b).kept;
    EXPECT_GE(k, prev);
    prev = k;
  }
}

TEST(ReferenceBudget, ArithmeticAndSelfReference) {
  const auto stream = load_stream(small_run());
  CostModel cost;
  const auto full = resolve_reference_budget(1.0, StrategyKind::Adapter, stream, cost);
  const auto half = resolve_reference_budget(0.5, StrategyKind::Adapter, stream, cost);
  ASSERT_EQ(full.size(), stream.steps.size());
  for (std::size_t i = 0; i < full.size(); ++i) {
    std::int64_t tokens = 0;
    for (const auto& k : stream.steps[i].knowledge) tokens += k.token_count;
    EXPECT_NEAR(full[i], 0.8e-3 * static_cast<double>(tokens), 1e-12);
    EXPECT_NEAR(half[i], 0.5 * full[i], 1e-12);
  }
  EXPECT_THROW(resolve_reference_budget(0.0, StrategyKind::Adapter, stream, cost), Error);

  auto c = small_run(LearnerKind::HashedSoftmax);
  c.strategy.kind = StrategyKind::Adapter;
  c.budget.mode = BudgetMode::Reference;
  c.budget.fraction = 1.0;
  c.budget.reference = StrategyKind::Adapter;
  EXPECT_EQ(run(c).totals.items_discarded, 0u);
}

TEST(ReferenceBudget, CheaperStrategyKeepsAtLeastAsMuch) {
  auto c = small_run(LearnerKind::HashedSoftmax);
  c.budget.mode = BudgetMode::Reference;
  c.budget.fraction = 0.5;
  c.strategy.kind = StrategyKind::LowRank;
  c.strategy.rank = 4;
  const auto low = run(c);
  c.strategy.kind = StrategyKind::Adapter;
  const auto adapter = run(c);
  EXPECT_LE(low.totals.items_discarded, adapter.totals.items_discarded);
}

TEST(Scheduler, PerfectMemory) {
  const auto r = run(small_run());
  ASSERT_EQ(r.records.size(), 6u);
  double pre = 0.0;
  for (int t = 1; t <= 6; ++t) {
    EXPECT_EQ(r.matrix.at(t, t), 1.0);
    if (t >= 2) EXPECT_EQ(r.matrix.at(t, t - 1), 1.0);
    if (t >= 2) pre += r.matrix.at(t - 1, t);
  }
  EXPECT_EQ(*r.records.back().bwt, 0.0);
  EXPECT_NEAR(*r.records.back().fwt, 1.0 - pre / 5.0, 1e-15);
  EXPECT_EQ(r.final_em, 1.0);
  EXPECT_FALSE(r.records.front().bwt);
  EXPECT_FALSE(r.records.front().kar);
}

TEST(Scheduler, AdjacentCellsOnly) {
  const auto r = run(small_run());
  EXPECT_EQ(r.matrix.size(), 3u * 6u - 1u);
  for (const auto& [cell, v] : r.matrix.entries()) {
    const auto [i, j] = cell;
    EXPECT_TRUE(i == j || i == j - 1 || i == j + 1);
  }
}

TEST(Scheduler, ZeroBudgetStarves) {
  auto c = small_run();
  c.budget.mode = BudgetMode::Fixed;
  c.budget.seconds = 0.0;
  const auto stream = load_stream(c);
  auto learner = make_learner(c, stream, parsing_templates());
  const auto id = learner->snapshot_id();
  const auto r = run_experiment(c, stream, *learner, parsing_templates());
  EXPECT_EQ(learner->snapshot_id(), id);
  EXPECT_EQ(*r.records.back().fwt, 0.0);
  for (int t = 1; t <= 6; ++t) EXPECT_EQ(r.matrix.at(t, t), r.matrix.at(t - 1, t));
  EXPECT_EQ(r.totals.tokens_trained, 0);
  expect_conservation(r);
}

TEST(Scheduler, DeterministicAndConserving) {
  for (auto method : {CoresetMethod::None, CoresetMethod::Random, CoresetMethod::KCenter, CoresetMethod::ModelBased}) {
    auto c = small_run(LearnerKind::HashedSoftmax);
    c.stream.generate = small_generation(StreamMode::Redundant);
    c.strategy.kind = StrategyKind::Rehearsal;
    c.coreset.method = method;
    c.coreset.ratio = 0.6;
    c.budget.mode = BudgetMode::Fixed;
    c.budget.seconds = 0.04;
    const auto a = run(c);
    const auto b = run(c);
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(a.matrix, b.matrix);
    expect_conservation(a);
    std::int64_t trained = 0, discarded = 0;
    std::size_t items_discarded = 0;
    for (const auto& rec : a.records) {
      trained += rec.tokens_trained_new + rec.tokens_replayed;
      discarded += rec.tokens_discarded;
      items_discarded += rec.discarded_items;
      EXPECT_EQ(rec.tokens_trained, trained);
    }
    EXPECT_EQ(a.totals.tokens_trained, trained);
    EXPECT_EQ(a.totals.tokens_discarded, discarded);
    EXPECT_EQ(a.totals.items_discarded, items_discarded);
  }
}

TEST(Scheduler, CumulativeColumnsNonDecreasing) {
  auto c = small_run(LearnerKind::HashedSoftmax);
  const auto r = run(c);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_GE(r.records[i].tokens_trained, r.records[i - 1].tokens_trained);
    EXPECT_GE(r.records[i].train_time_s, r.records[i - 1].train_time_s);
  }
  const auto& last = r.records.back();
  EXPECT_NEAR(*last.kar, kar(*last.fwt, *last.bwt, static_cast<double>(last.tokens_trained), last.train_time_s),
              1e-12);
}

TEST(Scheduler, ArrivedTokenAccounting) {
  auto c = small_run();
  c.token_accounting = TokenAccounting::Arrived;
  c.budget.mode = BudgetMode::Fixed;
  c.budget.seconds = 0.02;
  const auto r = run(c);
  std::int64_t arrived = 0;
  for (const auto& rec : r.records) arrived += rec.tokens_arrived;
  const auto& last = r.records.back();
  EXPECT_NEAR(*last.kar, kar(*last.fwt, *last.bwt, static_cast<double>(arrived), last.train_time_s), 1e-12);
}

TEST(Scheduler, WallClockKeepsDecisions) {
  auto c = small_run();
  c.budget.mode = BudgetMode::Fixed;
  c.budget.seconds = 0.03;
  const auto sim = run(c);
  c.clock = ClockMode::Wall;
  const auto wall = run(c);
  ASSERT_EQ(sim.records.size(), wall.records.size());
  for (std::size_t i = 0; i < sim.records.size(); ++i) {
    EXPECT_EQ(sim.records[i].discarded_items, wall.records[i].discarded_items);
    EXPECT_EQ(sim.records[i].tokens_trained, wall.records[i].tokens_trained);
    EXPECT_EQ(sim.records[i].em, wall.records[i].em);
  }
}

TEST(Scheduler, NeedsTwoSteps) {
  auto c = small_run();
  c.stream.generate->stream.n_steps = 2;
  EXPECT_NO_THROW(run(c));
  Stream one;
  one.steps.resize(1);
  one.steps[0].index = 1;
  FactMemoryLearner m(parsing_templates(), {});
  EXPECT_THROW(run_experiment(c, one, m, parsing_templates()), Error);
}

namespace {

class FailingLearner final : public Learner {
 public:
  explicit FailingLearner(int fail_at) : fail_at_(fail_at), inner_(parsing_templates(), {}) {}
  std::string name() const override { return "failing"; }
  TrainReport train(std::span<const KnowledgeItem> items) override {
    if (++calls_ == fail_at_) fail("child_exited", "learner went away");
    return inner_.train(items);
  }
  std::vector<std::string> answer(std::span<const std::string> q) override { return inner_.answer(q); }
  std::vector<Embedding> embed(std::span<const std::string> t) override { return inner_.embed(t); }
  std::vector<double> predict_loss(std::span<const KnowledgeItem> i) override { return inner_.predict_loss(i); }
  std::uint64_t snapshot_id() override { return inner_.snapshot_id(); }

 private:
  int fail_at_;
  int calls_ = 0;
  FactMemoryLearner inner_;
};

}  // namespace

TEST(Scheduler, LearnerFailureCarriesStepAndNoPartialRow) {
  auto c = small_run();
  const auto stream = load_stream(c);
  FailingLearner learner(3);
  int rows = 0;
  try {
    run_experiment(c, stream, learner, parsing_templates(), [&](const MetricsRecord&) { ++rows; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "child_exited");
    EXPECT_EQ(std::string(e.what()).rfind("step 3: ", 0), 0u) << e.what();
  }
  EXPECT_EQ(rows, 2);
}

TEST(Scheduler, RatioOneEqualsNoCoreset) {
  auto c = small_run(LearnerKind::HashedSoftmax);
  const auto none = run(c);
  c.coreset.method = CoresetMethod::KCenter;
  c.coreset.ratio = 1.0;
  const auto full = run(c);
  EXPECT_EQ(none.records, full.records);
}

TEST(ProbeSet, StratifiedAndDated) {
  const auto stream = load_stream(small_run());
  const auto probes = make_probe_set(stream, parsing_templates(), 12, 1);
  EXPECT_LE(probes.size(), 12u);
  EXPECT_GT(probes.size(), 0u);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    EXPECT_EQ(probes.texts[i].rfind("As of day ", 0), 0u);
    EXPECT_GE(probes.tasks[i], 1);
    if (i > 0) EXPECT_GE(probes.tasks[i], probes.tasks[i - 1]);
  }
  EXPECT_EQ(make_probe_set(stream, parsing_templates(), 0, 1).size(), 0u);
}

TEST(MakeLearner, StrategyNeedsParametricHost) {
  auto c = small_run();
  c.strategy.kind = StrategyKind::LowRank;
  const auto stream = load_stream(c);
  try {
    make_learner(c, stream, parsing_templates());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "config_error");
  }
  c.strategy.kind = StrategyKind::Rehearsal;
  EXPECT_EQ(make_learner(c, stream, parsing_templates())->name(), "fact_memory+rehearsal");
}
