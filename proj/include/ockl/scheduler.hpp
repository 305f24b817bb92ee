#pragma once

// The online loop: per step, pre-evaluate, select, budget, train once,
// post-evaluate on the current and previous task, snapshot probes, and
// update the running transfer metrics.

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"
#include "ockl/config.hpp"
#include "ockl/core.hpp"
#include "ockl/datagen.hpp"
#include "ockl/learners.hpp"
#include "ockl/metrics.hpp"

namespace ockl {

struct BudgetSplit {
  std::size_t kept = 0;  // items [0, kept) fit; the rest are discarded
  double kept_cost = 0.0;
};

// Greedy arrival-order prefix whose cumulative cost stays within `budget`.
BudgetSplit budget_filter(std::span<const double> costs, double budget);

// fraction x (reference strategy's predicted cost of every arriving item),
// one entry per step. Nothing is trained.
std::vector<double> resolve_reference_budget(double fraction, StrategyKind reference,
                                             const Stream& stream, const CostModel& cost);

// Budget for each step under `config` (infinite when unlimited).
std::vector<double> step_budgets(const RunConfig& config, const Stream& stream);

// Up to ceil(count / T) QA-derived statements per task, seeded; the texts
// carry the date qualifier so versions of one fact stay distinct.
ProbeSet make_probe_set(const Stream& stream, const TemplateSet& templates, std::size_t count,
                        std::uint64_t seed);

std::unique_ptr<Learner> make_learner(const RunConfig& config, const Stream& stream,
                                      const TemplateSet& templates);

// Templates able to parse any stream this tool generates.
const TemplateSet& parsing_templates();

Stream load_stream(const RunConfig& config);

struct RunTotals {
  std::int64_t tokens_trained = 0;
  std::int64_t tokens_discarded = 0;
  std::size_t items_discarded = 0;
  double train_time_s = 0.0;
};

struct RunResult {
  std::vector<MetricsRecord> records;
  AccuracyMatrix matrix;
  RunTotals totals;
  double final_em = 0.0;  // final model on every task's QA
  nlohmann::json manifest;
};

using RecordCallback = std::function<void(const MetricsRecord&)>;

// Called once per completed step; a step that fails never reaches it.
RunResult run_experiment(const RunConfig& config, const Stream& stream, Learner& learner,
                         const TemplateSet& templates, const RecordCallback& on_record = {});

// Loads or generates the stream, builds the learner and runs.
RunResult run_experiment(const RunConfig& config, const RecordCallback& on_record = {});

}  // namespace ockl
