#include "ockl/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ockl/coreset.hpp"
#include "ockl/error.hpp"
#include "ockl/extproto.hpp"
#include "ockl/rng.hpp"
#include "ockl/stream_io.hpp"

namespace ockl {

namespace {

constexpr std::uint64_t kSeedCoreset = 61;
constexpr std::uint64_t kSeedProbes = 62;
constexpr std::uint64_t kSeedLearner = 63;
constexpr std::uint64_t kSeedRehearsal = 64;

double evaluate(Learner& learner, const std::vector<QAItem>& qa) {
  if (qa.empty()) return 0.0;
  std::vector<std::string> queries;
  std::vector<std::string> golds;
  queries.reserve(qa.size());
  golds.reserve(qa.size());
  for (const auto& q : qa) {
    queries.push_back(q.query);
    golds.push_back(q.gold);
  }
  const auto answers = learner.answer(queries);
  if (answers.size() != queries.size()) {
    fail("learner_error", "learner returned " + std::to_string(answers.size()) + " answers for " +
                              std::to_string(queries.size()) + " queries");
  }
  return exact_match(answers, golds);
}

std::int64_t tokens_of(const std::vector<KnowledgeItem>& items) {
  std::int64_t n = 0;
  for (const auto& it : items) n += it.token_count;
  return n;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

BudgetSplit budget_filter(std::span<const double> costs, double budget) {
  if (std::isnan(budget) || budget < 0.0) fail("invalid_argument", "budget must be >= 0");
  for (double c : costs) {
    if (std::isnan(c) || c < 0.0) fail("invalid_argument", "item costs must be >= 0");
  }
  BudgetSplit split;
  for (double c : costs) {
    if (split.kept_cost + c > budget) break;
    split.kept_cost += c;
    ++split.kept;
  }
  return split;
}

std::vector<double> resolve_reference_budget(double fraction, StrategyKind reference,
                                             const Stream& stream, const CostModel& cost) {
  if (!(fraction > 0.0) || !std::isfinite(fraction)) fail("invalid_argument", "fraction must be > 0");
  CostModel ref = cost;
  ref.multiplier = default_cost_multiplier(reference);
  std::vector<double> out;
  out.reserve(stream.steps.size());
  for (const auto& step : stream.steps) {
    double c = 0.0;
    for (const auto& it : step.knowledge) c += ref.item_cost(it.token_count);
    out.push_back(fraction * c);
  }
  return out;
}

std::vector<double> step_budgets(const RunConfig& config, const Stream& stream) {
  switch (config.budget.mode) {
    case BudgetMode::Unlimited:
      return std::vector<double>(stream.steps.size(), std::numeric_limits<double>::infinity());
    case BudgetMode::Fixed:
      if (std::isnan(config.budget.seconds) || config.budget.seconds < 0.0) {
        fail("config_error", "budget.seconds: must be >= 0");
      }
      return std::vector<double>(stream.steps.size(), config.budget.seconds);
    case BudgetMode::Reference:
      return resolve_reference_budget(config.budget.fraction, config.budget.reference, stream,
                                      config.cost);
  }
  fail("config_error", "budget.mode: unknown");
}

ProbeSet make_probe_set(const Stream& stream, const TemplateSet& templates, std::size_t count,
                        std::uint64_t seed) {
  ProbeSet probes;
  if (count == 0 || stream.steps.empty()) return probes;
  const std::size_t per_task = (count + stream.steps.size() - 1) / stream.steps.size();
  for (const auto& step : stream.steps) {
    Rng rng(derive_seed(seed, kSeedProbes, static_cast<std::uint64_t>(step.index)));
    auto picks = rng.sample(step.qa.size(), per_task);
    std::sort(picks.begin(), picks.end());
    for (std::size_t i : picks) {
      const QAItem& q = step.qa[i];
      const auto parsed = parse_question(q.query, templates);
      if (!parsed) continue;
      probes.texts.push_back(date_prefix(q.date) +
                             render_statement(templates[parsed->template_index], parsed->subject, q.gold));
      probes.tasks.push_back(step.index);
    }
  }
  return probes;
}

const TemplateSet& parsing_templates() {
  static const TemplateSet templates = TemplateSet::standard(kMaxRelations);
  return templates;
}

Stream load_stream(const RunConfig& config) {
  if (config.stream.generate) {
    const auto& g = *config.stream.generate;
    return build_streams(generate_universe(g.universe), g.stream);
  }
  return read_stream(config.stream.knowledge, config.stream.qa);
}

std::unique_ptr<Learner> make_learner(const RunConfig& config, const Stream& stream,
                                      const TemplateSet& templates) {
  config.strategy.validate();
  const bool rehearsal = config.strategy.kind == StrategyKind::Rehearsal;
  StrategyConfig inner_strategy = config.strategy;
  if (rehearsal) {
    inner_strategy.kind = StrategyKind::Vanilla;
    inner_strategy.cost_multiplier = config.strategy.multiplier();
  }
  const std::uint64_t seed = derive_seed(config.seed, kSeedLearner);

  std::unique_ptr<Learner> inner;
  switch (config.learner.kind) {
    case LearnerKind::FactMemory: {
      if (inner_strategy.kind != StrategyKind::Vanilla) {
        fail("config_error", "strategy.kind: " + to_string(config.strategy.kind) +
                                 " needs a parametric learner (hashed_softmax or external)");
      }
      FactMemoryConfig fm;
      fm.capacity = config.learner.capacity;
      fm.eviction = config.learner.eviction;
      fm.seed = seed;
      fm.embed_dim = config.embed_dim;
      fm.cost = config.strategy_cost();
      inner = std::make_unique<FactMemoryLearner>(templates, fm);
      break;
    }
    case LearnerKind::HashedSoftmax: {
      HashedSoftmaxConfig hs;
      hs.feature_dim = config.learner.feature_dim;
      hs.learning_rate = config.learner.learning_rate;
      hs.seed = seed;
      hs.embed_dim = config.embed_dim;
      hs.cost = config.cost;
      hs.strategy = inner_strategy;
      inner = std::make_unique<HashedSoftmaxLearner>(templates, answer_vocabulary(stream, templates), hs);
      break;
    }
    case LearnerKind::External: {
      if (inner_strategy.kind != StrategyKind::Vanilla) {
        fail("config_error", "strategy.kind: " + to_string(config.strategy.kind) +
                                 " is not available for external learners");
      }
      SessionOptions opts{config.learner.command, config.learner.timeout_s};
      auto ext = std::make_unique<ExternalLearner>(std::move(opts), config.embed_dim);
      const bool needs_embed = config.coreset.method == CoresetMethod::KCenter || config.kg_probes > 0;
      const auto& ops = ext->session().ops();
      if (needs_embed && !ops.empty() && std::find(ops.begin(), ops.end(), "embed") == ops.end()) {
        fail("protocol_error", "external learner does not support embed, needed for k-center / KG");
      }
      inner = std::move(ext);
      break;
    }
  }
  if (rehearsal) {
    return std::make_unique<RehearsalLearner>(std::move(inner), config.strategy,
                                              derive_seed(config.seed, kSeedRehearsal));
  }
  return inner;
}

RunResult run_experiment(const RunConfig& config, const Stream& stream, Learner& learner,
                         const TemplateSet& templates, const RecordCallback& on_record) {
  const int T = static_cast<int>(stream.steps.size());
  if (T < 2) fail("invalid_argument", "a run needs at least 2 steps, got " + std::to_string(T));
  if (config.coreset.method != CoresetMethod::None &&
      !(config.coreset.ratio > 0.0 && config.coreset.ratio <= 1.0)) {
    fail("config_error", "coreset.ratio: must be in (0, 1]");
  }

  const CostModel cost = config.strategy_cost();
  const std::vector<double> budgets = step_budgets(config, stream);
  const ProbeSet probes = make_probe_set(stream, templates, config.kg_probes, config.seed);
  const bool wall = config.clock == ClockMode::Wall;

  RunResult result;
  result.manifest = {{"tool_version", kToolVersion}, {"config", to_json(config)}};

  std::int64_t tokens_trained = 0;
  std::int64_t tokens_arrived_total = 0;
  double train_time = 0.0;
  KgSnapshot previous;
  if (!probes.texts.empty()) previous = capture_snapshot(learner, probes, 0);

  for (int t = 1; t <= T; ++t) {
    const StreamStep& step = stream.steps[static_cast<std::size_t>(t - 1)];
    try {
      MetricsRecord rec;
      rec.t = t;

      // Pre-evaluation: the model just before training on task t.
      result.matrix.set(t - 1, t, evaluate(learner, step.qa));

      const auto& arrived = step.knowledge;
      rec.items_arrived = arrived.size();
      rec.tokens_arrived = tokens_of(arrived);

      // Selection.
      const auto select_start = std::chrono::steady_clock::now();
      std::vector<std::size_t> selected;
      double selection_cost = 0.0;
      if (arrived.empty() || config.coreset.method == CoresetMethod::None) {
        selected.resize(arrived.size());
        std::iota(selected.begin(), selected.end(), std::size_t{0});
      } else {
        selection_cost =
            config.coreset.selection_cost_fraction * cost.batch_cost(rec.tokens_arrived, arrived.size());
        switch (config.coreset.method) {
          case CoresetMethod::Random:
            selected = select_random(arrived.size(), config.coreset.ratio,
                                     derive_seed(config.seed, kSeedCoreset, static_cast<std::uint64_t>(t)))
                           .indices;
            break;
          case CoresetMethod::KCenter: {
            std::vector<std::string> texts;
            texts.reserve(arrived.size());
            for (const auto& it : arrived) texts.push_back(it.text);
            selected = select_kcenter(learner.embed(texts), config.coreset.ratio).indices;
            break;
          }
          case CoresetMethod::ModelBased: {
            const auto losses = learner.predict_loss(arrived);
            if (losses.size() != arrived.size()) fail("learner_error", "predict_loss returned the wrong count");
            selected = select_model_based(losses, config.coreset.ratio, config.coreset.order).indices;
            break;
          }
          case CoresetMethod::None:
            break;
        }
      }
      const double select_wall = seconds_since(select_start);
      rec.items_selected_out = arrived.size() - selected.size();
      std::int64_t selected_tokens = 0;
      for (std::size_t i : selected) selected_tokens += arrived[i].token_count;
      rec.tokens_selected_out = rec.tokens_arrived - selected_tokens;

      // Budget: arrival-order prefix of the selected items.
      std::vector<double> costs;
      costs.reserve(selected.size());
      for (std::size_t i : selected) costs.push_back(cost.item_cost(arrived[i].token_count));
      const double budget = std::max(0.0, budgets[static_cast<std::size_t>(t - 1)] - selection_cost);
      const BudgetSplit split = budget_filter(costs, budget);
      std::vector<KnowledgeItem> batch;
      batch.reserve(split.kept);
      for (std::size_t j = 0; j < split.kept; ++j) batch.push_back(arrived[selected[j]]);
      rec.items_trained = batch.size();
      rec.tokens_trained_new = tokens_of(batch);
      rec.discarded_items = selected.size() - split.kept;
      rec.tokens_discarded = selected_tokens - rec.tokens_trained_new;

      // Train: a single pass.
      double step_time = selection_cost;
      if (!batch.empty()) {
        const auto train_start = std::chrono::steady_clock::now();
        const TrainReport report = learner.train(batch);
        const double train_wall = seconds_since(train_start);
        rec.items_replayed = report.items_replayed;
        rec.tokens_replayed = report.tokens_replayed;
        step_time = wall ? select_wall + train_wall : selection_cost + report.cost_seconds;
      } else if (wall) {
        step_time = select_wall;
      }
      tokens_trained += rec.tokens_trained_new + rec.tokens_replayed;
      tokens_arrived_total += rec.tokens_arrived;
      train_time += step_time;
      rec.tokens_trained = tokens_trained;
      rec.train_time_s = train_time;

      // Post-evaluation on the current and previous task.
      result.matrix.set(t, t, evaluate(learner, step.qa));
      if (t >= 2) {
        result.matrix.set(t, t - 1, evaluate(learner, stream.steps[static_cast<std::size_t>(t - 2)].qa));
      }
      rec.em = result.matrix.at(t, t);

      if (!probes.texts.empty()) {
        KgSnapshot current = capture_snapshot(learner, probes, t);
        rec.kg_alignment = kg_capture(KgConfig::Alignment, probes, current, nullptr, t, config.embed_dim);
        rec.kg_forgetting = kg_capture(KgConfig::Forgetting, probes, current, &previous, t, config.embed_dim);
        rec.kg_updating = kg_capture(KgConfig::Updating, probes, current, &previous, t, config.embed_dim);
        previous = std::move(current);
      }

      if (t >= 2) {
        rec.bwt = bwt(result.matrix, t);
        rec.fwt = fwt(result.matrix, t);
        const double tokens = static_cast<double>(
            config.token_accounting == TokenAccounting::Arrived ? tokens_arrived_total : tokens_trained);
        if (train_time > 0.0) rec.kar = kar(*rec.fwt, *rec.bwt, tokens, train_time);
      }

      result.totals.tokens_trained = tokens_trained;
      result.totals.tokens_discarded += rec.tokens_discarded;
      result.totals.items_discarded += rec.discarded_items;
      result.totals.train_time_s = train_time;
      result.records.push_back(rec);
      if (on_record) on_record(rec);
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(t) + ": " + e.what());
    }
  }

  std::vector<QAItem> all;
  for (const auto& step : stream.steps) all.insert(all.end(), step.qa.begin(), step.qa.end());
  result.final_em = evaluate(learner, all);
  return result;
}

RunResult run_experiment(const RunConfig& config, const RecordCallback& on_record) {
  const Stream stream = load_stream(config);
  const TemplateSet& templates = parsing_templates();
  auto learner = make_learner(config, stream, templates);
  return run_experiment(config, stream, *learner, templates, on_record);
}

}  // namespace ockl
