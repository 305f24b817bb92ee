#include "ockl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ockl/error.hpp"

namespace ockl {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Vanilla: return "vanilla";
    case StrategyKind::Rehearsal: return "rehearsal";
    case StrategyKind::RegAnneal: return "reg_anneal";
    case StrategyKind::LowRank: return "lowrank";
    case StrategyKind::Adapter: return "adapter";
    case StrategyKind::Distill: return "distill";
  }
  return "vanilla";
}

StrategyKind strategy_kind_from_string(std::string_view name) {
  if (name == "vanilla") return StrategyKind::Vanilla;
  if (name == "rehearsal") return StrategyKind::Rehearsal;
  if (name == "reg_anneal") return StrategyKind::RegAnneal;
  if (name == "lowrank") return StrategyKind::LowRank;
  if (name == "adapter") return StrategyKind::Adapter;
  if (name == "distill") return StrategyKind::Distill;
  fail("invalid_argument", "unknown strategy '" + std::string(name) + "'");
}

std::string to_string(RegSchedule schedule) {
  switch (schedule) {
    case RegSchedule::Inverse: return "inverse";
    case RegSchedule::Exponential: return "exponential";
    case RegSchedule::Constant: return "constant";
  }
  return "inverse";
}

RegSchedule reg_schedule_from_string(std::string_view name) {
  if (name == "inverse") return RegSchedule::Inverse;
  if (name == "exponential") return RegSchedule::Exponential;
  if (name == "constant") return RegSchedule::Constant;
  fail("invalid_argument", "unknown regularization schedule '" + std::string(name) + "'");
}

double default_cost_multiplier(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Vanilla: return 1.0;
    case StrategyKind::Rehearsal: return 1.0;
    case StrategyKind::RegAnneal: return 1.15;
    case StrategyKind::LowRank: return 0.7;
    case StrategyKind::Adapter: return 0.8;
    case StrategyKind::Distill: return 2.0;
  }
  return 1.0;
}

void StrategyConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail("invalid_argument", what);
  };
  check(mix_m0 >= 0.0, "rehearsal m0 must be >= 0");
  check(mix_gamma >= 0.0 && mix_gamma < 1.0, "rehearsal gamma must lie in [0,1)");
  check(reg_lambda0 >= 0.0, "reg_anneal lambda0 must be >= 0");
  check(reg_decay >= 0.0 && reg_decay <= 1.0, "reg_anneal decay must lie in [0,1]");
  check(rank >= 1, "lowrank rank must be >= 1");
  check(adapter_dim >= 1, "adapter_dim must be >= 1");
  check(distill_alpha >= 0.0, "distill alpha must be >= 0");
  check(teacher_refresh >= 1, "teacher_refresh must be >= 1");
  check(multiplier() >= 0.0, "cost multiplier must be >= 0");
}

double strategy_mix_ratio(int t, double m0, double gamma) {
  if (t < 0) fail("invalid_argument", "mix ratio step must be >= 0");
  return m0 * std::pow(gamma, static_cast<double>(t));
}

double strategy_reg_strength(int t, double lambda0, RegSchedule schedule, double decay) {
  if (t < 0) fail("invalid_argument", "regularization step must be >= 0");
  switch (schedule) {
    case RegSchedule::Inverse: return lambda0 / (1.0 + static_cast<double>(t));
    case RegSchedule::Exponential: return lambda0 * std::pow(decay, static_cast<double>(t));
    case RegSchedule::Constant: return lambda0;
  }
  return lambda0;
}

RehearsalLearner::RehearsalLearner(std::unique_ptr<Learner> inner, StrategyConfig config,
                                   std::uint64_t seed)
    : inner_(std::move(inner)), config_(config), rng_(derive_seed(seed, 41)) {
  config_.validate();
  if (!inner_) fail("invalid_argument", "rehearsal needs an inner learner");
}

TrainReport RehearsalLearner::train(std::span<const KnowledgeItem> items) {
  if (items.empty()) return {};

  const double ratio = strategy_mix_ratio(step_, config_.mix_m0, config_.mix_gamma);
  const auto wanted =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(items.size()) + 0.5));
  std::vector<KnowledgeItem> batch;
  std::int64_t replay_tokens = 0;
  for (std::size_t i : rng_.sample(buffer_.size(), std::min(wanted, buffer_.size()))) {
    replay_tokens += buffer_[i].token_count;
    batch.push_back(buffer_[i]);
  }
  const std::size_t replayed = batch.size();
  batch.insert(batch.end(), items.begin(), items.end());

  TrainReport report = inner_->train(batch);
  report.items_replayed = replayed;
  report.tokens_replayed = replay_tokens;

  for (const auto& item : items) {
    ++offered_;
    if (buffer_.size() < config_.buffer_capacity) {
      buffer_.push_back(item);
    } else if (config_.buffer_capacity > 0) {
      const std::size_t j = rng_.index(static_cast<std::size_t>(offered_));
      if (j < config_.buffer_capacity) buffer_[j] = item;
    }
  }
  ++step_;
  return report;
}

std::vector<std::string> answer_vocabulary(const Stream& stream, const TemplateSet& templates) {
  std::set<std::string> words;
  for (const auto& step : stream.steps) {
    for (const auto& qa : step.qa) words.insert(qa.gold);
    for (const auto& item : step.knowledge) {
      if (auto parsed = parse_knowledge_item(item.text, templates)) words.insert(parsed->object);
    }
  }
  words.erase(std::string(kUnknownAnswer));
  return {words.begin(), words.end()};
}

}  // namespace ockl
