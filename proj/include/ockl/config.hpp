#pragma once

// Run configuration and its JSON form. Validation errors carry code
// "config_error" and name the offending key path, e.g. "learner.capacity".

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ockl/coreset.hpp"
#include "ockl/datagen.hpp"
#include "ockl/learners.hpp"

namespace ockl {

inline constexpr const char* kToolVersion = "0.3.0";

enum class LearnerKind { FactMemory, HashedSoftmax, External };
enum class BudgetMode { Unlimited, Fixed, Reference };
enum class ClockMode { Simulated, Wall };
enum class TokenAccounting { Trained, Arrived };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::FactMemory;
  std::size_t capacity = std::numeric_limits<std::size_t>::max();
  Eviction eviction = Eviction::Lru;
  std::size_t feature_dim = 1024;
  double learning_rate = 0.5;
  std::vector<std::string> command;  // external learner argv
  double timeout_s = 30.0;
};

struct CoresetConfig {
  CoresetMethod method = CoresetMethod::None;
  double ratio = 1.0;
  LossOrder order = LossOrder::Ascending;
  double selection_cost_fraction = 0.0;
};

struct BudgetConfig {
  BudgetMode mode = BudgetMode::Unlimited;
  double seconds = std::numeric_limits<double>::infinity();  // fixed mode, per step
  double fraction = 0.5;                                     // reference mode
  StrategyKind reference = StrategyKind::Adapter;
};

struct StreamSource {
  std::optional<GenerationConfig> generate;
  std::filesystem::path knowledge;
  std::filesystem::path qa;
};

struct RunConfig {
  StreamSource stream;
  LearnerSpec learner;
  StrategyConfig strategy;
  CoresetConfig coreset;
  BudgetConfig budget;
  CostModel cost;  // multiplier ignored; it comes from the strategy
  ClockMode clock = ClockMode::Simulated;
  std::uint64_t seed = 1;
  std::size_t kg_probes = 64;
  std::size_t embed_dim = kDefaultEmbeddingDim;
  TokenAccounting token_accounting = TokenAccounting::Trained;

  // Cost model with the strategy's multiplier applied.
  CostModel strategy_cost() const {
    CostModel c = cost;
    c.multiplier = strategy.multiplier();
    return c;
  }
};

// Relative stream paths resolve against `base_dir`. Accepts either a bare
// config or a manifest ({"tool_version": ..., "config": {...}}).
RunConfig run_config_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

nlohmann::json to_json(const GenerationConfig& config);
GenerationConfig generation_config_from_json(const nlohmann::json& j, const std::string& path = "");

}  // namespace ockl
