#pragma once

// Learner contract plus the two in-process learners (a storage-limited fact
// memory and a single-pass hashed softmax classifier) and the continual
// learning strategies they host.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ockl/core.hpp"
#include "ockl/datagen.hpp"
#include "ockl/rng.hpp"

namespace ockl {

inline constexpr std::string_view kUnknownAnswer = "<unk>";

// Simulated compute cost: (per_token_cost * tokens + per_item_overhead * items) * multiplier.
struct CostModel {
  double per_token_cost = 1e-3;
  double per_item_overhead = 0.0;
  double multiplier = 1.0;

  double item_cost(int tokens) const {
    return (per_token_cost * static_cast<double>(tokens) + per_item_overhead) * multiplier;
  }
  double batch_cost(std::int64_t tokens, std::size_t items) const {
    return (per_token_cost * static_cast<double>(tokens) +
            per_item_overhead * static_cast<double>(items)) *
           multiplier;
  }
};

struct TrainReport {
  std::int64_t tokens_processed = 0;  // includes replayed items
  double cost_seconds = 0.0;
  std::size_t items_seen = 0;
  std::size_t items_skipped = 0;  // read but not learnable (unparseable / out of vocabulary)
  std::size_t items_replayed = 0;
  std::int64_t tokens_replayed = 0;
};

class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;

  // One pass over `items`, in order.
  virtual TrainReport train(std::span<const KnowledgeItem> items) = 0;

  // "<unk>" when the learner has nothing to say.
  virtual std::vector<std::string> answer(std::span<const std::string> queries) = 0;

  // Model-side knowledge representation of each text.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;

  virtual std::vector<double> predict_loss(std::span<const KnowledgeItem> items) = 0;

  // Changes iff parameters changed.
  virtual std::uint64_t snapshot_id() = 0;
};

enum class StrategyKind { Vanilla, Rehearsal, RegAnneal, LowRank, Adapter, Distill };
enum class RegSchedule { Inverse, Exponential, Constant };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(std::string_view name);
std::string to_string(RegSchedule schedule);
RegSchedule reg_schedule_from_string(std::string_view name);

double default_cost_multiplier(StrategyKind kind);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Vanilla;

  // rehearsal
  std::size_t buffer_capacity = 512;
  double mix_m0 = 0.5;
  double mix_gamma = 0.9;

  // reg_anneal
  double reg_lambda0 = 1.0;
  RegSchedule reg_schedule = RegSchedule::Inverse;
  double reg_decay = 0.9;  // exponential schedule only

  // lowrank
  std::size_t rank = 16;

  // adapter: size of the reserved feature sub-space
  std::size_t adapter_dim = 512;

  // distill
  double distill_alpha = 0.5;
  int teacher_refresh = 1;  // steps between teacher snapshots

  std::optional<double> cost_multiplier;

  double multiplier() const { return cost_multiplier.value_or(default_cost_multiplier(kind)); }
  void validate() const;
};

// m0 * gamma^t
double strategy_mix_ratio(int t, double m0, double gamma);

// Non-increasing in t; lambda0 at t = 0.
double strategy_reg_strength(int t, double lambda0, RegSchedule schedule = RegSchedule::Inverse,
                             double decay = 0.9);

// ---------------------------------------------------------------------------

enum class Eviction { Lru, Random };

struct FactMemoryConfig {
  std::size_t capacity = std::numeric_limits<std::size_t>::max();
  Eviction eviction = Eviction::Lru;
  std::uint64_t seed = 1;
  std::size_t embed_dim = kDefaultEmbeddingDim;
  CostModel cost;
};

// Parses statements and stores every version it has read, keyed by
// (subject, relation) and valid-from date. Dated queries ("As of day N, ...")
// return the version in force on that day; undated ones the latest version.
// Capacity bounds the number of stored versions.
class FactMemoryLearner final : public Learner {
 public:
  FactMemoryLearner(TemplateSet templates, FactMemoryConfig config);

  std::string name() const override { return "fact_memory"; }
  TrainReport train(std::span<const KnowledgeItem> items) override;
  std::vector<std::string> answer(std::span<const std::string> queries) override;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::vector<double> predict_loss(std::span<const KnowledgeItem> items) override;
  std::uint64_t snapshot_id() override { return snapshot_; }

  std::size_t size() const { return entries_; }
  std::string answer_one(std::string_view query) const;
  Embedding embed_one(std::string_view text) const;

 private:
  struct Entry {
    std::string object;
    std::uint64_t touched = 0;
  };
  using Key = std::pair<std::string, std::string>;

  std::optional<std::string> lookup(const Key& key, std::optional<Day> date) const;
  bool upsert(const Key& key, Day date, const std::string& object);
  void evict_one();

  TemplateSet templates_;
  FactMemoryConfig config_;
  Rng rng_;
  std::map<Key, std::map<Day, Entry>> table_;
  std::map<std::uint64_t, std::pair<Key, Day>> by_touch_;
  std::size_t entries_ = 0;
  std::uint64_t clock_ = 0;
  std::uint64_t snapshot_ = 0;
};

// ---------------------------------------------------------------------------

struct HashedSoftmaxConfig {
  std::size_t feature_dim = 1024;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  std::size_t embed_dim = kDefaultEmbeddingDim;
  CostModel cost;  // multiplier is taken from the strategy
  StrategyConfig strategy;
};

// Linear softmax classifier over a closed answer vocabulary. Features are
// signed hashed unigrams and bigrams of the question form (date qualifier
// stripped); training renders each statement's question and takes one SGD
// step on cross-entropy. The strategy decides which parameters train:
//   vanilla / reg_anneal / distill: the full weight matrix W
//   lowrank: W0 frozen, trainable A (D x r) and B (r x V), W = W0 + A B
//   adapter: W0 frozen, a trainable block over a reserved feature sub-space
class HashedSoftmaxLearner final : public Learner {
 public:
  using SparseVector = std::vector<std::pair<std::size_t, double>>;

  HashedSoftmaxLearner(TemplateSet templates, std::vector<std::string> vocabulary,
                       HashedSoftmaxConfig config);

  std::string name() const override { return "hashed_softmax"; }
  TrainReport train(std::span<const KnowledgeItem> items) override;
  std::vector<std::string> answer(std::span<const std::string> queries) override;
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::vector<double> predict_loss(std::span<const KnowledgeItem> items) override;
  std::uint64_t snapshot_id() override { return snapshot_; }

  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  std::size_t trainable_parameters() const;
  std::size_t base_parameters() const { return base_.size(); }
  const std::vector<double>& base_weights() const { return base_; }
  const std::vector<double>& weights() const { return weights_; }

  // Distillation penalty alpha * KL(student || teacher) for one statement;
  // zero when the teacher equals the student.
  double distill_penalty(std::string_view statement) const;

  std::vector<double> logits(std::string_view question) const;
  std::string answer_one(std::string_view query) const;
  Embedding embed_one(std::string_view text) const;

 private:
  SparseVector features(std::string_view question, std::string_view salt, std::size_t dim) const;
  std::vector<double> logits_of(const SparseVector& x, const SparseVector& xa,
                                const std::vector<double>* teacher) const;
  void sgd_step(const SparseVector& x, const SparseVector& xa, std::size_t target, double reg);
  std::optional<std::pair<std::string, std::size_t>> training_pair(const KnowledgeItem& item) const;

  TemplateSet templates_;
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::size_t, std::less<>> vocab_index_;
  HashedSoftmaxConfig config_;
  std::size_t dim_;
  std::size_t classes_;

  std::vector<double> base_;     // W0, D x V (frozen for lowrank / adapter)
  std::vector<double> weights_;  // W, D x V (vanilla / reg_anneal / distill)
  std::vector<double> anchor_;   // reg_anneal: W at the start of the step
  std::vector<double> teacher_;  // distill: W at the last teacher refresh
  std::vector<double> lora_a_;   // D x r
  std::vector<double> lora_b_;   // r x V
  std::vector<double> adapter_;  // adapter_dim x V

  int step_ = 0;
  std::uint64_t snapshot_ = 0;
};

// ---------------------------------------------------------------------------

// Mix-review style rehearsal around any learner. Before each step it replays
// round(mix_ratio(t) * batch) items sampled without replacement from a
// reservoir buffer of past items, then trains on the new items; afterwards
// the new items enter the reservoir.
class RehearsalLearner final : public Learner {
 public:
  RehearsalLearner(std::unique_ptr<Learner> inner, StrategyConfig config, std::uint64_t seed);

  std::string name() const override { return inner_->name() + "+rehearsal"; }
  TrainReport train(std::span<const KnowledgeItem> items) override;
  std::vector<std::string> answer(std::span<const std::string> queries) override {
    return inner_->answer(queries);
  }
  std::vector<Embedding> embed(std::span<const std::string> texts) override {
    return inner_->embed(texts);
  }
  std::vector<double> predict_loss(std::span<const KnowledgeItem> items) override {
    return inner_->predict_loss(items);
  }
  std::uint64_t snapshot_id() override { return inner_->snapshot_id(); }

  const std::vector<KnowledgeItem>& buffer() const { return buffer_; }

 private:
  std::unique_ptr<Learner> inner_;
  StrategyConfig config_;
  Rng rng_;
  std::vector<KnowledgeItem> buffer_;
  std::uint64_t offered_ = 0;
  int step_ = 0;
};

// Sorted distinct answers: QA golds plus objects parsed from knowledge items.
std::vector<std::string> answer_vocabulary(const Stream& stream, const TemplateSet& templates);

}  // namespace ockl
