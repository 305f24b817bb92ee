#pragma once

// Exact match, adjacent-task backward/forward transfer, knowledge acquisition
// rate and the knowledge gap.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ockl/core.hpp"
#include "ockl/kernels.hpp"

namespace ockl {

class Learner;

// Fraction of positions whose trimmed prediction equals the trimmed gold.
double exact_match(std::span<const std::string> predictions, std::span<const std::string> golds);

// (1/(T-1)) * sum_{i=2..T} (R[i][i-1] - R[i-1][i-1])
double bwt(const AccuracyMatrix& r, int tasks);

// (1/(T-1)) * sum_{i=2..T} (R[i][i] - R[i-1][i])
double fwt(const AccuracyMatrix& r, int tasks);

// (fwt + bwt) * total_tokens / training_time_seconds
double kar(double fwt_value, double bwt_value, double total_tokens, double training_time_seconds);

// Mean Euclidean distance between paired, renormalized item vectors.
double knowledge_gap(std::span<const Embedding> a, std::span<const Embedding> b,
                     Execution exec = Execution::Parallel);

// Mean-pools token vectors of one item and renormalizes.
Embedding pool_tokens(std::span<const Embedding> token_vectors);

enum class KgConfig { Alignment, Forgetting, Updating };

// Frozen probe texts and the task each one belongs to.
struct ProbeSet {
  std::vector<std::string> texts;
  std::vector<int> tasks;

  std::size_t size() const { return texts.size(); }
};

// Model-side embeddings of every probe after training step `step`.
struct KgSnapshot {
  int step = 0;
  std::vector<Embedding> embeddings;
};

KgSnapshot capture_snapshot(Learner& learner, const ProbeSet& probes, int step);

// Alignment compares world embeddings (hash_embed of the probe text) with the
// current snapshot over probes of tasks <= t. Forgetting compares the previous
// and current snapshots over tasks < t; updating does the same over task t.
// An empty probe subset yields 0.
double kg_capture(KgConfig config, const ProbeSet& probes, const KgSnapshot& current,
                  const KgSnapshot* previous, int t, std::size_t world_dim);

struct MetricsRecord {
  int t = 0;
  double em = 0.0;  // R[t][t]
  std::optional<double> bwt;
  std::optional<double> fwt;
  std::optional<double> kar;
  double kg_alignment = 0.0;
  double kg_forgetting = 0.0;
  double kg_updating = 0.0;
  std::int64_t tokens_trained = 0;  // cumulative, includes replays
  double train_time_s = 0.0;        // cumulative

  // Per-step accounting.
  std::size_t items_arrived = 0;
  std::size_t items_selected_out = 0;
  std::size_t discarded_items = 0;
  std::size_t items_trained = 0;
  std::size_t items_replayed = 0;
  std::int64_t tokens_arrived = 0;
  std::int64_t tokens_selected_out = 0;
  std::int64_t tokens_discarded = 0;
  std::int64_t tokens_trained_new = 0;
  std::int64_t tokens_replayed = 0;

  bool operator==(const MetricsRecord&) const = default;
};

}  // namespace ockl
