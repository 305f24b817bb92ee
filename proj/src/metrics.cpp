#include "ockl/metrics.hpp"

#include <cmath>

#include "ockl/error.hpp"
#include "ockl/learners.hpp"

namespace ockl {

double exact_match(std::span<const std::string> predictions, std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    fail("invalid_argument", "exact_match: " + std::to_string(predictions.size()) +
                                 " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) fail("invalid_argument", "exact_match: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (normalize_answer(predictions[i]) == normalize_answer(golds[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double bwt(const AccuracyMatrix& r, int tasks) {
  if (tasks < 2) fail("invalid_argument", "bwt needs at least 2 tasks");
  double sum = 0.0;
  for (int i = 2; i <= tasks; ++i) sum += r.at(i, i - 1) - r.at(i - 1, i - 1);
  return sum / static_cast<double>(tasks - 1);
}

double fwt(const AccuracyMatrix& r, int tasks) {
  if (tasks < 2) fail("invalid_argument", "fwt needs at least 2 tasks");
  double sum = 0.0;
  for (int i = 2; i <= tasks; ++i) sum += r.at(i, i) - r.at(i - 1, i);
  return sum / static_cast<double>(tasks - 1);
}

double kar(double fwt_value, double bwt_value, double total_tokens, double training_time_seconds) {
  if (total_tokens < 0.0) fail("invalid_argument", "kar: negative token count");
  if (!(training_time_seconds > 0.0)) fail("invalid_argument", "kar: training time must be positive");
  return (fwt_value + bwt_value) * total_tokens / training_time_seconds;
}

double knowledge_gap(std::span<const Embedding> a, std::span<const Embedding> b, Execution exec) {
  if (a.size() != b.size()) {
    fail("invalid_argument", "knowledge_gap: set sizes differ (" + std::to_string(a.size()) +
                                 " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) fail("invalid_argument", "knowledge_gap: empty sets");
  std::vector<Embedding> na;
  std::vector<Embedding> nb;
  na.reserve(a.size());
  nb.reserve(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].dim() != b[i].dim()) {
      fail("invalid_argument", "knowledge_gap: dimension mismatch at pair " + std::to_string(i));
    }
    na.push_back(a[i].normalized());
    nb.push_back(b[i].normalized());
  }
  const PointMatrix ma = PointMatrix::from_embeddings(na);
  const PointMatrix mb = PointMatrix::from_embeddings(nb);
  if (ma.dim() != mb.dim()) fail("invalid_argument", "knowledge_gap: dimension mismatch");
  std::vector<double> d(a.size());
  kernels::paired_distances(ma, mb, d, exec);
  double sum = 0.0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(d.size());
}

Embedding pool_tokens(std::span<const Embedding> token_vectors) {
  if (token_vectors.empty()) return {};
  Embedding sum(token_vectors.front().dim());
  for (const auto& v : token_vectors) {
    if (v.dim() != sum.dim()) fail("invalid_argument", "pool_tokens: dimension mismatch");
    for (std::size_t k = 0; k < sum.dim(); ++k) sum[k] += v[k];
  }
  for (std::size_t k = 0; k < sum.dim(); ++k) sum[k] /= static_cast<double>(token_vectors.size());
  return sum.normalized();
}

KgSnapshot capture_snapshot(Learner& learner, const ProbeSet& probes, int step) {
  KgSnapshot s;
  s.step = step;
  if (probes.size() > 0) s.embeddings = learner.embed(probes.texts);
  if (s.embeddings.size() != probes.size()) {
    fail("learner_error", "learner returned " + std::to_string(s.embeddings.size()) +
                              " embeddings for " + std::to_string(probes.size()) + " probes");
  }
  return s;
}

double kg_capture(KgConfig config, const ProbeSet& probes, const KgSnapshot& current,
                  const KgSnapshot* previous, int t, std::size_t world_dim) {
  if (config != KgConfig::Alignment && previous == nullptr) {
    fail("missing_snapshot", "temporal knowledge gap needs the previous step's snapshot");
  }
  std::vector<Embedding> lhs;
  std::vector<Embedding> rhs;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const int task = probes.tasks[i];
    switch (config) {
      case KgConfig::Alignment:
        if (task > t) continue;
        lhs.push_back(hash_embed(probes.texts[i], world_dim));
        rhs.push_back(current.embeddings[i]);
        break;
      case KgConfig::Forgetting:
        if (task >= t) continue;
        lhs.push_back(previous->embeddings[i]);
        rhs.push_back(current.embeddings[i]);
        break;
      case KgConfig::Updating:
        if (task != t) continue;
        lhs.push_back(current.embeddings[i]);
        rhs.push_back(previous->embeddings[i]);
        break;
    }
  }
  if (lhs.empty()) return 0.0;
  return knowledge_gap(lhs, rhs);
}

}  // namespace ockl
