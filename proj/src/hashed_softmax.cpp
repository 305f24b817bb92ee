#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "ockl/error.hpp"
#include "ockl/learners.hpp"

namespace ockl {

namespace {

constexpr double kUnlearnableLoss = 1e6;

// log-softmax, shifted by the max for stability.
std::vector<double> log_softmax(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  const double log_norm = m + std::log(sum);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - log_norm;
  return out;
}

std::size_t first_argmax(const std::vector<double>& z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

}  // namespace

HashedSoftmaxLearner::HashedSoftmaxLearner(TemplateSet templates, std::vector<std::string> vocabulary,
                                           HashedSoftmaxConfig config)
    : templates_(std::move(templates)), config_(std::move(config)) {
  std::sort(vocabulary.begin(), vocabulary.end());
  vocabulary.erase(std::unique(vocabulary.begin(), vocabulary.end()), vocabulary.end());
  vocabulary_ = std::move(vocabulary);
  if (vocabulary_.empty()) fail("invalid_argument", "hashed softmax needs a non-empty vocabulary");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) vocab_index_.emplace(vocabulary_[i], i);

  const StrategyConfig& s = config_.strategy;
  s.validate();
  if (s.kind == StrategyKind::Rehearsal) {
    fail("invalid_argument", "rehearsal wraps a learner; construct it with RehearsalLearner");
  }
  if (config_.feature_dim == 0) fail("invalid_argument", "feature_dim must be positive");
  if (config_.embed_dim == 0) fail("invalid_argument", "embed_dim must be positive");
  if (!(config_.learning_rate > 0.0)) fail("invalid_argument", "learning_rate must be positive");
  dim_ = config_.feature_dim;
  classes_ = vocabulary_.size();
  config_.cost.multiplier = s.multiplier();

  base_.assign(dim_ * classes_, 0.0);
  switch (s.kind) {
    case StrategyKind::LowRank: {
      if (s.rank >= std::min(dim_, classes_)) {
        fail("invalid_argument", "lowrank rank " + std::to_string(s.rank) +
                                     " is not below min(D, V) = " +
                                     std::to_string(std::min(dim_, classes_)));
      }
      Rng rng(derive_seed(config_.seed, 51));
      const double scale = 1.0 / std::sqrt(static_cast<double>(s.rank));
      lora_a_.resize(dim_ * s.rank);
      for (double& a : lora_a_) a = rng.normal() * scale;
      lora_b_.assign(s.rank * classes_, 0.0);
      break;
    }
    case StrategyKind::Adapter:
      adapter_.assign(s.adapter_dim * classes_, 0.0);
      break;
    default:
      weights_ = base_;
      break;
  }
}

std::size_t HashedSoftmaxLearner::trainable_parameters() const {
  switch (config_.strategy.kind) {
    case StrategyKind::LowRank: return lora_a_.size() + lora_b_.size();
    case StrategyKind::Adapter: return adapter_.size();
    default: return weights_.size();
  }
}

HashedSoftmaxLearner::SparseVector HashedSoftmaxLearner::features(std::string_view question,
                                                                  std::string_view salt,
                                                                  std::size_t dim) const {
  std::map<std::size_t, double> acc;
  auto add = [&](const std::string& key) {
    const std::uint64_t h = token_hash(key);
    acc[static_cast<std::size_t>((h >> 1) % dim)] += (h & 1U) ? -1.0 : 1.0;
  };
  const auto tokens = tokenize(question);
  const std::string prefix(salt);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(prefix + "u " + tokens[i]);
    if (i + 1 < tokens.size()) add(prefix + "b " + tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (const auto& [idx, v] : acc) norm += v * v;
  norm = std::sqrt(norm);
  SparseVector x;
  for (const auto& [idx, v] : acc) {
    if (v != 0.0) x.emplace_back(idx, v / norm);
  }
  return x;
}

std::vector<double> HashedSoftmaxLearner::logits_of(const SparseVector& x, const SparseVector& xa,
                                                    const std::vector<double>* teacher) const {
  std::vector<double> z(classes_, 0.0);
  const StrategyConfig& s = config_.strategy;
  auto add_rows = [&](const std::vector<double>& m, const SparseVector& feats) {
    for (const auto& [f, xf] : feats) {
      const double* row = &m[f * classes_];
      for (std::size_t v = 0; v < classes_; ++v) z[v] += xf * row[v];
    }
  };
  if (teacher) {
    add_rows(*teacher, x);
    return z;
  }
  switch (s.kind) {
    case StrategyKind::LowRank: {
      add_rows(base_, x);
      std::vector<double> h(s.rank, 0.0);
      for (const auto& [f, xf] : x) {
        for (std::size_t k = 0; k < s.rank; ++k) h[k] += xf * lora_a_[f * s.rank + k];
      }
      for (std::size_t k = 0; k < s.rank; ++k) {
        const double* row = &lora_b_[k * classes_];
        for (std::size_t v = 0; v < classes_; ++v) z[v] += h[k] * row[v];
      }
      break;
    }
    case StrategyKind::Adapter:
      add_rows(base_, x);
      add_rows(adapter_, xa);
      break;
    default:
      add_rows(weights_, x);
      break;
  }
  return z;
}

void HashedSoftmaxLearner::sgd_step(const SparseVector& x, const SparseVector& xa, std::size_t target,
                                    double reg) {
  const StrategyConfig& s = config_.strategy;
  const double lr = config_.learning_rate;
  const std::vector<double> logp = log_softmax(logits_of(x, xa, nullptr));
  std::vector<double> g(classes_);
  for (std::size_t v = 0; v < classes_; ++v) g[v] = std::exp(logp[v]);
  g[target] -= 1.0;

  if (s.kind == StrategyKind::Distill && s.distill_alpha > 0.0 && !teacher_.empty()) {
    // d/dz KL(p || q) = p * (log p - log q - KL)
    const std::vector<double> logq = log_softmax(logits_of(x, xa, &teacher_));
    double kl = 0.0;
    for (std::size_t v = 0; v < classes_; ++v) kl += std::exp(logp[v]) * (logp[v] - logq[v]);
    for (std::size_t v = 0; v < classes_; ++v) {
      g[v] += s.distill_alpha * std::exp(logp[v]) * (logp[v] - logq[v] - kl);
    }
  }

  switch (s.kind) {
    case StrategyKind::LowRank: {
      std::vector<double> h(s.rank, 0.0);
      for (const auto& [f, xf] : x) {
        for (std::size_t k = 0; k < s.rank; ++k) h[k] += xf * lora_a_[f * s.rank + k];
      }
      std::vector<double> bg(s.rank, 0.0);
      for (std::size_t k = 0; k < s.rank; ++k) {
        const double* row = &lora_b_[k * classes_];
        for (std::size_t v = 0; v < classes_; ++v) bg[k] += row[v] * g[v];
      }
      for (std::size_t k = 0; k < s.rank; ++k) {
        double* row = &lora_b_[k * classes_];
        for (std::size_t v = 0; v < classes_; ++v) row[v] -= lr * h[k] * g[v];
      }
      for (const auto& [f, xf] : x) {
        for (std::size_t k = 0; k < s.rank; ++k) lora_a_[f * s.rank + k] -= lr * xf * bg[k];
      }
      break;
    }
    case StrategyKind::Adapter:
      for (const auto& [f, xf] : xa) {
        double* row = &adapter_[f * classes_];
        for (std::size_t v = 0; v < classes_; ++v) row[v] -= lr * xf * g[v];
      }
      break;
    default:
      for (const auto& [f, xf] : x) {
        double* row = &weights_[f * classes_];
        if (reg > 0.0) {
          const double* anchor = &anchor_[f * classes_];
          for (std::size_t v = 0; v < classes_; ++v) {
            row[v] -= lr * (xf * g[v] + reg * (row[v] - anchor[v]));
          }
        } else {
          for (std::size_t v = 0; v < classes_; ++v) row[v] -= lr * xf * g[v];
        }
      }
      break;
  }
}

std::optional<std::pair<std::string, std::size_t>> HashedSoftmaxLearner::training_pair(
    const KnowledgeItem& item) const {
  auto parsed = parse_knowledge_item(item.text, templates_);
  if (!parsed) return std::nullopt;
  auto it = vocab_index_.find(parsed->object);
  if (it == vocab_index_.end()) return std::nullopt;
  return std::make_pair(render_question(templates_[parsed->template_index], parsed->subject),
                        it->second);
}

TrainReport HashedSoftmaxLearner::train(std::span<const KnowledgeItem> items) {
  TrainReport report;
  if (items.empty()) return report;
  const StrategyConfig& s = config_.strategy;

  double reg = 0.0;
  if (s.kind == StrategyKind::RegAnneal) {
    reg = strategy_reg_strength(step_, s.reg_lambda0, s.reg_schedule, s.reg_decay);
    if (reg > 0.0) anchor_ = weights_;
  }
  if (s.kind == StrategyKind::Distill && step_ % s.teacher_refresh == 0) teacher_ = weights_;

  bool trained = false;
  for (const auto& item : items) {
    report.tokens_processed += item.token_count;
    ++report.items_seen;
    auto pair = training_pair(item);
    if (!pair) {
      ++report.items_skipped;
      continue;
    }
    const SparseVector x = features(pair->first, "", dim_);
    const SparseVector xa =
        s.kind == StrategyKind::Adapter ? features(pair->first, "adapter ", s.adapter_dim) : SparseVector{};
    sgd_step(x, xa, pair->second, reg);
    trained = true;
  }
  report.cost_seconds = config_.cost.batch_cost(report.tokens_processed, report.items_seen);
  if (trained) ++snapshot_;
  ++step_;
  return report;
}

std::vector<double> HashedSoftmaxLearner::logits(std::string_view question) const {
  const SparseVector x = features(question, "", dim_);
  const SparseVector xa = config_.strategy.kind == StrategyKind::Adapter
                              ? features(question, "adapter ", config_.strategy.adapter_dim)
                              : SparseVector{};
  return logits_of(x, xa, nullptr);
}

double HashedSoftmaxLearner::distill_penalty(std::string_view statement) const {
  const StrategyConfig& s = config_.strategy;
  if (s.kind != StrategyKind::Distill || teacher_.empty()) return 0.0;
  auto parsed = parse_statement(statement, templates_);
  if (!parsed) return 0.0;
  const SparseVector x =
      features(render_question(templates_[parsed->template_index], parsed->subject), "", dim_);
  const auto logp = log_softmax(logits_of(x, {}, nullptr));
  const auto logq = log_softmax(logits_of(x, {}, &teacher_));
  double kl = 0.0;
  for (std::size_t v = 0; v < classes_; ++v) kl += std::exp(logp[v]) * (logp[v] - logq[v]);
  return s.distill_alpha * kl;
}

std::string HashedSoftmaxLearner::answer_one(std::string_view query) const {
  std::string question;
  if (auto q = parse_question(query, templates_)) {
    question = q->undated;
  } else {
    question = std::string(split_date_prefix(query).second);
  }
  const auto z = logits(question);
  const std::size_t best = first_argmax(z);
  if (!(z[best] > 0.0)) return std::string(kUnknownAnswer);
  return vocabulary_[best];
}

Embedding HashedSoftmaxLearner::embed_one(std::string_view text) const {
  auto s = parse_statement(text, templates_);
  if (!s) return hash_embed(text, config_.embed_dim);
  const RelationTemplate& tmpl = templates_[s->template_index];
  const auto logp = log_softmax(logits(render_question(tmpl, s->subject)));
  const std::string prefix = s->date ? date_prefix(*s->date) : std::string();
  Embedding acc(config_.embed_dim);
  std::vector<double> counts(config_.embed_dim);
  for (std::size_t v = 0; v < classes_; ++v) {
    std::fill(counts.begin(), counts.end(), 0.0);
    accumulate_hashed_counts(prefix + render_statement(tmpl, s->subject, vocabulary_[v]), counts);
    const double p = std::exp(logp[v]);
    for (std::size_t k = 0; k < counts.size(); ++k) acc[k] += p * counts[k];
  }
  return acc.normalized();
}

std::vector<std::string> HashedSoftmaxLearner::answer(std::span<const std::string> queries) {
  std::vector<std::string> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = answer_one(queries[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<Embedding> HashedSoftmaxLearner::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out(texts.size());
  const auto n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = embed_one(texts[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<double> HashedSoftmaxLearner::predict_loss(std::span<const KnowledgeItem> items) {
  std::vector<double> out(items.size(), kUnlearnableLoss);
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto pair = training_pair(items[i]);
    if (!pair) continue;
    out[i] = -log_softmax(logits(pair->first))[pair->second];
  }
  return out;
}

}  // namespace ockl
