#include <omp.h>

#include <cstdint>
#include <iterator>

#include "ockl/error.hpp"
#include "ockl/learners.hpp"

namespace ockl {

FactMemoryLearner::FactMemoryLearner(TemplateSet templates, FactMemoryConfig config)
    : templates_(std::move(templates)), config_(config), rng_(derive_seed(config.seed, 31)) {
  if (config_.embed_dim == 0) fail("invalid_argument", "embed_dim must be positive");
}

std::optional<std::string> FactMemoryLearner::lookup(const Key& key, std::optional<Day> date) const {
  auto it = table_.find(key);
  if (it == table_.end() || it->second.empty()) return std::nullopt;
  const auto& versions = it->second;
  if (!date) return versions.rbegin()->second.object;
  auto v = versions.upper_bound(*date);
  if (v == versions.begin()) return std::nullopt;
  return std::prev(v)->second.object;
}

bool FactMemoryLearner::upsert(const Key& key, Day date, const std::string& object) {
  const std::uint64_t now = ++clock_;
  auto& versions = table_[key];
  auto it = versions.find(date);
  if (it != versions.end()) {
    by_touch_.erase(it->second.touched);
    it->second.touched = now;
    by_touch_.emplace(now, std::make_pair(key, date));
    if (it->second.object == object) return false;
    it->second.object = object;
    return true;
  }
  if (config_.capacity == 0) {
    if (versions.empty()) table_.erase(key);
    return false;
  }
  if (entries_ >= config_.capacity) {
    evict_one();
  }
  table_[key].emplace(date, Entry{object, now});
  by_touch_.emplace(now, std::make_pair(key, date));
  ++entries_;
  return true;
}

void FactMemoryLearner::evict_one() {
  if (by_touch_.empty()) return;
  auto victim = by_touch_.begin();
  if (config_.eviction == Eviction::Random) {
    std::advance(victim, static_cast<std::ptrdiff_t>(rng_.index(by_touch_.size())));
  }
  const auto [key, date] = victim->second;
  by_touch_.erase(victim);
  auto t = table_.find(key);
  t->second.erase(date);
  if (t->second.empty()) table_.erase(t);
  --entries_;
}

TrainReport FactMemoryLearner::train(std::span<const KnowledgeItem> items) {
  TrainReport report;
  if (items.empty()) return report;
  bool changed = false;
  for (const auto& item : items) {
    report.tokens_processed += item.token_count;
    ++report.items_seen;
    auto parsed = parse_knowledge_item(item.text, templates_);
    if (!parsed) {
      ++report.items_skipped;
      continue;
    }
    const Day date = parsed->date.value_or(item.date);
    changed |= upsert({parsed->subject, parsed->relation}, date, parsed->object);
  }
  report.cost_seconds = config_.cost.batch_cost(report.tokens_processed, report.items_seen);
  if (changed) ++snapshot_;
  return report;
}

std::string FactMemoryLearner::answer_one(std::string_view query) const {
  auto q = parse_question(query, templates_);
  if (!q) return std::string(kUnknownAnswer);
  return lookup({q->subject, q->relation}, q->date).value_or(std::string(kUnknownAnswer));
}

Embedding FactMemoryLearner::embed_one(std::string_view text) const {
  auto s = parse_statement(text, templates_);
  if (!s) return hash_embed(text, config_.embed_dim);
  const std::string belief =
      lookup({s->subject, s->relation}, s->date).value_or(std::string(kUnknownAnswer));
  std::string rendered = s->date ? date_prefix(*s->date) : std::string();
  rendered += render_statement(templates_[s->template_index], s->subject, belief);
  return hash_embed(rendered, config_.embed_dim);
}

std::vector<std::string> FactMemoryLearner::answer(std::span<const std::string> queries) {
  std::vector<std::string> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = answer_one(queries[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<Embedding> FactMemoryLearner::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out(texts.size());
  const auto n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = embed_one(texts[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<double> FactMemoryLearner::predict_loss(std::span<const KnowledgeItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto parsed = parse_knowledge_item(item.text, templates_);
    if (!parsed) {
      out.push_back(1.0);
      continue;
    }
    const auto stored =
        lookup({parsed->subject, parsed->relation}, parsed->date.value_or(item.date));
    out.push_back(stored && *stored == parsed->object ? 0.0 : 1.0);
  }
  return out;
}

}  // namespace ockl
