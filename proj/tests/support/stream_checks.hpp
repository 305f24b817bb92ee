#pragma once

// Structural checks on generated streams, shared by unit and acceptance
// tests. Each returns an empty string when everything holds, otherwise a
// description of the first violation.

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "ockl/datagen.hpp"

namespace ockl::checks {

inline std::string check_universe(const FactUniverse& u) {
  const auto& c = u.config;
  if (u.chains.size() != static_cast<std::size_t>(c.n_entities) * static_cast<std::size_t>(c.n_relations)) {
    return "chain count";
  }
  std::size_t variant = 0;
  for (const auto& chain : u.chains) {
    if (chain.empty()) return "empty chain";
    const bool tv = chain.front().time_variant;
    if (tv) ++variant;
    if (tv && chain.size() < 2) return "variant chain with a single version";
    if (!tv && chain.size() != 1) return "invariant chain with updates";
    for (std::size_t v = 0; v < chain.size(); ++v) {
      const Fact& f = chain[v];
      if (f.version != static_cast<int>(v)) return "version numbering in " + f.fact_id;
      if (f.fact_id != chain.front().fact_id || f.subject != chain.front().subject ||
          f.relation != chain.front().relation) {
        return "chain identity in " + f.fact_id;
      }
      if (f.time_variant != tv) return "mixed variant flag in " + f.fact_id;
      if (f.valid_from < 0 || f.valid_from >= std::max<Day>(c.horizon, 1)) return "valid_from outside horizon";
      if (v > 0 && f.valid_from <= chain[v - 1].valid_from) return "valid_from not increasing in " + f.fact_id;
      if (f.object.empty()) return "empty object";
    }
  }
  const double expected = std::floor(c.variant_fraction * static_cast<double>(u.chains.size()) + 0.5);
  if (static_cast<double>(variant) != expected) return "variant chain count";
  return {};
}

inline std::string check_stream(const Stream& s, const FactUniverse& u, const StreamConfig& c) {
  std::map<SourceRef, const Fact*> facts;
  for (const auto& chain : u.chains) {
    for (const auto& f : chain) facts[{f.fact_id, f.version}] = &f;
  }
  if (s.steps.size() != static_cast<std::size_t>(c.n_steps)) return "step count";
  if (s.mode != c.mode) return "mode";

  std::set<SourceRef> emitted;  // versions introduced so far
  std::map<SourceRef, int> knowledge_seen;
  Day last_max_new_date = -1;
  Day last_window_end = 0;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const StreamStep& step = s.steps[i];
    const std::string where = "step " + std::to_string(i + 1) + ": ";
    if (step.index != static_cast<int>(i) + 1) return where + "index";
    if (step.window_begin > step.window_end) return where + "window";
    if (step.window_begin != last_window_end) return where + "windows not contiguous";
    last_window_end = step.window_end;

    std::set<SourceRef> fresh;
    Day max_new_date = last_max_new_date;
    for (const auto& item : step.knowledge) {
      const auto it = facts.find(item.source);
      if (it == facts.end()) return where + "knowledge item references an unknown version";
      const Fact& f = *it->second;
      if (item.token_count != static_cast<int>(tokenize(item.text).size()) || item.token_count <= 0) {
        return where + "token_count";
      }
      if (item.date != f.valid_from) return where + "knowledge date differs from valid_from";
      ++knowledge_seen[item.source];
      if (emitted.count(item.source)) {
        if (s.mode == StreamMode::RedundancyFree) return where + "re-emission in redundancy-free mode";
        continue;
      }
      if (!fresh.insert(item.source).second) return where + "version introduced twice in one step";
      if (item.date < step.window_begin || item.date >= step.window_end) return where + "new item outside window";
      max_new_date = std::max(max_new_date, item.date);
    }
    if (max_new_date < last_max_new_date) return where + "dates decrease";
    last_max_new_date = max_new_date;

    std::set<SourceRef> probed;
    for (const auto& qa : step.qa) {
      const auto it = facts.find(qa.source);
      if (it == facts.end()) return where + "qa references an unknown version";
      if (qa.gold.empty()) return where + "empty gold";
      if (qa.gold != it->second->object) return where + "gold differs from the version's object";
      if (qa.date != it->second->valid_from) return where + "qa date differs from valid_from";
      if (!fresh.count(qa.source) && !emitted.count(qa.source)) return where + "qa probes an unseen version";
      if (!probed.insert(qa.source).second) return where + "duplicate qa";
    }
    if (probed != fresh) return where + "new versions and qa items differ";

    if (s.mode == StreamMode::Redundant && !emitted.empty()) {
      const std::size_t target = std::max(fresh.size(), static_cast<std::size_t>(c.items_per_step));
      if (step.knowledge.size() != target) return where + "redundant fill";
    }
    if (s.mode == StreamMode::Redundant && emitted.empty() && step.knowledge.size() != fresh.size()) {
      return where + "re-emission before anything was emitted";
    }
    emitted.insert(fresh.begin(), fresh.end());
  }
  if (emitted.size() != facts.size()) return "not every version was emitted";
  if (s.mode == StreamMode::RedundancyFree) {
    for (const auto& [ref, n] : knowledge_seen) {
      if (n != 1) return "version emitted more than once";
    }
  }
  return {};
}

inline std::string check_stats(const StreamStats& st) {
  for (const auto* cdf : {&st.token_change_cdf, &st.date_change_cdf}) {
    if (cdf->empty()) continue;
    double prev_delta = -1.0;
    double prev = 0.0;
    for (const auto& p : *cdf) {
      if (p.delta <= prev_delta) return "cdf deltas not increasing";
      if (p.cumulative < prev) return "cdf decreasing";
      prev = p.cumulative;
      prev_delta = p.delta;
    }
    if (std::fabs(cdf->back().cumulative - 1.0) > 1e-12) return "cdf does not end at 1";
  }
  return {};
}

}  // namespace ockl::checks
