#include "ockl/core.hpp"

#include <cmath>

#include "ockl/error.hpp"

namespace ockl {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

double Embedding::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

bool Embedding::is_zero() const {
  for (double v : values_) {
    if (v != 0.0) return false;
  }
  return true;
}

Embedding Embedding::normalized() const {
  Embedding out(*this);
  const double n = norm();
  if (n > 0.0) {
    for (double& v : out.values_) v /= n;
  }
  return out;
}

void AccuracyMatrix::set(int model_step, int task, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    fail("invalid_argument", "accuracy outside [0,1] at R(" + std::to_string(model_step) +
                                 "," + std::to_string(task) + ")");
  }
  if (model_step < 0 || task < 1) {
    fail("invalid_argument", "accuracy matrix index out of range");
  }
  entries_[{model_step, task}] = accuracy;
  if (task > tasks_) tasks_ = task;
}

double AccuracyMatrix::at(int model_step, int task) const {
  auto it = entries_.find({model_step, task});
  if (it == entries_.end()) {
    fail("missing_entry", "accuracy matrix has no entry R(" + std::to_string(model_step) +
                              "," + std::to_string(task) + ")");
  }
  return it->second;
}

bool AccuracyMatrix::contains(int model_step, int task) const {
  return entries_.count({model_step, task}) != 0;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string normalize_answer(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void accumulate_hashed_counts(std::string_view text, std::span<double> accumulator) {
  const std::size_t dim = accumulator.size();
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = token_hash(token);
    const std::size_t bucket = static_cast<std::size_t>((h >> 1) % dim);
    accumulator[bucket] += (h & 1U) ? -1.0 : 1.0;
  }
}

Embedding hash_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) fail("invalid_argument", "embedding dimension must be positive");
  Embedding e(dim);
  accumulate_hashed_counts(text, e.values());
  return e.normalized();
}

}  // namespace ockl
