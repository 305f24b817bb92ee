#pragma once

// Shared domain types for the online knowledge-learning harness: facts, the
// two timestamped streams, embeddings and the sparse accuracy matrix.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ockl {

// Days since the stream epoch.
using Day = std::int64_t;

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

struct Fact {
  std::string fact_id;  // identifies the (subject, relation) chain
  std::string subject;
  std::string relation;
  std::string object;
  Day valid_from = 0;
  int version = 0;
  bool time_variant = false;

  bool operator==(const Fact&) const = default;
};

// A specific version of a fact chain.
struct SourceRef {
  std::string fact_id;
  int version = 0;

  auto operator<=>(const SourceRef&) const = default;
};

struct KnowledgeItem {
  std::string item_id;
  std::string text;
  Day date = 0;
  int token_count = 0;
  SourceRef source;

  bool operator==(const KnowledgeItem&) const = default;
};

struct QAItem {
  std::string qa_id;
  std::string query;
  std::string gold;
  Day date = 0;
  SourceRef source;

  bool operator==(const QAItem&) const = default;
};

class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::size_t dim) : values_(dim, 0.0) {}
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dim() const { return values_.size(); }
  double norm() const;
  bool is_zero() const;

  // Unit-norm copy; the zero vector stays zero.
  Embedding normalized() const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

// Sparse R_{i,j}: accuracy of the model after training on tasks 1..i,
// evaluated on task j. Row 0 is the untrained model.
class AccuracyMatrix {
 public:
  void set(int model_step, int task, double accuracy);
  double at(int model_step, int task) const;
  bool contains(int model_step, int task) const;

  // Largest task index stored.
  int tasks() const { return tasks_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::pair<int, int>, double>& entries() const { return entries_; }

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::map<std::pair<int, int>, double> entries_;
  int tasks_ = 0;
};

// Whitespace tokenization; punctuation stays attached to its word.
std::vector<std::string> tokenize(std::string_view text);

// Trims leading/trailing whitespace only. Case and punctuation are kept, so
// "paris" does not match "Paris".
std::string normalize_answer(std::string_view text);

// 64-bit FNV-1a over the bytes of a token. Part of the wire contract: the
// external adapters reimplement it bit-for-bit.
std::uint64_t token_hash(std::string_view token);

// Adds the signed hashed counts of every token in `text` into `accumulator`.
// Bucket = (hash >> 1) % dim, sign = -1 when the low hash bit is set.
void accumulate_hashed_counts(std::string_view text, std::span<double> accumulator);

// Hashed bag-of-tokens embedding, L2-normalized when nonzero.
Embedding hash_embed(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

}  // namespace ockl
