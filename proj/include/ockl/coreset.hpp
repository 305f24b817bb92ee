#pragma once

// Coreset selection over one step's knowledge items: random, greedy k-center
// and predicted-loss ranking.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ockl/core.hpp"
#include "ockl/kernels.hpp"

namespace ockl {

enum class CoresetMethod { None, Random, KCenter, ModelBased };
enum class LossOrder { Ascending, Descending };

std::string to_string(CoresetMethod method);
CoresetMethod coreset_method_from_string(std::string_view name);
std::string to_string(LossOrder order);
LossOrder loss_order_from_string(std::string_view name);

struct SelectionResult {
  std::vector<std::size_t> indices;  // sorted, unique, in [0, n)
  double ratio = 1.0;
  CoresetMethod method = CoresetMethod::None;
};

// max(1, round_half_up(ratio * n)). Throws when n == 0 or ratio is outside (0,1].
std::size_t coreset_size(std::size_t n, double ratio);

SelectionResult select_random(std::size_t n, double ratio, std::uint64_t seed);

// Greedy farthest-point order of k centers. The first center is the point
// farthest from the centroid; every later one maximizes the distance to its
// nearest chosen center. Ties go to the lowest index.
std::vector<std::size_t> kcenter_order(const PointMatrix& points, std::size_t k,
                                       Execution exec = Execution::Parallel);

SelectionResult select_kcenter(std::span<const Embedding> embeddings, double ratio,
                               Execution exec = Execution::Parallel);

// Ranks by predicted loss (ties: lower index first) and keeps the top k.
SelectionResult select_model_based(std::span<const double> predicted_losses, double ratio,
                                   LossOrder order = LossOrder::Ascending);

}  // namespace ockl
