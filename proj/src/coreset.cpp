#include "ockl/coreset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ockl/error.hpp"
#include "ockl/rng.hpp"

namespace ockl {

std::string to_string(CoresetMethod method) {
  switch (method) {
    case CoresetMethod::None: return "none";
    case CoresetMethod::Random: return "random";
    case CoresetMethod::KCenter: return "kcenter";
    case CoresetMethod::ModelBased: return "model";
  }
  return "none";
}

CoresetMethod coreset_method_from_string(std::string_view name) {
  if (name == "none") return CoresetMethod::None;
  if (name == "random") return CoresetMethod::Random;
  if (name == "kcenter") return CoresetMethod::KCenter;
  if (name == "model" || name == "model_based") return CoresetMethod::ModelBased;
  fail("invalid_argument", "unknown coreset method '" + std::string(name) + "'");
}

std::string to_string(LossOrder order) {
  return order == LossOrder::Ascending ? "ascending" : "descending";
}

LossOrder loss_order_from_string(std::string_view name) {
  if (name == "ascending") return LossOrder::Ascending;
  if (name == "descending") return LossOrder::Descending;
  fail("invalid_argument", "unknown loss order '" + std::string(name) + "'");
}

std::size_t coreset_size(std::size_t n, double ratio) {
  if (n == 0) fail("invalid_argument", "coreset selection over an empty set");
  if (!(ratio > 0.0 && ratio <= 1.0)) fail("invalid_argument", "coreset ratio must lie in (0,1]");
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
  return std::clamp<std::size_t>(k, 1, n);
}

SelectionResult select_random(std::size_t n, double ratio, std::uint64_t seed) {
  const std::size_t k = coreset_size(n, ratio);
  Rng rng(seed);
  SelectionResult r{rng.sample(n, k), ratio, CoresetMethod::Random};
  std::sort(r.indices.begin(), r.indices.end());
  return r;
}

std::vector<std::size_t> kcenter_order(const PointMatrix& points, std::size_t k, Execution exec) {
  const std::size_t n = points.rows();
  k = std::min(k, n);
  std::vector<std::size_t> order;
  if (k == 0) return order;
  order.reserve(k);

  std::vector<double> dist(n);
  const std::vector<double> center = kernels::centroid(points);
  kernels::distances_to(points, center, dist, exec);
  std::size_t next = kernels::argmax(dist, exec);

  // Chosen points are marked NaN so argmax skips them.
  std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
  while (order.size() < k) {
    order.push_back(next);
    kernels::update_min_distances(points, next, dist, exec);
    for (std::size_t c : order) dist[c] = std::numeric_limits<double>::quiet_NaN();
    if (order.size() == k) break;
    next = kernels::argmax(dist, exec);
  }
  return order;
}

SelectionResult select_kcenter(std::span<const Embedding> embeddings, double ratio, Execution exec) {
  const std::size_t k = coreset_size(embeddings.size(), ratio);
  const PointMatrix points = PointMatrix::from_embeddings(embeddings);
  SelectionResult r{kcenter_order(points, k, exec), ratio, CoresetMethod::KCenter};
  std::sort(r.indices.begin(), r.indices.end());
  return r;
}

SelectionResult select_model_based(std::span<const double> predicted_losses, double ratio,
                                   LossOrder order) {
  const std::size_t k = coreset_size(predicted_losses.size(), ratio);
  for (std::size_t i = 0; i < predicted_losses.size(); ++i) {
    if (std::isnan(predicted_losses[i])) {
      fail("invalid_argument", "predicted loss " + std::to_string(i) + " is NaN");
    }
  }
  std::vector<std::size_t> idx(predicted_losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return order == LossOrder::Ascending ? predicted_losses[a] < predicted_losses[b]
                                         : predicted_losses[a] > predicted_losses[b];
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return SelectionResult{std::move(idx), ratio, CoresetMethod::ModelBased};
}

}  // namespace ockl
