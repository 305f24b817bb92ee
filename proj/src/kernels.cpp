#include "ockl/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include <omp.h>

#include "ockl/error.hpp"

namespace ockl {

PointMatrix PointMatrix::from_embeddings(std::span<const Embedding> points) {
  if (points.empty()) return {};
  const std::size_t dim = points.front().dim();
  PointMatrix m(points.size(), dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].dim() != dim) {
      fail("invalid_argument", "embedding " + std::to_string(i) + " has dimension " +
                                   std::to_string(points[i].dim()) + ", expected " +
                                   std::to_string(dim));
    }
    auto src = points[i].values();
    auto dst = m.row(i);
    for (std::size_t k = 0; k < dim; ++k) dst[k] = src[k];
  }
  return m;
}

namespace kernels {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return sum;
}

std::vector<double> centroid(const PointMatrix& points) {
  std::vector<double> c(points.dim(), 0.0);
  if (points.rows() == 0) return c;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto r = points.row(i);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += r[k];
  }
  for (double& v : c) v /= static_cast<double>(points.rows());
  return c;
}

void distances_to(const PointMatrix& points, std::span<const double> ref, std::span<double> out,
                  Execution exec) {
  const auto n = static_cast<std::int64_t>(points.rows());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = std::sqrt(squared_distance(points.row(static_cast<std::size_t>(i)), ref));
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = std::sqrt(squared_distance(points.row(static_cast<std::size_t>(i)), ref));
    }
  }
}

void update_min_distances(const PointMatrix& points, std::size_t center, std::span<double> min_dist,
                          Execution exec) {
  const auto n = static_cast<std::int64_t>(points.rows());
  auto c = points.row(center);
  auto body = [&](std::int64_t i) {
    const auto idx = static_cast<std::size_t>(i);
    const double d = std::sqrt(squared_distance(points.row(idx), c));
    if (d < min_dist[idx]) min_dist[idx] = d;
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
}

namespace {

struct Best {
  double value;
  std::size_t index;
};

// Prefers the larger value, then the lower index.
Best better(Best a, Best b) {
  if (b.index == SIZE_MAX) return a;
  if (a.index == SIZE_MAX) return b;
  if (b.value > a.value) return b;
  if (a.value > b.value) return a;
  return a.index < b.index ? a : b;
}

}  // namespace

std::size_t argmax(std::span<const double> values, Execution exec) {
  const Best none{-std::numeric_limits<double>::infinity(), SIZE_MAX};
  if (exec == Execution::Serial) {
    Best best = none;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i])) continue;
      best = better(best, Best{values[i], i});
    }
    return best.index == SIZE_MAX ? values.size() : best.index;
  }

  std::vector<Best> partial(static_cast<std::size_t>(omp_get_max_threads()), none);
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel
  {
    Best local = none;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = values[static_cast<std::size_t>(i)];
      if (std::isnan(v)) continue;
      local = better(local, Best{v, static_cast<std::size_t>(i)});
    }
    partial[static_cast<std::size_t>(omp_get_thread_num())] = local;
  }
  Best best = none;
  for (const Best& b : partial) best = better(best, b);
  return best.index == SIZE_MAX ? values.size() : best.index;
}

void paired_distances(const PointMatrix& a, const PointMatrix& b, std::span<double> out,
                      Execution exec) {
  const auto n = static_cast<std::int64_t>(a.rows());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out[idx] = std::sqrt(squared_distance(a.row(idx), b.row(idx)));
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out[idx] = std::sqrt(squared_distance(a.row(idx), b.row(idx)));
    }
  }
}

}  // namespace kernels
}  // namespace ockl
