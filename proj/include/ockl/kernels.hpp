#pragma once

// Data-parallel inner loops shared by k-center selection and the knowledge
// gap. Each kernel has an OpenMP version and a serial reference; both compute
// every element with the same arithmetic, so results are bit-identical and
// ties resolve to the lowest index in either mode.

#include <cstddef>
#include <span>
#include <vector>

#include "ockl/core.hpp"

namespace ockl {

enum class Execution { Serial, Parallel };

// Row-major n x dim matrix of points.
class PointMatrix {
 public:
  PointMatrix() = default;
  PointMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  // Throws invalid_argument on mixed dimensions.
  static PointMatrix from_embeddings(std::span<const Embedding> points);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

namespace kernels {

double squared_distance(std::span<const double> a, std::span<const double> b);

// Column means.
std::vector<double> centroid(const PointMatrix& points);

// out[i] = ||points[i] - ref||.
void distances_to(const PointMatrix& points, std::span<const double> ref, std::span<double> out,
                  Execution exec);

// min_dist[i] = min(min_dist[i], ||points[i] - points[center]||).
void update_min_distances(const PointMatrix& points, std::size_t center, std::span<double> min_dist,
                          Execution exec);

// Index of the largest value, lowest index on ties; NaN entries are skipped.
// Returns values.size() when every entry is skipped.
std::size_t argmax(std::span<const double> values, Execution exec);

// out[i] = ||a[i] - b[i]|| for paired rows.
void paired_distances(const PointMatrix& a, const PointMatrix& b, std::span<double> out,
                      Execution exec);

namespace serial {
inline void distances_to(const PointMatrix& p, std::span<const double> ref, std::span<double> out) {
  kernels::distances_to(p, ref, out, Execution::Serial);
}
inline void update_min_distances(const PointMatrix& p, std::size_t c, std::span<double> d) {
  kernels::update_min_distances(p, c, d, Execution::Serial);
}
inline std::size_t argmax(std::span<const double> v) { return kernels::argmax(v, Execution::Serial); }
inline void paired_distances(const PointMatrix& a, const PointMatrix& b, std::span<double> out) {
  kernels::paired_distances(a, b, out, Execution::Serial);
}
}  // namespace serial

}  // namespace kernels
}  // namespace ockl
