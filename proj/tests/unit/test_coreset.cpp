#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ockl/coreset.hpp"
#include "ockl/error.hpp"
#include "ockl/rng.hpp"

using namespace ockl;

namespace {

std::vector<Embedding> scalars(std::initializer_list<double> xs) {
  std::vector<Embedding> out;
  for (double x : xs) out.emplace_back(std::vector<double>{x});
  return out;
}

void expect_valid(const SelectionResult& r, std::size_t n, double ratio) {
  EXPECT_EQ(r.indices.size(), coreset_size(n, ratio));
  EXPECT_TRUE(std::is_sorted(r.indices.begin(), r.indices.end()));
  EXPECT_EQ(std::adjacent_find(r.indices.begin(), r.indices.end()), r.indices.end());
  for (auto i : r.indices) EXPECT_LT(i, n);
}

}  // namespace

TEST(CoresetSize, RoundHalfUpWithFloorOfOne) {
  EXPECT_EQ(coreset_size(4, 0.5), 2u);
  EXPECT_EQ(coreset_size(3, 0.5), 2u);  // 1.5 rounds up
  EXPECT_EQ(coreset_size(10, 0.01), 1u);
  EXPECT_EQ(coreset_size(7, 1.0), 7u);
  EXPECT_THROW(coreset_size(0, 0.5), Error);
  EXPECT_THROW(coreset_size(4, 0.0), Error);
  EXPECT_THROW(coreset_size(4, 1.01), Error);
}

TEST(SelectRandom, Examples) {
  EXPECT_EQ(select_random(4, 1.0, 123).indices, (std::vector<std::size_t>{0, 1, 2, 3}));
  const auto r = select_random(4, 0.5, 7);
  expect_valid(r, 4, 0.5);
  EXPECT_EQ(r.indices, select_random(4, 0.5, 7).indices);
  EXPECT_EQ(r.method, CoresetMethod::Random);
}

TEST(SelectKCenter, Examples) {
  EXPECT_EQ(select_kcenter(scalars({0, 1, 9, 10}), 0.5).indices, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(select_kcenter(scalars({2, 2, 2, 2}), 0.5).indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(select_kcenter(scalars({5, 1, 3}), 1.0).indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(select_kcenter(std::vector<Embedding>{Embedding(2), Embedding(3)}, 0.5), std::exception);
}

TEST(SelectKCenter, OrderStartsFarthestFromCentroid) {
  PointMatrix p(4, 1);
  const double xs[] = {0, 1, 9, 10};
  for (std::size_t i = 0; i < 4; ++i) p.row(i)[0] = xs[i];
  EXPECT_EQ(kcenter_order(p, 4, Execution::Serial), (std::vector<std::size_t>{0, 3, 1, 2}));
}

TEST(SelectModelBased, Examples) {
  const std::vector<double> l{0.1, 0.9, 0.5};
  EXPECT_EQ(select_model_based(l, 1.0 / 3, LossOrder::Ascending).indices, (std::vector<std::size_t>{0}));
  EXPECT_EQ(select_model_based(l, 1.0 / 3, LossOrder::Descending).indices, (std::vector<std::size_t>{1}));
  const std::vector<double> tie{0.5, 0.5, 0.9};
  EXPECT_EQ(select_model_based(tie, 1.0 / 3).indices, (std::vector<std::size_t>{0}));
  const std::vector<double> bad{0.1, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(select_model_based(bad, 0.5), Error);
}

TEST(Selectors, InvariantSweep) {
  Rng rng(17);
  for (std::size_t n = 1; n <= 40; ++n) {
    for (double ratio : {0.01, 0.25, 0.33, 0.5, 0.75, 0.999, 1.0}) {
      expect_valid(select_random(n, ratio, n), n, ratio);
      std::vector<Embedding> pts;
      std::vector<double> losses;
      for (std::size_t i = 0; i < n; ++i) {
        pts.emplace_back(std::vector<double>{rng.normal(), rng.normal()});
        losses.push_back(rng.uniform());
      }
      expect_valid(select_kcenter(pts, ratio), n, ratio);
      expect_valid(select_model_based(losses, ratio, LossOrder::Descending), n, ratio);
    }
  }
}

TEST(Names, RoundTrip) {
  for (auto m : {CoresetMethod::None, CoresetMethod::Random, CoresetMethod::KCenter, CoresetMethod::ModelBased}) {
    EXPECT_EQ(coreset_method_from_string(to_string(m)), m);
  }
  EXPECT_EQ(to_string(CoresetMethod::ModelBased), "model");
  EXPECT_THROW(coreset_method_from_string("greedy"), Error);
}
