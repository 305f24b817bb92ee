// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "ockl/coreset.hpp"
#include "ockl/kernels.hpp"
#include "ockl/metrics.hpp"
#include "ockl/rng.hpp"

namespace {

ockl::PointMatrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  ockl::Rng rng(seed);
  ockl::PointMatrix p(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : p.row(i)) v = rng.normal();
  }
  return p;
}

ockl::Execution mode(const benchmark::State& state) {
  return state.range(2) ? ockl::Execution::Parallel : ockl::Execution::Serial;
}

void BM_KCenterOrder(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_points(n, static_cast<std::size_t>(state.range(1)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(ockl::kcenter_order(p, n / 4, mode(state)));
  state.SetLabel(state.range(2) ? "parallel" : "serial");
}

void BM_PairedDistances(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto a = random_points(n, dim, 2);
  const auto b = random_points(n, dim, 3);
  std::vector<double> out(n);
  for (auto _ : state) {
    ockl::kernels::paired_distances(a, b, out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(state.range(2) ? "parallel" : "serial");
}

void BM_KnowledgeGap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  ockl::Rng rng(4);
  std::vector<ockl::Embedding> a(n, ockl::Embedding(dim)), b(n, ockl::Embedding(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      a[i][k] = rng.normal();
      b[i][k] = rng.normal();
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(ockl::knowledge_gap(a, b, mode(state)));
  state.SetLabel(state.range(2) ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_KCenterOrder)->ArgsProduct({{256, 1024}, {64, 256}, {0, 1}});
BENCHMARK(BM_PairedDistances)->ArgsProduct({{1024, 8192}, {256}, {0, 1}});
BENCHMARK(BM_KnowledgeGap)->ArgsProduct({{512, 4096}, {256}, {0, 1}});

BENCHMARK_MAIN();
