// Serial reference vs OpenMP kernels at a few problem sizes.
//
//   ./build/bench/bench_kernels --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bimem/kernels.hpp"
#include "bimem/model.hpp"

namespace {

using namespace bimem;

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

void forward_args(benchmark::internal::Benchmark* b) {
  for (long rows : {256, 2048, 16384}) b->Args({rows, 32});
  b->Args({2048, 128});
}

template <kernels::Exec E>
void BM_forward_rows(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto hidden = static_cast<std::size_t>(state.range(1));
  const std::size_t dim = 8;
  std::mt19937_64 rng(1);
  const auto params = ClassifierParams::random_uniform(Layout{dim, hidden, 5}, 0.3, rng);
  const auto x = gaussian(rows * dim, 2);
  for (auto _ : state) {
    auto out = kernels::forward_rows(params, x, dim, E);
    benchmark::DoNotOptimize(out.probs.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows));
  state.counters["threads"] = E == kernels::Exec::parallel ? kernels::max_threads() : 1;
}

template <kernels::Exec E>
void BM_l1_table(benchmark::State& state) {
  const auto points = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const std::size_t k = 10;
  const auto p = gaussian(points * dim, 3);
  const auto c = gaussian(k * dim, 4);
  for (auto _ : state) {
    auto out = kernels::l1_table(p, c, dim, E);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(points * k));
  state.counters["threads"] = E == kernels::Exec::parallel ? kernels::max_threads() : 1;
}

void l1_args(benchmark::internal::Benchmark* b) {
  for (long points : {64, 1024, 16384}) b->Args({points, 32});
}

BENCHMARK(BM_forward_rows<kernels::Exec::serial>)->Apply(forward_args);
BENCHMARK(BM_forward_rows<kernels::Exec::parallel>)->Apply(forward_args);
BENCHMARK(BM_l1_table<kernels::Exec::serial>)->Apply(l1_args);
BENCHMARK(BM_l1_table<kernels::Exec::parallel>)->Apply(l1_args);

}  // namespace

BENCHMARK_MAIN();
