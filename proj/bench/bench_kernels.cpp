// Serial reference kernels against their OpenMP variants.

#include <benchmark/benchmark.h>

#include <vector>

#include "genlab/kernels.hpp"
#include "genlab/rng.hpp"

namespace k = genlab::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  genlab::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::gemm_parallel(k::Trans::No, k::Trans::No, {n, n, n}, a, b, c, false);
    else k::gemm_serial(k::Trans::No, k::Trans::No, {n, n, n}, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <bool Parallel>
void BM_Distance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto q = random_vector(n * 3, 3), p = random_vector(64 * 3, 4);
  std::vector<double> out(n * 64);
  for (auto _ : state) {
    if constexpr (Parallel) k::pairwise_distance_parallel(k::Metric::Geodesic, 3, q, p, out);
    else k::pairwise_distance_serial(k::Metric::Geodesic, 3, q, p, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Laplacian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto u = random_vector(n * n, 5);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::neg_laplacian_parallel(n, 1.0, u, out);
    else k::neg_laplacian_serial(n, 1.0, u, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Dot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vector(n, 6), b = random_vector(n, 7);
  for (auto _ : state) {
    double d = Parallel ? k::dot_parallel(a, b) : k::dot_serial(a, b);
    benchmark::DoNotOptimize(d);
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_Distance<false>)->Arg(256)->Arg(4096);
BENCHMARK(BM_Distance<true>)->Arg(256)->Arg(4096);
BENCHMARK(BM_Laplacian<false>)->Arg(62)->Arg(254);
BENCHMARK(BM_Laplacian<true>)->Arg(62)->Arg(254);
BENCHMARK(BM_Dot<false>)->Arg(4096)->Arg(1 << 20);
BENCHMARK(BM_Dot<true>)->Arg(4096)->Arg(1 << 20);

BENCHMARK_MAIN();
