#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#ifdef GENLAB_HAVE_OPENMP
#include <omp.h>
#endif

#include "genlab/kernels.hpp"
#include "genlab/rng.hpp"

using namespace genlab;
using kernels::Trans;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

struct ThreadGuard {
  ThreadGuard() {
#ifdef GENLAB_HAVE_OPENMP
    omp_set_num_threads(4);
#endif
  }
};

}  // namespace

TEST_CASE("gemm matches a naive triple loop for every transpose combination") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng.index(9), n = 1 + rng.index(9), k = 1 + rng.index(9);
    const Trans ta = rng.index(2) ? Trans::Yes : Trans::No;
    const Trans tb = rng.index(2) ? Trans::Yes : Trans::No;
    const auto a = random_vector(m * k, rng), b = random_vector(k * n, rng);
    std::vector<double> c(m * n), ref(m * n, 0.0);
    kernels::gemm_serial(ta, tb, {m, n, k}, a, b, c, false);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = ta == Trans::No ? a[i * k + p] : a[p * m + i];
          const double bv = tb == Trans::No ? b[p * n + j] : b[j * k + p];
          ref[i * n + j] += av * bv;
        }
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("gemm accumulate adds onto the output") {
  const std::vector<double> a{1, 2}, b{3, 4};
  std::vector<double> c{10};
  kernels::gemm_serial(Trans::No, Trans::No, {1, 1, 2}, a, b, c, true);
  CHECK(c[0] == 21.0);
  CHECK_THROWS_AS(kernels::gemm_serial(Trans::No, Trans::No, {2, 1, 2}, a, b, c, false),
                  std::invalid_argument);
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  ThreadGuard guard;
  Rng rng(12);
  SUBCASE("gemm") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 1 + rng.index(70), n = 1 + rng.index(70), k = 1 + rng.index(70);
      const Trans ta = rng.index(2) ? Trans::Yes : Trans::No;
      const Trans tb = rng.index(2) ? Trans::Yes : Trans::No;
      const auto a = random_vector(m * k, rng), b = random_vector(k * n, rng);
      const bool acc = rng.index(2) == 1;
      auto c1 = random_vector(m * n, rng);
      auto c2 = c1;
      kernels::gemm_serial(ta, tb, {m, n, k}, a, b, c1, acc);
      kernels::gemm_parallel(ta, tb, {m, n, k}, a, b, c2, acc);
      CHECK(c1 == c2);
    }
  }
  SUBCASE("pairwise distance") {
    for (auto metric : {kernels::Metric::Euclidean, kernels::Metric::Geodesic}) {
      const std::size_t dim = metric == kernels::Metric::Euclidean ? 2 : 3;
      const std::size_t nq = 300, np = 37;
      auto q = random_vector(nq * dim, rng), p = random_vector(np * dim, rng);
      std::vector<double> o1(nq * np), o2(nq * np);
      kernels::pairwise_distance_serial(metric, dim, q, p, o1);
      kernels::pairwise_distance_parallel(metric, dim, q, p, o2);
      CHECK(o1 == o2);
    }
  }
  SUBCASE("laplacian stencil") {
    for (std::size_t n : {1u, 2u, 7u, 62u}) {
      const auto u = random_vector(n * n, rng);
      std::vector<double> o1(n * n), o2(n * n);
      kernels::neg_laplacian_serial(n, 3.5, u, o1);
      kernels::neg_laplacian_parallel(n, 3.5, u, o2);
      CHECK(o1 == o2);
    }
  }
  SUBCASE("dot") {
    for (std::size_t n : {0u, 1u, 1023u, 1024u, 1025u, 100000u}) {
      const auto a = random_vector(n, rng), b = random_vector(n, rng);
      CHECK(kernels::dot_serial(a, b) == kernels::dot_parallel(a, b));
    }
  }
}

TEST_CASE("distance kernels agree with direct formulas") {
  const std::vector<double> q{0.0, 0.0}, p{3.0, 4.0};
  std::vector<double> out(1);
  kernels::pairwise_distance_serial(kernels::Metric::Euclidean, 2, q, p, out);
  CHECK(out[0] == 5.0);
  const std::vector<double> a{1.0, 0.0, 0.0}, b{0.0, 1.0, 0.0, -1.0, 0.0, 0.0};
  std::vector<double> o2(2);
  kernels::pairwise_distance_serial(kernels::Metric::Geodesic, 3, a, b, o2);
  CHECK(o2[0] == doctest::Approx(std::numbers::pi / 2));
  CHECK(o2[1] == doctest::Approx(std::numbers::pi));
}

TEST_CASE("stencil of a constant field only sees the zero exterior") {
  const std::size_t n = 5;
  std::vector<double> u(n * n, 1.0), out(n * n);
  kernels::neg_laplacian_serial(n, 1.0, u, out);
  CHECK(out[2 * n + 2] == 0.0);  // interior
  CHECK(out[0] == 2.0);          // corner: two missing neighbours
  CHECK(out[2] == 1.0);          // edge: one missing neighbour
}
