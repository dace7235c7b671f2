#include "genlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef GENLAB_HAVE_OPENMP
#include <omp.h>
#endif

namespace genlab::kernels {
namespace {

constexpr std::size_t kDotBlock = 1024;
constexpr std::size_t kParallelGemmWork = std::size_t{1} << 18;

void check_gemm(Trans, Trans, GemmShape s, std::span<const double> a, std::span<const double> b,
                std::span<double> c) {
  if (a.size() != s.m * s.k || b.size() != s.k * s.n || c.size() != s.m * s.n) {
    throw std::invalid_argument("gemm: buffer sizes do not match dimensions");
  }
}

// One output row of C. Shared by both variants so they agree bit for bit.
inline void gemm_row(Trans ta, Trans tb, GemmShape s, const double* a, const double* b,
                     double* crow, std::size_t i, bool accumulate) {
  if (!accumulate) std::fill(crow, crow + s.n, 0.0);
  if (tb == Trans::No) {
    for (std::size_t p = 0; p < s.k; ++p) {
      const double aip = ta == Trans::No ? a[i * s.k + p] : a[p * s.m + i];
      if (aip == 0.0) continue;
      const double* brow = b + p * s.n;
      for (std::size_t j = 0; j < s.n; ++j) crow[j] += aip * brow[j];
    }
  } else {
    for (std::size_t j = 0; j < s.n; ++j) {
      const double* bj = b + j * s.k;
      double acc = 0.0;
      if (ta == Trans::No) {
        const double* ai = a + i * s.k;
        for (std::size_t p = 0; p < s.k; ++p) acc += ai[p] * bj[p];
      } else {
        for (std::size_t p = 0; p < s.k; ++p) acc += a[p * s.m + i] * bj[p];
      }
      crow[j] += acc;
    }
  }
}

inline double distance(Metric metric, std::size_t dim, const double* x, const double* y) {
  if (metric == Metric::Euclidean) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double t = x[d] - y[d];
      s += t * t;
    }
    return std::sqrt(s);
  }
  double c = 0.0;
  for (std::size_t d = 0; d < dim; ++d) c += x[d] * y[d];
  return std::acos(std::clamp(c, -1.0, 1.0));
}

inline double stencil(std::size_t n, double inv_h2, const double* u, std::size_t i,
                      std::size_t j) {
  const std::size_t idx = i * n + j;
  double s = 4.0 * u[idx];
  if (i > 0) s -= u[idx - n];
  if (i + 1 < n) s -= u[idx + n];
  if (j > 0) s -= u[idx - 1];
  if (j + 1 < n) s -= u[idx + 1];
  return s * inv_h2;
}

double block_dot(const double* a, const double* b, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void gemm_serial(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
                 std::span<const double> b, std::span<double> c, bool accumulate) {
  check_gemm(ta, tb, s, a, b, c);
  for (std::size_t i = 0; i < s.m; ++i) {
    gemm_row(ta, tb, s, a.data(), b.data(), c.data() + i * s.n, i, accumulate);
  }
}

void gemm_parallel(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
                   std::span<const double> b, std::span<double> c, bool accumulate) {
  check_gemm(ta, tb, s, a, b, c);
  const auto rows = static_cast<std::ptrdiff_t>(s.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    gemm_row(ta, tb, s, a.data(), b.data(), c.data() + r * s.n, r, accumulate);
  }
}

void gemm(Trans ta, Trans tb, GemmShape s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  if (openmp_enabled() && max_threads() > 1 && s.m > 1 && s.m * s.n * s.k >= kParallelGemmWork) {
    gemm_parallel(ta, tb, s, a, b, c, accumulate);
  } else {
    gemm_serial(ta, tb, s, a, b, c, accumulate);
  }
}

void pairwise_distance_serial(Metric metric, std::size_t dim, std::span<const double> q,
                              std::span<const double> p, std::span<double> out) {
  const std::size_t nq = q.size() / dim;
  const std::size_t np = p.size() / dim;
  if (out.size() != nq * np) throw std::invalid_argument("pairwise_distance: bad output size");
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t j = 0; j < np; ++j) {
      out[i * np + j] = distance(metric, dim, q.data() + i * dim, p.data() + j * dim);
    }
  }
}

void pairwise_distance_parallel(Metric metric, std::size_t dim, std::span<const double> q,
                                std::span<const double> p, std::span<double> out) {
  const std::size_t nq = q.size() / dim;
  const std::size_t np = p.size() / dim;
  if (out.size() != nq * np) throw std::invalid_argument("pairwise_distance: bad output size");
  const auto rows = static_cast<std::ptrdiff_t>(nq);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < np; ++j) {
      out[i * np + j] = distance(metric, dim, q.data() + i * dim, p.data() + j * dim);
    }
  }
}

void neg_laplacian_serial(std::size_t n, double inv_h2, std::span<const double> u,
                          std::span<double> out) {
  if (u.size() != n * n || out.size() != n * n) {
    throw std::invalid_argument("neg_laplacian: bad buffer size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = stencil(n, inv_h2, u.data(), i, j);
  }
}

void neg_laplacian_parallel(std::size_t n, double inv_h2, std::span<const double> u,
                            std::span<double> out) {
  if (u.size() != n * n || out.size() != n * n) {
    throw std::invalid_argument("neg_laplacian: bad buffer size");
  }
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = stencil(n, inv_h2, u.data(), i, j);
  }
}

double dot_serial(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double total = 0.0;
  for (std::size_t begin = 0; begin < a.size(); begin += kDotBlock) {
    total += block_dot(a.data(), b.data(), begin, std::min(a.size(), begin + kDotBlock));
  }
  return total;
}

double dot_parallel(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  const std::size_t blocks = (a.size() + kDotBlock - 1) / kDotBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bb = 0; bb < nb; ++bb) {
    const auto begin = static_cast<std::size_t>(bb) * kDotBlock;
    partial[static_cast<std::size_t>(bb)] =
        block_dot(a.data(), b.data(), begin, std::min(a.size(), begin + kDotBlock));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

bool openmp_enabled() noexcept {
#ifdef GENLAB_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#ifdef GENLAB_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace genlab::kernels
