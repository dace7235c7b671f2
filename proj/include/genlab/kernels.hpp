#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; the two produce bit-identical results because each output
// element is computed by exactly one thread in the same operation order.

#include <cstddef>
#include <span>

namespace genlab::kernels {

enum class Trans { No, Yes };

/// Dimensions of C = op(A) * op(B) with C of shape m x n and inner size k.
/// A is m x k (or k x m when transposed), B is k x n (or n x k).
struct GemmShape {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
};

void gemm_serial(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
                 std::span<const double> b, std::span<double> c, bool accumulate);
void gemm_parallel(Trans ta, Trans tb, GemmShape s, std::span<const double> a,
                   std::span<const double> b, std::span<double> c, bool accumulate);
/// Picks the parallel variant when the problem is large enough to amortize a
/// parallel region.
void gemm(Trans ta, Trans tb, GemmShape s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);

enum class Metric { Euclidean, Geodesic };

/// out[i*np + j] = dist(q_i, p_j) for points stored row-major with `dim` coordinates.
void pairwise_distance_serial(Metric metric, std::size_t dim, std::span<const double> q,
                              std::span<const double> p, std::span<double> out);
void pairwise_distance_parallel(Metric metric, std::size_t dim, std::span<const double> q,
                                std::span<const double> p, std::span<double> out);

/// Applies the SPD operator (4u_ij - sum of neighbours) / h^2 over an n x n block of
/// interior unknowns with zero values outside the block.
void neg_laplacian_serial(std::size_t n, double inv_h2, std::span<const double> u,
                          std::span<double> out);
void neg_laplacian_parallel(std::size_t n, double inv_h2, std::span<const double> u,
                            std::span<double> out);

/// Dot product with a fixed blocking so the result does not depend on the
/// number of threads.
double dot_serial(std::span<const double> a, std::span<const double> b);
double dot_parallel(std::span<const double> a, std::span<const double> b);

bool openmp_enabled() noexcept;
int max_threads() noexcept;

}  // namespace genlab::kernels
