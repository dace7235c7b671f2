#pragma once

// Ground-truth generators: a finite-difference Poisson solver on the unit
// square and manufactured solutions on the unit sphere.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "genlab/gen_model.hpp"
#include "genlab/rng.hpp"

namespace genlab::pde {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  double area() const { return (x1 - x0) * (y1 - y0); }
  bool operator==(const Rect&) const = default;
};

/// Heater (strength > 0 in ψ) or cooler (< 0) occupying an axis-aligned rectangle.
struct HeatSource {
  Rect rect;
  double strength = 0.0;
};

/// Δφ = ψ on (0,1)² with φ = boundary_value on all four walls.
struct SquarePoissonProblem {
  std::function<double(double x, double y)> source;
  double boundary_value = 0.0;

  /// ψ = Σ strength over the sources containing the point.
  static SquarePoissonProblem from_sources(std::vector<HeatSource> sources, double boundary);
};

/// Node values on an m x m grid, node (i, j) at (i/(m-1), j/(m-1)), index i*m + j.
struct GridField {
  std::size_t m = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * m + j]; }
  /// Bilinear interpolation; throws std::invalid_argument outside [0,1]².
  double interpolate(double x, double y) const;
};

struct CgReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// 5-point discretization with Dirichlet elimination, solved by matrix-free
/// conjugate gradients to relative residual < 1e-10. Throws
/// std::invalid_argument for m < 3 and std::runtime_error when CG has not
/// converged after 10·m² iterations.
GridField solve_square_poisson(const SquarePoissonProblem& problem, std::size_t m,
                               CgReport* report = nullptr, bool parallel = true);

using Vec3 = std::array<double, 3>;
using Vec3l = std::array<long double, 3>;

/// f(x) = Σ_i k_i (x·v_i)³.
struct SphereField {
  std::vector<double> coefficients;
  std::vector<Vec3> directions;

  long double eval(const Vec3l& x) const;
};

/// Throws std::invalid_argument unless | |x| - 1 | < 1e-9.
double sphere_solution_eval(const SphereField& field, std::span<const double> x);

using SphereScalarField = std::function<long double(const Vec3l&)>;

/// Five-point Laplace-Beltrami estimate
///   (f(x+εa) + f(x-εa) + f(x+εb) + f(x-εb) - 4 f(x)) / ε²
/// with every offset point projected back to the sphere and {a, b} an
/// orthonormal tangent basis obtained by Gram-Schmidt from the first axis
/// vector not within 1e-6 of ±x. `basis_rotation` rotates {a, b} in the
/// tangent plane. Evaluated in extended precision; requires 3e-6 ≤ ε ≤ 3e-4.
double sphere_numerical_laplacian(const SphereScalarField& f, std::span<const double> x,
                                  double eps = 3e-5, double basis_rotation = 0.0);

struct SphereScenario {
  SphereField field;
  std::vector<InputSample> inputs;    // channel 0, value = numerical Laplacian
  std::vector<QuerySample> queries;   // channel 0, target = f(x)
};

/// Coefficients ~ N(0,1); input and query locations drawn independently and
/// uniformly on the sphere.
SphereScenario generate_sphere_scenario(const std::vector<Vec3>& directions, std::uint64_t seed,
                                        std::size_t n_inputs = 128, std::size_t n_queries = 128,
                                        double eps = 3e-5);

/// Uniform point on the unit sphere (normalized Gaussian).
Vec3 random_unit_vector(Rng& rng);

}  // namespace genlab::pde
