#include "genlab/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "genlab/kernels.hpp"
#include "genlab/rng.hpp"

namespace genlab::pde {

SquarePoissonProblem SquarePoissonProblem::from_sources(std::vector<HeatSource> sources,
                                                        double boundary) {
  SquarePoissonProblem p;
  p.boundary_value = boundary;
  p.source = [sources = std::move(sources)](double x, double y) {
    double s = 0.0;
    for (const auto& h : sources) {
      if (h.rect.contains(x, y)) s += h.strength;
    }
    return s;
  };
  return p;
}

double GridField::interpolate(double x, double y) const {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("GridField::interpolate: point outside [0,1]^2");
  }
  const double cells = static_cast<double>(m - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(std::floor(x * cells)), m - 2);
  const std::size_t j = std::min(static_cast<std::size_t>(std::floor(y * cells)), m - 2);
  const double u = x * cells - static_cast<double>(i);
  const double v = y * cells - static_cast<double>(j);
  return (1 - u) * (1 - v) * at(i, j) + u * (1 - v) * at(i + 1, j) + (1 - u) * v * at(i, j + 1) +
         u * v * at(i + 1, j + 1);
}

GridField solve_square_poisson(const SquarePoissonProblem& problem, std::size_t m,
                               CgReport* report, bool parallel) {
  if (m < 3) throw std::invalid_argument("solve_square_poisson needs m >= 3");
  if (!problem.source) throw std::invalid_argument("solve_square_poisson: no source function");
  const std::size_t n = m - 2;
  const double h = 1.0 / static_cast<double>(m - 1);
  const double inv_h2 = 1.0 / (h * h);
  const double boundary = problem.boundary_value;

  auto apply = [&](std::span<const double> u, std::span<double> out) {
    parallel ? kernels::neg_laplacian_parallel(n, inv_h2, u, out)
             : kernels::neg_laplacian_serial(n, inv_h2, u, out);
  };
  auto dot = [&](std::span<const double> a, std::span<const double> b) {
    return parallel ? kernels::dot_parallel(a, b) : kernels::dot_serial(a, b);
  };

  // -Δ_h u = -ψ, with boundary neighbours moved to the right-hand side.
  std::vector<double> rhs(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = static_cast<double>(i + 1) * h, y = static_cast<double>(j + 1) * h;
      double b = -problem.source(x, y);
      const int walls = (i == 0) + (i + 1 == n) + (j == 0) + (j + 1 == n);
      b += walls * boundary * inv_h2;
      rhs[i * n + j] = b;
    }
  }

  std::vector<double> u(n * n, boundary), r(n * n), p(n * n), ap(n * n);
  apply(u, ap);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - ap[i];
  p = r;
  const double bnorm = std::sqrt(dot(rhs, rhs));
  double rr = dot(r, r);
  const double tol = 1e-10 * (bnorm > 0.0 ? bnorm : 1.0);
  const std::size_t max_iter = 10 * m * m;
  std::size_t it = 0;
  while (std::sqrt(rr) >= tol) {
    if (it >= max_iter) throw std::runtime_error("conjugate gradients did not converge");
    apply(p, ap);
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    ++it;
  }
  if (report) {
    report->iterations = it;
    report->relative_residual = bnorm > 0.0 ? std::sqrt(rr) / bnorm : std::sqrt(rr);
  }

  GridField field;
  field.m = m;
  field.values.assign(m * m, boundary);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) field.values[(i + 1) * m + (j + 1)] = u[i * n + j];
  return field;
}

long double SphereField::eval(const Vec3l& x) const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    const auto& v = directions[i];
    const long double t = x[0] * v[0] + x[1] * v[1] + x[2] * v[2];
    s += static_cast<long double>(coefficients[i]) * t * t * t;
  }
  return s;
}

namespace {

Vec3l to_unit_ld(std::span<const double> x) {
  if (x.size() != 3) throw std::invalid_argument("sphere point must have 3 coordinates");
  const long double n = std::sqrt(static_cast<long double>(x[0]) * x[0] +
                                  static_cast<long double>(x[1]) * x[1] +
                                  static_cast<long double>(x[2]) * x[2]);
  if (std::abs(n - 1.0L) >= 1e-9L) throw std::invalid_argument("sphere point is not unit length");
  return {x[0] / n, x[1] / n, x[2] / n};
}

long double dot3(const Vec3l& a, const Vec3l& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3l normalized(Vec3l v) {
  const long double n = std::sqrt(dot3(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

double sphere_solution_eval(const SphereField& field, std::span<const double> x) {
  if (x.size() != 3) throw std::invalid_argument("sphere point must have 3 coordinates");
  const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  if (std::abs(n - 1.0) >= 1e-9) throw std::invalid_argument("sphere point is not unit length");
  double s = 0.0;
  for (std::size_t i = 0; i < field.coefficients.size(); ++i) {
    const auto& v = field.directions[i];
    const double t = x[0] * v[0] + x[1] * v[1] + x[2] * v[2];
    s += field.coefficients[i] * t * t * t;
  }
  return s;
}

double sphere_numerical_laplacian(const SphereScalarField& f, std::span<const double> x_in,
                                  double eps, double basis_rotation) {
  if (!(eps >= 3e-6 * (1 - 1e-12) && eps <= 3e-4 * (1 + 1e-12))) {
    throw std::invalid_argument("sphere_numerical_laplacian: eps must lie in [3e-6, 3e-4]");
  }
  const Vec3l x = to_unit_ld(x_in);
  Vec3l a{};
  bool found = false;
  for (int axis = 0; axis < 3 && !found; ++axis) {
    Vec3l e{0.0L, 0.0L, 0.0L};
    e[axis] = 1.0L;
    const long double c = dot3(e, x);
    if (std::abs(std::abs(c) - 1.0L) < 1e-6L) continue;
    a = normalized({e[0] - c * x[0], e[1] - c * x[1], e[2] - c * x[2]});
    found = true;
  }
  Vec3l b{x[1] * a[2] - x[2] * a[1], x[2] * a[0] - x[0] * a[2], x[0] * a[1] - x[1] * a[0]};
  if (basis_rotation != 0.0) {
    const long double c = std::cos(static_cast<long double>(basis_rotation));
    const long double s = std::sin(static_cast<long double>(basis_rotation));
    Vec3l ra, rb;
    for (int d = 0; d < 3; ++d) {
      ra[d] = c * a[d] + s * b[d];
      rb[d] = -s * a[d] + c * b[d];
    }
    a = ra;
    b = rb;
  }
  const long double e = eps;
  long double acc = -4.0L * f(x);
  for (const Vec3l& dir : {a, b}) {
    for (long double sgn : {1.0L, -1.0L}) {
      acc += f(normalized({x[0] + sgn * e * dir[0], x[1] + sgn * e * dir[1],
                           x[2] + sgn * e * dir[2]}));
    }
  }
  return static_cast<double>(acc / (e * e));
}

Vec3 random_unit_vector(Rng& rng) {
  for (;;) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n < 1e-12) continue;
    return {v[0] / n, v[1] / n, v[2] / n};
  }
}

SphereScenario generate_sphere_scenario(const std::vector<Vec3>& directions, std::uint64_t seed,
                                        std::size_t n_inputs, std::size_t n_queries, double eps) {
  for (const auto& v : directions) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (std::abs(n - 1.0) >= 1e-9) throw std::invalid_argument("house direction is not unit");
  }
  Rng rng(seed);
  SphereScenario sc;
  sc.field.directions = directions;
  for (std::size_t i = 0; i < directions.size(); ++i) sc.field.coefficients.push_back(rng.normal());
  const SphereScalarField f = [&field = sc.field](const Vec3l& p) { return field.eval(p); };
  for (std::size_t i = 0; i < n_inputs; ++i) {
    const Vec3 x = random_unit_vector(rng);
    sc.inputs.push_back({{x[0], x[1], x[2]}, 0, {sphere_numerical_laplacian(f, x, eps)}});
  }
  for (std::size_t i = 0; i < n_queries; ++i) {
    const Vec3 x = random_unit_vector(rng);
    sc.queries.push_back({{x[0], x[1], x[2]}, 0, {sphere_solution_eval(sc.field, x)}});
  }
  return sc;
}

}  // namespace genlab::pde
