#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "genlab/autodiff.hpp"
#include "genlab/geometry.hpp"
#include "genlab/gradcheck.hpp"
#include "genlab/representation.hpp"
#include "genlab/rng.hpp"

using namespace genlab;
using geometry::SpatialMesh;

namespace {

SpatialMesh line_mesh() {
  SpatialMesh m;
  m.topology = geometry::Topology::Delaunay;
  m.positions = Tensor::matrix(3, 2, {0.0, 0.0, 0.5, 0.0, 1.0, 0.0});
  return m;
}

std::vector<double> random_unit(Rng& rng) {
  std::vector<double> v(3);
  double n = 0;
  do {
    for (double& c : v) c = rng.normal();
    n = std::hypot(v[0], v[1], v[2]);
  } while (n < 1e-6);
  for (double& c : v) c /= n;
  return v;
}

}  // namespace

TEST_CASE("soft nearest example") {
  const auto w = soft_nearest_weights(std::vector<double>{0.0, 0.0}, line_mesh(), 0.5);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(0.6652).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(0.2447).epsilon(1e-3));
  CHECK(w[2] == doctest::Approx(0.0900).epsilon(1e-3));
  // softmax(-[0, 1, 2]) exactly
  const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0);
  CHECK(w[0] == doctest::Approx(1.0 / z).epsilon(1e-14));
  CHECK_THROWS_AS(soft_nearest_weights(std::vector<double>{0.0, 0.0}, line_mesh(), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(soft_nearest_weights(std::vector<double>{0.0}, line_mesh(), 1.0),
                  std::invalid_argument);
}

TEST_CASE("bilinear example") {
  const auto g = geometry::square_grid_mesh(2);
  const auto w = bilinear_weights(std::vector<double>{0.75, 0.25}, g);
  CHECK(w[0] == 0.1875);
  CHECK(w[1] == 0.0625);
  CHECK(w[2] == 0.5625);
  CHECK(w[3] == 0.1875);
  // corner and far edge
  const auto c = bilinear_weights(std::vector<double>{1.0, 1.0}, geometry::square_grid_mesh(3));
  CHECK(c[8] == 1.0);
  CHECK(std::accumulate(c.begin(), c.end(), 0.0) == 1.0);
  CHECK_THROWS_AS(bilinear_weights(std::vector<double>{1.1, 0.5}, g), std::invalid_argument);
  CHECK_THROWS_AS(bilinear_weights(std::vector<double>{0.5, 0.5}, geometry::sphere_mesh(3)),
                  std::invalid_argument);
}

TEST_CASE("partition of unity") {
  Rng rng(5);
  for (std::size_t k = 2; k <= 7; ++k) {
    const auto sq = geometry::square_grid_mesh(k);
    const auto sp = geometry::sphere_mesh(k);
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> x{rng.uniform(), rng.uniform()};
      const double t = rng.uniform(0.05, 3.0);
      for (const auto& w : {bilinear_weights(x, sq), soft_nearest_weights(x, sq, t),
                            soft_nearest_weights(random_unit(rng), sp, t)}) {
        double s = 0.0;
        for (double v : w) {
          CHECK(v >= 0.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("bilinear reproduces affine functions and is local") {
  Rng rng(8);
  for (std::size_t k = 2; k <= 6; ++k) {
    const auto g = geometry::square_grid_mesh(k);
    const double h = 1.0 / static_cast<double>(k - 1);
    for (int i = 0; i < 200; ++i) {
      const std::vector<double> x{rng.uniform(), rng.uniform()};
      const double a = rng.normal(), b = rng.normal(), c = rng.normal();
      const auto w = bilinear_weights(x, g);
      double f = 0.0;
      std::size_t nonzero = 0;
      for (std::size_t n = 0; n < w.size(); ++n) {
        f += w[n] * (a + b * g.positions(n, 0) + c * g.positions(n, 1));
        if (w[n] != 0.0) {
          ++nonzero;
          CHECK(std::abs(g.positions(n, 0) - x[0]) <= h + 1e-12);
          CHECK(std::abs(g.positions(n, 1) - x[1]) <= h + 1e-12);
        }
      }
      CHECK(nonzero <= 4);
      CHECK(f == doctest::Approx(a + b * x[0] + c * x[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("soft nearest concentrates as temperature shrinks") {
  const auto g = geometry::square_grid_mesh(3);
  const std::vector<double> x{0.1, 0.05};
  const auto cold = soft_nearest_weights(x, g, 1e-3);
  CHECK(cold[0] > 1.0 - 1e-12);
  const auto hot = soft_nearest_weights(x, g, 1e6);
  for (double v : hot) CHECK(v == doctest::Approx(1.0 / 9.0).epsilon(1e-5));
}

TEST_CASE("weight matrix matches per-point weights") {
  Rng rng(12);
  const auto sq = geometry::square_grid_mesh(4);
  Tensor xs = Tensor::zeros(30, 2);
  for (double& v : xs.data()) v = rng.uniform();
  const auto bl = weight_matrix(xs, sq, {RepresentationKind::BilinearGrid, 1.0});
  const auto sn = weight_matrix(xs, sq, {RepresentationKind::SoftNearest, 0.3});
  for (std::size_t i = 0; i < 30; ++i) {
    const std::vector<double> x{xs(i, 0), xs(i, 1)};
    const auto b = bilinear_weights(x, sq);
    const auto s = soft_nearest_weights(x, sq, 0.3);
    for (std::size_t n = 0; n < 16; ++n) {
      CHECK(bl(i, n) == b[n]);
      CHECK(sn(i, n) == s[n]);
    }
  }
  CHECK(weight_matrix(Tensor::zeros(0, 2), sq, {}).rows() == 0);
  CHECK_THROWS_AS(weight_matrix(Tensor::zeros(2, 3), sq, {}), std::invalid_argument);
  CHECK(representation_from_name(representation_name(RepresentationKind::BilinearGrid)) ==
        RepresentationKind::BilinearGrid);
  CHECK_THROWS_AS(representation_from_name("cubic"), std::invalid_argument);
}

TEST_CASE("differentiable soft nearest matrix") {
  Rng rng(21);
  for (auto space : {geometry::kUnitSquare, geometry::kUnitSphere}) {
    const std::size_t dim = space.dim();
    Tensor xs = Tensor::zeros(5, dim), pos = Tensor::zeros(4, dim), coef = Tensor::zeros(5, 4);
    auto fill_points = [&](Tensor& t) {
      for (std::size_t i = 0; i < t.rows(); ++i) {
        if (dim == 2) {
          t(i, 0) = rng.uniform();
          t(i, 1) = rng.uniform();
        } else {
          const auto u = random_unit(rng);
          for (std::size_t d = 0; d < 3; ++d) t(i, d) = u[d];
        }
      }
    };
    fill_points(xs);
    fill_points(pos);
    for (double& v : coef.data()) v = rng.normal();

    // value matches the tape-free path
    geometry::SpatialMesh mesh;
    mesh.space = space;
    mesh.topology = geometry::Topology::Delaunay;
    mesh.positions = pos;
    {
      ad::Tape tape;
      const auto w = soft_nearest_weight_matrix(tape.constant(xs), tape.constant(pos), space, 0.4);
      const auto ref = weight_matrix(xs, mesh, {RepresentationKind::SoftNearest, 0.4});
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(w.value()[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    }

    auto loss = [&](const std::vector<Tensor>& p) {
      ad::Tape tape;
      const auto w = soft_nearest_weight_matrix(tape.constant(p[0]), tape.constant(p[1]), space, 0.4);
      return ad::sum(ad::hadamard(w, tape.constant(coef))).value()[0];
    };
    ad::Tape tape;
    const auto vx = tape.variable(xs), vp = tape.variable(pos);
    const auto w = soft_nearest_weight_matrix(vx, vp, space, 0.4);
    tape.backward(ad::sum(ad::hadamard(w, tape.constant(coef))));
    const auto fd = finite_diff_grad(loss, {xs, pos}, 1e-6);
    CHECK(max_relative_error({tape.grad(vx), tape.grad(vp)}, fd) < 1e-6);
  }
}
