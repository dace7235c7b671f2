#include "genlab/representation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace genlab {

using geometry::SpatialMesh;

std::string representation_name(RepresentationKind k) {
  return k == RepresentationKind::BilinearGrid ? "bilinear_grid" : "soft_nearest";
}

RepresentationKind representation_from_name(const std::string& name) {
  if (name == "bilinear_grid" || name == "bilinear") return RepresentationKind::BilinearGrid;
  if (name == "soft_nearest") return RepresentationKind::SoftNearest;
  throw std::invalid_argument("unknown representation '" + name + "'");
}

namespace {

void softmax_neg_inplace(std::span<double> row, double temperature) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double& v : row) {
    v = -v / temperature;
    mx = std::max(mx, v);
  }
  double z = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : row) v /= z;
}

void check_temperature(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("representation temperature must be positive");
}

void bilinear_row(std::span<const double> x, std::size_t k, std::span<double> out) {
  if (x.size() != 2 || !(x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0)) {
    throw std::invalid_argument("bilinear_weights: location outside [0,1]^2");
  }
  const double cells = static_cast<double>(k - 1);
  const auto cell = [&](double c) {
    return std::min(static_cast<std::size_t>(std::floor(c * cells)), k - 2);
  };
  const std::size_t ci = cell(x[0]), cj = cell(x[1]);
  const double u = x[0] * cells - static_cast<double>(ci);
  const double v = x[1] * cells - static_cast<double>(cj);
  std::fill(out.begin(), out.end(), 0.0);
  out[ci * k + cj] = (1.0 - u) * (1.0 - v);
  out[(ci + 1) * k + cj] = u * (1.0 - v);
  out[ci * k + cj + 1] = (1.0 - u) * v;
  out[(ci + 1) * k + cj + 1] = u * v;
}

std::size_t grid_order(const SpatialMesh& grid) {
  const std::size_t k = grid.order;
  if (grid.topology != geometry::Topology::Grid ||
      grid.space.kind() != geometry::SpaceKind::UnitSquare || k < 2 ||
      grid.node_count() != k * k) {
    throw std::invalid_argument("bilinear representation needs a square grid mesh");
  }
  return k;
}

}  // namespace

std::vector<double> soft_nearest_weights(std::span<const double> x, const SpatialMesh& mesh,
                                         double temperature) {
  check_temperature(temperature);
  if (mesh.node_count() == 0) throw std::invalid_argument("soft_nearest_weights: empty mesh");
  const std::size_t dim = mesh.space.dim();
  if (x.size() != dim) throw std::invalid_argument("soft_nearest_weights: wrong dimension");
  std::vector<double> w(mesh.node_count());
  kernels::pairwise_distance_serial(mesh.space.metric(), dim, x, mesh.positions.data(), w);
  softmax_neg_inplace(w, temperature);
  return w;
}

std::vector<double> bilinear_weights(std::span<const double> x, const SpatialMesh& grid) {
  const std::size_t k = grid_order(grid);
  std::vector<double> w(k * k);
  bilinear_row(x, k, w);
  return w;
}

Tensor weight_matrix(const Tensor& xs, const SpatialMesh& mesh, const RepresentationFn& rep) {
  const std::size_t n = mesh.node_count();
  const std::size_t dim = mesh.space.dim();
  if (xs.rank() != 2 || (xs.rows() > 0 && xs.cols() != dim)) {
    throw std::invalid_argument("weight_matrix: locations must be |xs| x " + std::to_string(dim));
  }
  const std::size_t m = xs.rows();
  Tensor out = Tensor::zeros(m, n);
  if (m == 0) return out;
  if (rep.kind == RepresentationKind::BilinearGrid) {
    const std::size_t k = grid_order(mesh);
    for (std::size_t i = 0; i < m; ++i) {
      bilinear_row(xs.data().subspan(i * 2, 2), k, out.data().subspan(i * n, n));
    }
    return out;
  }
  check_temperature(rep.temperature);
  if (n == 0) throw std::invalid_argument("weight_matrix: empty mesh");
  kernels::pairwise_distance_parallel(mesh.space.metric(), dim, xs.data(), mesh.positions.data(),
                                      out.data());
  for (std::size_t i = 0; i < m; ++i) softmax_neg_inplace(out.data().subspan(i * n, n), rep.temperature);
  return out;
}

ad::Var soft_nearest_weight_matrix(ad::Var xs, ad::Var positions, geometry::MetricSpace space,
                                   double temperature) {
  check_temperature(temperature);
  return ad::softmax_rows(
      ad::scale(ad::pairwise_distance(xs, positions, space.metric()), -1.0 / temperature));
}

}  // namespace genlab
