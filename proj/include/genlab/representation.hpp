#pragma once

#include <span>
#include <string>
#include <vector>

#include "genlab/autodiff.hpp"
#include "genlab/geometry.hpp"

namespace genlab {

enum class RepresentationKind { BilinearGrid, SoftNearest };

std::string representation_name(RepresentationKind k);
RepresentationKind representation_from_name(const std::string& name);

/// Maps a location to weights over mesh nodes. Every weight vector sums to 1.
struct RepresentationFn {
  RepresentationKind kind = RepresentationKind::SoftNearest;
  /// Softmax temperature for SoftNearest; weights are softmax(-dist / temperature).
  double temperature = 1.0;
  bool operator==(const RepresentationFn&) const = default;
};

/// softmax(-dist(x, node_i) / temperature) over all nodes, in the mesh's metric.
std::vector<double> soft_nearest_weights(std::span<const double> x,
                                         const geometry::SpatialMesh& mesh,
                                         double temperature = 1.0);

/// Bilinear weights of the grid cell containing x on a k x k square grid mesh;
/// at most four nonzero entries. Throws std::invalid_argument when x lies
/// outside [0,1]² or the mesh is not a square grid.
std::vector<double> bilinear_weights(std::span<const double> x,
                                     const geometry::SpatialMesh& grid);

/// Row i is the weight vector for row i of `xs` (|xs| x n).
Tensor weight_matrix(const Tensor& xs, const geometry::SpatialMesh& mesh,
                     const RepresentationFn& rep);

/// Differentiable soft-nearest weight matrix w.r.t. both query locations and
/// node positions.
ad::Var soft_nearest_weight_matrix(ad::Var xs, ad::Var positions, geometry::MetricSpace space,
                                   double temperature = 1.0);

}  // namespace genlab
