#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "genlab/kernels.hpp"
#include "genlab/predicates.hpp"
#include "genlab/tensor.hpp"

namespace genlab::geometry {

enum class SpaceKind { UnitSquare, UnitSphere };

/// The bounded metric space a model lives in.
///   UnitSquare: points in [0,1]², Euclidean distance.
///   UnitSphere: unit 3-vectors, distance arccos(clamp(p·q, -1, 1)).
class MetricSpace {
 public:
  constexpr explicit MetricSpace(SpaceKind kind = SpaceKind::UnitSquare) : kind_(kind) {}

  SpaceKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return kind_ == SpaceKind::UnitSquare ? 2 : 3; }
  kernels::Metric metric() const noexcept {
    return kind_ == SpaceKind::UnitSquare ? kernels::Metric::Euclidean : kernels::Metric::Geodesic;
  }
  double distance(std::span<const double> p, std::span<const double> q) const;
  /// Square: inside [0,1]² (with `tol` slack). Sphere: | |p| - 1 | < 1e-9.
  bool contains(std::span<const double> p, double tol = 0.0) const;

  std::string name() const { return kind_ == SpaceKind::UnitSquare ? "square" : "sphere"; }
  /// Parses "square" / "sphere"; throws std::invalid_argument otherwise.
  static MetricSpace from_name(const std::string& name);

  bool operator==(const MetricSpace&) const = default;

 private:
  SpaceKind kind_;
};

inline constexpr MetricSpace kUnitSquare{SpaceKind::UnitSquare};
inline constexpr MetricSpace kUnitSphere{SpaceKind::UnitSphere};

enum class Topology { Grid, Delaunay, SphereThreshold, SingleNode };

std::string topology_name(Topology t);
Topology topology_from_name(const std::string& name);

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Node positions (n x dim) plus directed edges. Undirected adjacencies are
/// stored as both directions; no self-loops or duplicates.
struct SpatialMesh {
  MetricSpace space;
  Topology topology = Topology::Grid;
  Tensor positions;
  std::vector<Edge> edges;
  /// Grid order k when the mesh came from a k x k or order-k construction.
  std::size_t order = 0;

  std::size_t node_count() const { return positions.empty() ? 0 : positions.rows(); }
  std::vector<std::size_t> sources() const;
  std::vector<std::size_t> targets() const;
  /// Undirected edges (i < j), sorted.
  std::vector<std::pair<std::size_t, std::size_t>> undirected_edges() const;

  bool operator==(const SpatialMesh&) const = default;
};

/// Expands undirected pairs to sorted, deduplicated directed edges.
/// Throws std::invalid_argument on self-loops or out-of-range indices.
std::vector<Edge> directed_from_undirected(
    std::span<const std::pair<std::size_t, std::size_t>> pairs, std::size_t node_count);

struct Triangulation {
  /// Counter-clockwise vertex triples.
  std::vector<std::array<std::size_t, 3>> triangles;
  /// Sorted (i < j) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Incremental Bowyer-Watson with ghost triangles for the hull and exact
/// predicates. Points are inserted in input order; cocircular ties keep the
/// configuration already present. Throws std::invalid_argument for fewer than
/// three points, all-collinear input, or duplicate points.
Triangulation delaunay_triangulation(std::span<const Point2> points);

/// Delaunay mesh over an n x 2 position tensor.
SpatialMesh delaunay(const Tensor& positions);

/// k² nodes at (i/(k-1), j/(k-1)), node index i*k + j, Delaunay edges.
SpatialMesh square_grid_mesh(std::size_t k);

/// Nodes on a (theta, phi) grid with step pi/(k-1), Cartesian duplicates
/// removed; edges join nodes within geodesic distance pi/(k-1)·(1+1e-9).
SpatialMesh sphere_mesh(std::size_t k);

/// One node at the centre of the square or the north pole, no edges.
SpatialMesh single_node_mesh(MetricSpace space);

/// Grid mesh of order k for the space (square grid or sphere grid).
SpatialMesh grid_mesh(MetricSpace space, std::size_t k);

/// First n points of the Halton sequence in bases (2, 3). seed == 0 gives the
/// plain radical-inverse sequence starting at index 1; other seeds apply
/// seed-derived digit permutations (0 kept fixed) and a start offset.
/// Returns an n x dims tensor with entries in (0, 1).
Tensor halton_points(std::size_t n, std::size_t dims, std::uint64_t seed);

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, std::uint32_t base);

/// Square: clamp each coordinate to [0,1]. Sphere: rescale rows to unit norm
/// (std::domain_error on a zero row).
Tensor clamp_to_space(const Tensor& points, MetricSpace space);

/// BFS eccentricity maximum; throws std::runtime_error when disconnected.
std::size_t graph_diameter(const SpatialMesh& mesh);
bool is_connected(const SpatialMesh& mesh);

nlohmann::json mesh_to_json(const SpatialMesh& mesh);
SpatialMesh mesh_from_json(const nlohmann::json& j);

}  // namespace genlab::geometry
