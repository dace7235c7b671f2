#include "genlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "genlab/rng.hpp"

namespace genlab::geometry {

double MetricSpace::distance(std::span<const double> p, std::span<const double> q) const {
  if (p.size() != dim() || q.size() != dim()) {
    throw std::invalid_argument("point dimension does not match the " + name());
  }
  double out = 0.0;
  kernels::pairwise_distance_serial(metric(), dim(), p, q, std::span<double>(&out, 1));
  return out;
}

bool MetricSpace::contains(std::span<const double> p, double tol) const {
  if (p.size() != dim()) return false;
  if (kind_ == SpaceKind::UnitSquare) {
    return p[0] >= -tol && p[0] <= 1.0 + tol && p[1] >= -tol && p[1] <= 1.0 + tol;
  }
  const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  return std::abs(n - 1.0) < 1e-9;
}

MetricSpace MetricSpace::from_name(const std::string& name) {
  if (name == "square") return kUnitSquare;
  if (name == "sphere") return kUnitSphere;
  throw std::invalid_argument("unknown space '" + name + "' (expected square or sphere)");
}

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::Grid: return "grid";
    case Topology::Delaunay: return "delaunay";
    case Topology::SphereThreshold: return "sphere_threshold";
    case Topology::SingleNode: return "single_node";
  }
  return "grid";
}

Topology topology_from_name(const std::string& name) {
  if (name == "grid") return Topology::Grid;
  if (name == "delaunay") return Topology::Delaunay;
  if (name == "sphere_threshold") return Topology::SphereThreshold;
  if (name == "single_node") return Topology::SingleNode;
  throw std::invalid_argument("unknown topology '" + name + "'");
}

std::vector<std::size_t> SpatialMesh::sources() const {
  std::vector<std::size_t> s;
  s.reserve(edges.size());
  for (const auto& e : edges) s.push_back(e.src);
  return s;
}

std::vector<std::size_t> SpatialMesh::targets() const {
  std::vector<std::size_t> t;
  t.reserve(edges.size());
  for (const auto& e : edges) t.push_back(e.dst);
  return t;
}

std::vector<std::pair<std::size_t, std::size_t>> SpatialMesh::undirected_edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : edges) {
    if (e.src < e.dst) out.emplace_back(e.src, e.dst);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> directed_from_undirected(
    std::span<const std::pair<std::size_t, std::size_t>> pairs, std::size_t node_count) {
  std::vector<Edge> out;
  out.reserve(2 * pairs.size());
  for (auto [a, b] : pairs) {
    if (a == b) throw std::invalid_argument("self-loop in edge list");
    if (a >= node_count || b >= node_count) throw std::invalid_argument("edge index out of range");
    out.push_back({a, b});
    out.push_back({b, a});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// --- Delaunay ------------------------------------------------------------

namespace {

constexpr std::size_t kGhost = std::numeric_limits<std::size_t>::max();

// Counter-clockwise triangle. A ghost triangle (a, b, kGhost) stands for the
// unbounded region beyond hull edge a->b; the outside is to the left of a->b.
struct Tri {
  std::array<std::size_t, 3> v;
  bool alive = true;
  bool ghost() const { return v[2] == kGhost; }
};

class BowyerWatson {
 public:
  explicit BowyerWatson(std::span<const Point2> pts) : pts_(pts) {}

  Triangulation run() {
    const std::size_t n = pts_.size();
    if (n < 3) throw std::invalid_argument("delaunay needs at least 3 points");
    check_duplicates();
    std::size_t i1 = 1;
    std::size_t i2 = n;
    for (std::size_t i = 2; i < n; ++i) {
      if (orient2d(pts_[0], pts_[i1], pts_[i]) != 0) {
        i2 = i;
        break;
      }
    }
    if (i2 == n) throw std::invalid_argument("delaunay input points are all collinear");
    std::size_t a = 0, b = i1, c = i2;
    if (orient2d(pts_[a], pts_[b], pts_[c]) < 0) std::swap(b, c);
    tris_.push_back({{a, b, c}});
    tris_.push_back({{b, a, kGhost}});
    tris_.push_back({{c, b, kGhost}});
    tris_.push_back({{a, c, kGhost}});
    alive_ = 4;
    for (std::size_t i = 1; i < n; ++i) {
      if (i == i1 || i == i2) continue;
      insert(i);
    }

    Triangulation out;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& t : tris_) {
      if (!t.alive || t.ghost()) continue;
      out.triangles.push_back(t.v);
      for (int k = 0; k < 3; ++k) {
        const std::size_t u = t.v[k], w = t.v[(k + 1) % 3];
        edges.emplace(std::min(u, w), std::max(u, w));
      }
    }
    out.edges.assign(edges.begin(), edges.end());
    return out;
  }

 private:
  void check_duplicates() const {
    std::vector<std::size_t> order(pts_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      return std::pair(pts_[l].x, pts_[l].y) < std::pair(pts_[r].x, pts_[r].y);
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (pts_[order[i]] == pts_[order[i - 1]]) {
        throw std::invalid_argument("delaunay input has duplicate points");
      }
    }
  }

  // p on the open segment (a, b), given that the three are collinear.
  static bool strictly_between(Point2 a, Point2 b, Point2 p) {
    if (a.x != b.x) return (p.x > std::min(a.x, b.x)) && (p.x < std::max(a.x, b.x));
    return (p.y > std::min(a.y, b.y)) && (p.y < std::max(a.y, b.y));
  }

  bool in_circumdisk(const Tri& t, Point2 p) const {
    if (t.ghost()) {
      const Point2 a = pts_[t.v[0]], b = pts_[t.v[1]];
      const int o = orient2d(a, b, p);
      return o > 0 || (o == 0 && strictly_between(a, b, p));
    }
    return incircle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > 0;
  }

  void insert(std::size_t pi) {
    const Point2 p = pts_[pi];
    std::vector<std::size_t> bad;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (tris_[t].alive && in_circumdisk(tris_[t], p)) bad.push_back(t);
    }
    if (bad.empty()) throw std::logic_error("delaunay: empty cavity (degenerate input)");

    std::set<std::pair<std::size_t, std::size_t>> cavity_edges;
    for (auto t : bad) {
      for (int k = 0; k < 3; ++k) cavity_edges.emplace(tris_[t].v[k], tris_[t].v[(k + 1) % 3]);
    }
    std::vector<std::pair<std::size_t, std::size_t>> boundary;
    for (auto [u, w] : cavity_edges) {
      if (!cavity_edges.contains({w, u})) boundary.emplace_back(u, w);
    }
    for (auto t : bad) tris_[t].alive = false;
    alive_ -= bad.size();

    for (auto [u, w] : boundary) {
      if (u == kGhost) {
        tris_.push_back({{w, pi, kGhost}});
      } else if (w == kGhost) {
        tris_.push_back({{pi, u, kGhost}});
      } else {
        tris_.push_back({{u, w, pi}});
      }
      ++alive_;
    }
    if (tris_.size() > 2 * alive_ + 64) compact();
  }

  void compact() {
    std::erase_if(tris_, [](const Tri& t) { return !t.alive; });
  }

  std::span<const Point2> pts_;
  std::vector<Tri> tris_;
  std::size_t alive_ = 0;
};

std::vector<Point2> to_points(const Tensor& positions) {
  if (positions.rank() != 2 || positions.cols() != 2) {
    throw std::invalid_argument("delaunay expects an n x 2 position tensor");
  }
  std::vector<Point2> pts(positions.rows());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {positions(i, 0), positions(i, 1)};
  return pts;
}

}  // namespace

Triangulation delaunay_triangulation(std::span<const Point2> points) {
  return BowyerWatson(points).run();
}

SpatialMesh delaunay(const Tensor& positions) {
  const auto pts = to_points(positions);
  const auto tri = delaunay_triangulation(pts);
  SpatialMesh mesh;
  mesh.space = kUnitSquare;
  mesh.topology = Topology::Delaunay;
  mesh.positions = positions;
  mesh.edges = directed_from_undirected(tri.edges, pts.size());
  return mesh;
}

SpatialMesh square_grid_mesh(std::size_t k) {
  if (k < 2) throw std::invalid_argument("square_grid_mesh needs k >= 2");
  SpatialMesh mesh;
  mesh.space = kUnitSquare;
  mesh.topology = Topology::Grid;
  mesh.order = k;
  mesh.positions = Tensor::zeros(k * k, 2);
  // Integer lattice coordinates are exactly cocircular on every cell, so the
  // diagonal choice is decided by insertion order rather than rounding noise.
  std::vector<Point2> lattice(k * k);
  const double h = 1.0 / static_cast<double>(k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t idx = i * k + j;
      mesh.positions(idx, 0) = static_cast<double>(i) * h;
      mesh.positions(idx, 1) = static_cast<double>(j) * h;
      lattice[idx] = {static_cast<double>(i), static_cast<double>(j)};
    }
  }
  const auto tri = delaunay_triangulation(lattice);
  mesh.edges = directed_from_undirected(tri.edges, k * k);
  return mesh;
}

SpatialMesh sphere_mesh(std::size_t k) {
  if (k < 2) throw std::invalid_argument("sphere_mesh needs k >= 2");
  const double step = std::numbers::pi / static_cast<double>(k - 1);
  std::vector<std::array<double, 3>> nodes;
  for (std::size_t ti = 0; ti < k; ++ti) {
    const double theta = static_cast<double>(ti) * step;
    for (std::size_t pj = 0; pj <= 2 * (k - 1); ++pj) {
      const double phi = static_cast<double>(pj) * step;
      std::array<double, 3> p{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                              std::cos(theta)};
      if (ti == 0) p = {0.0, 0.0, 1.0};
      if (ti == k - 1) p = {0.0, 0.0, -1.0};
      const bool dup = std::any_of(nodes.begin(), nodes.end(), [&](const auto& q) {
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        return dx * dx + dy * dy + dz * dz < 1e-18;
      });
      if (!dup) nodes.push_back(p);
    }
  }
  SpatialMesh mesh;
  mesh.space = kUnitSphere;
  mesh.topology = Topology::SphereThreshold;
  mesh.order = k;
  mesh.positions = Tensor::zeros(nodes.size(), 3);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t d = 0; d < 3; ++d) mesh.positions(i, d) = nodes[i][d];
  const double threshold = step * (1.0 + 1e-9);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (kUnitSphere.distance(nodes[i], nodes[j]) <= threshold) pairs.emplace_back(i, j);
    }
  }
  mesh.edges = directed_from_undirected(pairs, nodes.size());
  return mesh;
}

SpatialMesh single_node_mesh(MetricSpace space) {
  SpatialMesh mesh;
  mesh.space = space;
  mesh.topology = Topology::SingleNode;
  mesh.order = 1;
  mesh.positions = space.kind() == SpaceKind::UnitSquare ? Tensor::matrix(1, 2, {0.5, 0.5})
                                                         : Tensor::matrix(1, 3, {0.0, 0.0, 1.0});
  return mesh;
}

SpatialMesh grid_mesh(MetricSpace space, std::size_t k) {
  return space.kind() == SpaceKind::UnitSquare ? square_grid_mesh(k) : sphere_mesh(k);
}

// --- Halton ----------------------------------------------------------------

double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += static_cast<double>(index % base) * f;
    index /= base;
    f *= inv;
  }
  return r;
}

namespace {
double permuted_radical_inverse(std::uint64_t index, std::uint32_t base,
                                const std::vector<std::uint32_t>& perm) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += static_cast<double>(perm[index % base]) * f;
    index /= base;
    f *= inv;
  }
  return r;
}
}  // namespace

Tensor halton_points(std::size_t n, std::size_t dims, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("halton_points needs n >= 1");
  if (dims != 2) throw std::invalid_argument("halton_points supports dims = 2");
  static constexpr std::array<std::uint32_t, 2> kBases{2, 3};
  std::array<std::vector<std::uint32_t>, 2> perms;
  std::uint64_t offset = 0;
  for (std::size_t d = 0; d < dims; ++d) {
    perms[d].resize(kBases[d]);
    for (std::uint32_t i = 0; i < kBases[d]; ++i) perms[d][i] = i;
  }
  if (seed != 0) {
    Rng rng(derive_seed(seed, 0x4a17));
    offset = rng.index(4096);
    for (std::size_t d = 0; d < dims; ++d) {
      auto& p = perms[d];
      for (std::size_t i = p.size() - 1; i > 1; --i) {
        std::swap(p[i], p[1 + rng.index(i)]);
      }
    }
  }
  Tensor out = Tensor::zeros(n, dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      out(i, d) = permuted_radical_inverse(offset + i + 1, kBases[d], perms[d]);
    }
  }
  return out;
}

Tensor clamp_to_space(const Tensor& points, MetricSpace space) {
  if (points.rank() != 2 || points.cols() != space.dim()) {
    throw std::invalid_argument("clamp_to_space: points do not match the space dimension");
  }
  Tensor out = points;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    if (space.kind() == SpaceKind::UnitSquare) {
      for (std::size_t d = 0; d < 2; ++d) out(i, d) = std::clamp(out(i, d), 0.0, 1.0);
    } else {
      double n = 0.0;
      for (std::size_t d = 0; d < 3; ++d) n += out(i, d) * out(i, d);
      n = std::sqrt(n);
      if (n == 0.0) throw std::domain_error("clamp_to_space: zero vector has no direction");
      for (std::size_t d = 0; d < 3; ++d) out(i, d) /= n;
    }
  }
  return out;
}

// --- Graph metrics ---------------------------------------------------------

namespace {
std::vector<std::vector<std::size_t>> adjacency(const SpatialMesh& mesh) {
  std::vector<std::vector<std::size_t>> adj(mesh.node_count());
  for (const auto& e : mesh.edges) adj[e.src].push_back(e.dst);
  return adj;
}

std::vector<std::size_t> bfs(const std::vector<std::vector<std::size_t>>& adj, std::size_t s) {
  std::vector<std::size_t> dist(adj.size(), kGhost);
  std::deque<std::size_t> q{s};
  dist[s] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (auto w : adj[u]) {
      if (dist[w] == kGhost) {
        dist[w] = dist[u] + 1;
        q.push_back(w);
      }
    }
  }
  return dist;
}
}  // namespace

bool is_connected(const SpatialMesh& mesh) {
  if (mesh.node_count() == 0) return true;
  const auto d = bfs(adjacency(mesh), 0);
  return std::none_of(d.begin(), d.end(), [](auto v) { return v == kGhost; });
}

std::size_t graph_diameter(const SpatialMesh& mesh) {
  const auto adj = adjacency(mesh);
  std::size_t diam = 0;
  for (std::size_t s = 0; s < adj.size(); ++s) {
    for (auto v : bfs(adj, s)) {
      if (v == kGhost) throw std::runtime_error("graph_diameter: mesh is disconnected");
      diam = std::max(diam, v);
    }
  }
  return diam;
}

// --- Serialization -----------------------------------------------------------

nlohmann::json mesh_to_json(const SpatialMesh& mesh) {
  nlohmann::json pos = nlohmann::json::array();
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t d = 0; d < mesh.positions.cols(); ++d) row.push_back(mesh.positions(i, d));
    pos.push_back(std::move(row));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : mesh.undirected_edges()) edges.push_back({a, b});
  return {{"space", mesh.space.name()},
          {"topology", topology_name(mesh.topology)},
          {"order", mesh.order},
          {"positions", std::move(pos)},
          {"undirected_edges", std::move(edges)}};
}

SpatialMesh mesh_from_json(const nlohmann::json& j) {
  SpatialMesh mesh;
  mesh.space = MetricSpace::from_name(j.at("space").get<std::string>());
  mesh.topology = topology_from_name(j.value("topology", std::string("delaunay")));
  mesh.order = j.value("order", std::size_t{0});
  const auto& pos = j.at("positions");
  const std::size_t dim = mesh.space.dim();
  mesh.positions = Tensor::zeros(pos.size(), dim);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (pos[i].size() != dim) throw std::runtime_error("mesh position has wrong dimension");
    for (std::size_t d = 0; d < dim; ++d) mesh.positions(i, d) = pos[i][d].get<double>();
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& e : j.at("undirected_edges")) {
    pairs.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  }
  mesh.edges = directed_from_undirected(pairs, mesh.node_count());
  return mesh;
}

}  // namespace genlab::geometry
