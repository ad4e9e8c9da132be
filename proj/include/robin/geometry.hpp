#pragma once

// Polygonal domains with labeled boundary arcs, conforming P1 triangle
// meshes, red refinement, and boundary regions addressed by label.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "robin/error.hpp"

namespace robin {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(b - a); }

/// Twice the signed area of (a, b, c); positive when counterclockwise.
inline double orient2d(Point a, Point b, Point c) { return cross(b - a, c - a); }

namespace detail {

inline bool on_segment(Point p, Point a, Point b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline int sign(double v, double eps) { return v > eps ? 1 : (v < -eps ? -1 : 0); }

// Closed-segment intersection test with a scale-aware collinearity tolerance.
inline bool segments_intersect(Point p1, Point p2, Point q1, Point q2, double eps) {
  const int d1 = sign(orient2d(q1, q2, p1), eps);
  const int d2 = sign(orient2d(q1, q2, p2), eps);
  const int d3 = sign(orient2d(p1, p2, q1), eps);
  const int d4 = sign(orient2d(p1, p2, q2), eps);
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

}  // namespace detail

/// A simple polygon, counterclockwise, with one label per boundary segment.
/// Segment i runs from vertex i to vertex (i + 1) mod N.
class PolygonalDomain {
 public:
  [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<std::string>& arc_labels() const { return labels_; }
  [[nodiscard]] std::size_t size() const { return vertices_.size(); }

  [[nodiscard]] double area() const { return 0.5 * signed_area2(vertices_); }

  [[nodiscard]] std::set<std::string> label_set() const {
    return {labels_.begin(), labels_.end()};
  }

  [[nodiscard]] double diameter() const {
    double d = 0.0;
    for (const Point& a : vertices_)
      for (const Point& b : vertices_) d = std::max(d, distance(a, b));
    return d;
  }

  static double signed_area2(const std::vector<Point>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += cross(v[i], v[(i + 1) % v.size()]);
    return s;
  }

 private:
  friend PolygonalDomain build_polygon(std::vector<Point> vertices, std::vector<std::string> labels);
  std::vector<Point> vertices_;
  std::vector<std::string> labels_;
};

/// Validates a polygon and normalizes its orientation to counterclockwise.
/// Throws SelfIntersection, DegenerateEdge, LabelCountMismatch or
/// InvalidArgument (fewer than 3 vertices, non-finite coordinates).
inline PolygonalDomain build_polygon(std::vector<Point> vertices, std::vector<std::string> labels) {
  const std::size_t n = vertices.size();
  ROBIN_THROW_IF(n < 3, ErrorCode::InvalidArgument, "polygon needs at least 3 vertices");
  ROBIN_THROW_IF(labels.size() != n, ErrorCode::LabelCountMismatch,
                 "expected " + std::to_string(n) + " arc labels, got " + std::to_string(labels.size()));
  double scale = 0.0;
  for (const Point& p : vertices) {
    ROBIN_THROW_IF(!std::isfinite(p.x) || !std::isfinite(p.y), ErrorCode::InvalidArgument,
                   "non-finite vertex coordinate");
    scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  }
  scale = std::max(scale, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    ROBIN_THROW_IF(distance(vertices[i], vertices[(i + 1) % n]) <= 1e-14 * scale, ErrorCode::DegenerateEdge,
                   "segment " + std::to_string(i) + " has zero length");
  }
  const double eps = 1e-14 * scale * scale;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = vertices[i], b = vertices[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point c = vertices[j], d = vertices[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (!adjacent) {
        ROBIN_THROW_IF(detail::segments_intersect(a, b, c, d, eps), ErrorCode::SelfIntersection,
                       "segments " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
        continue;
      }
      // Adjacent segments share one endpoint; they must not fold back onto each other.
      const Point shared = (j == i + 1) ? b : a;
      const Point u = (j == i + 1) ? a : b;
      const Point w = (j == i + 1) ? d : c;
      const bool collinear = std::abs(orient2d(shared, u, w)) <= eps;
      ROBIN_THROW_IF(collinear && dot(u - shared, w - shared) > 0.0, ErrorCode::SelfIntersection,
                     "segments " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    }
  }
  const double area2 = PolygonalDomain::signed_area2(vertices);
  ROBIN_THROW_IF(std::abs(area2) <= eps, ErrorCode::DegenerateEdge, "polygon has zero area");
  if (area2 < 0.0) {
    // Reverse the vertex order; segment j of the reversed polygon is segment n-2-j of the input.
    std::vector<Point> rv(n);
    std::vector<std::string> rl(n);
    for (std::size_t j = 0; j < n; ++j) {
      rv[j] = vertices[n - 1 - j];
      rl[j] = labels[(2 * n - 2 - j) % n];
    }
    vertices = std::move(rv);
    labels = std::move(rl);
  }
  PolygonalDomain d;
  d.vertices_ = std::move(vertices);
  d.labels_ = std::move(labels);
  return d;
}

inline PolygonalDomain unit_square() {
  return build_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {"bottom", "right", "top", "left"});
}

/// Unit square with the upper-right quarter removed.
inline PolygonalDomain lshape() {
  return build_polygon({{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}},
                       {"bottom", "right", "inner_h", "inner_v", "top", "left"});
}

using Triangle = std::array<int, 3>;

struct BoundaryEdge {
  std::array<int, 2> nodes{};  // oriented with the domain on the left
  std::string label;
  Point normal;                // outward unit normal
  double length = 0.0;
  int arc = -1;                // maximal run of same-label edges along the boundary loop
  double t0 = 0.0;             // arclength parameter of nodes[0] within its arc, in [0, 1]
  double t1 = 0.0;
  int triangle = -1;           // the triangle owning this edge
};

/// Conforming triangle mesh. Immutable once built; every construction path
/// goes through TriangleMesh::assemble, which validates the invariants and
/// derives normals and arc parameters.
class TriangleMesh {
 public:
  [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Triangle>& triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const { return bedges_; }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] double h() const { return h_; }

  [[nodiscard]] double triangle_area(std::size_t t) const {
    const Triangle& tri = triangles_[t];
    return 0.5 * orient2d(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
  }

  [[nodiscard]] double area() const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) a += triangle_area(t);
    return a;
  }

  [[nodiscard]] double boundary_length() const {
    double s = 0.0;
    for (const auto& e : bedges_) s += e.length;
    return s;
  }

  /// Sorted indices of the nodes lying on the boundary.
  [[nodiscard]] const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }

  [[nodiscard]] std::set<std::string> labels() const {
    std::set<std::string> s;
    for (const auto& e : bedges_) s.insert(e.label);
    return s;
  }

  /// Builds and validates a mesh from raw parts. Triangles with clockwise
  /// order are rejected rather than flipped. Boundary edges may be given in
  /// either orientation; they are re-oriented to keep the domain on the left.
  static TriangleMesh assemble(std::vector<Point> nodes, std::vector<Triangle> triangles,
                               std::vector<std::pair<std::array<int, 2>, std::string>> boundary);

 private:
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> bedges_;
  std::vector<int> boundary_nodes_;
  double h_ = 0.0;
};

namespace detail {

inline std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

// Splits the boundary loop into arcs and assigns arclength parameters. The
// loop is walked counterclockwise from its lexicographically smallest node,
// which is always a polygon corner and so survives refinement and file
// round trips.
inline void assign_arcs(const std::vector<Point>& nodes, std::vector<BoundaryEdge>& edges) {
  const std::size_t m = edges.size();
  std::map<int, std::size_t> outgoing;
  for (std::size_t i = 0; i < m; ++i) {
    ROBIN_THROW_IF(!outgoing.emplace(edges[i].nodes[0], i).second, ErrorCode::InvalidMesh,
                   "boundary is not a single simple loop");
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < m; ++i) {
    const Point a = nodes[edges[i].nodes[0]], b = nodes[edges[start].nodes[0]];
    if (a.x < b.x || (a.x == b.x && a.y < b.y)) start = i;
  }
  std::vector<std::size_t> loop;
  loop.reserve(m);
  std::size_t cur = start;
  for (std::size_t step = 0; step < m; ++step) {
    loop.push_back(cur);
    auto it = outgoing.find(edges[cur].nodes[1]);
    ROBIN_THROW_IF(it == outgoing.end(), ErrorCode::InvalidMesh, "boundary loop is not closed");
    cur = it->second;
    if (cur == start && step + 1 < m)
      throw Error(ErrorCode::InvalidMesh, "boundary consists of more than one loop");
  }
  ROBIN_THROW_IF(cur != start, ErrorCode::InvalidMesh, "boundary loop is not closed");

  // Rotate so the walk begins at a label change when one exists.
  std::size_t offset = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (edges[loop[i]].label != edges[loop[(i + m - 1) % m]].label) {
      offset = i;
      break;
    }
  }
  std::rotate(loop.begin(), loop.begin() + static_cast<std::ptrdiff_t>(offset), loop.end());

  int arc = -1;
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    double total = 0.0;
    while (j < m && edges[loop[j]].label == edges[loop[i]].label) total += edges[loop[j++]].length;
    ++arc;
    double s = 0.0;
    for (std::size_t q = i; q < j; ++q) {
      BoundaryEdge& e = edges[loop[q]];
      e.arc = arc;
      e.t0 = s / total;
      s += e.length;
      e.t1 = (q + 1 == j) ? 1.0 : s / total;
    }
    i = j;
  }
}

}  // namespace detail

inline TriangleMesh TriangleMesh::assemble(std::vector<Point> nodes, std::vector<Triangle> triangles,
                                           std::vector<std::pair<std::array<int, 2>, std::string>> boundary) {
  const int n = static_cast<int>(nodes.size());
  ROBIN_THROW_IF(triangles.empty(), ErrorCode::InvalidMesh, "mesh has no triangles");
  for (const Point& p : nodes)
    ROBIN_THROW_IF(!std::isfinite(p.x) || !std::isfinite(p.y), ErrorCode::InvalidMesh, "non-finite node");

  double total_area = 0.0;
  for (const Triangle& t : triangles) {
    for (int v : t) ROBIN_THROW_IF(v < 0 || v >= n, ErrorCode::InvalidMesh, "triangle node index out of range");
    total_area += 0.5 * orient2d(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
  }
  ROBIN_THROW_IF(!(total_area > 0.0), ErrorCode::InvalidMesh, "mesh has non-positive total area");

  // Directed edge -> owning triangle; each undirected edge must appear once
  // (boundary) or twice with opposite orientations (interior).
  std::map<std::pair<int, int>, int> directed;
  std::map<std::pair<int, int>, int> undirected_count;
  double h = 0.0;
  for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
    const Triangle& t = triangles[ti];
    const double a = 0.5 * orient2d(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    ROBIN_THROW_IF(!(a > 1e-14 * total_area), ErrorCode::InvalidMesh,
                   "triangle " + std::to_string(ti) + " is degenerate or clockwise");
    for (int k = 0; k < 3; ++k) {
      const int p = t[k], q = t[(k + 1) % 3];
      ROBIN_THROW_IF(!directed.emplace(std::pair{p, q}, static_cast<int>(ti)).second, ErrorCode::InvalidMesh,
                     "non-conforming or inverted edge in triangle " + std::to_string(ti));
      ++undirected_count[detail::edge_key(p, q)];
      h = std::max(h, distance(nodes[p], nodes[q]));
    }
  }

  std::map<std::pair<int, int>, std::string> given;
  for (auto& [e, label] : boundary) {
    ROBIN_THROW_IF(e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n, ErrorCode::InvalidMesh,
                   "boundary edge node index out of range");
    ROBIN_THROW_IF(!given.emplace(detail::edge_key(e[0], e[1]), label).second, ErrorCode::InvalidMesh,
                   "duplicate boundary edge");
  }

  std::vector<BoundaryEdge> bedges;
  bedges.reserve(boundary.size());
  for (auto& [e, label] : boundary) {
    const auto key = detail::edge_key(e[0], e[1]);
    auto cnt = undirected_count.find(key);
    ROBIN_THROW_IF(cnt == undirected_count.end() || cnt->second != 1, ErrorCode::InvalidMesh,
                   "listed boundary edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                       ") is not on the mesh boundary");
    BoundaryEdge be;
    auto fwd = directed.find({e[0], e[1]});
    if (fwd != directed.end()) {
      be.nodes = e;
      be.triangle = fwd->second;
    } else {
      be.nodes = {e[1], e[0]};
      be.triangle = directed.at({e[1], e[0]});
    }
    be.label = label;
    const Point d = nodes[be.nodes[1]] - nodes[be.nodes[0]];
    be.length = norm(d);
    be.normal = {d.y / be.length, -d.x / be.length};
    bedges.push_back(std::move(be));
  }
  for (const auto& [key, c] : undirected_count) {
    ROBIN_THROW_IF(c > 2, ErrorCode::InvalidMesh, "edge shared by more than two triangles");
    ROBIN_THROW_IF(c == 1 && !given.count(key), ErrorCode::InvalidMesh,
                   "topological boundary edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                       ") has no label");
  }
  detail::assign_arcs(nodes, bedges);

  std::set<int> bn;
  for (const auto& e : bedges) bn.insert(e.nodes.begin(), e.nodes.end());

  TriangleMesh m;
  m.nodes_ = std::move(nodes);
  m.triangles_ = std::move(triangles);
  m.bedges_ = std::move(bedges);
  m.boundary_nodes_.assign(bn.begin(), bn.end());
  m.h_ = h;
  return m;
}

namespace detail {

// Ear clipping of a counterclockwise simple polygon. Among valid ears the one
// with the largest minimum angle is cut first (ties: lowest index), which
// keeps the coarse triangulation deterministic and avoids needless slivers.
inline std::vector<Triangle> ear_clip(const std::vector<Point>& v) {
  std::vector<int> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<int>(i);
  double scale = 1.0;
  for (const Point& p : v) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double eps = 1e-14 * scale * scale;

  auto min_angle = [](Point a, Point b, Point c) {
    auto ang = [](Point p, Point q, Point r) {
      const Point u = q - p, w = r - p;
      return std::atan2(std::abs(cross(u, w)), dot(u, w));
    };
    return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
  };

  std::vector<Triangle> out;
  while (idx.size() > 3) {
    const std::size_t m = idx.size();
    int best = -1;
    double best_q = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const int ip = idx[(i + m - 1) % m], ic = idx[i], in = idx[(i + 1) % m];
      const Point a = v[ip], b = v[ic], c = v[in];
      if (orient2d(a, b, c) <= eps) continue;
      bool empty = true;
      for (std::size_t j = 0; j < m && empty; ++j) {
        const int q = idx[j];
        if (q == ip || q == ic || q == in) continue;
        const Point p = v[q];
        if (orient2d(a, b, p) >= -eps && orient2d(b, c, p) >= -eps && orient2d(c, a, p) >= -eps) empty = false;
      }
      if (!empty) continue;
      const double qual = min_angle(a, b, c);
      if (qual > best_q + 1e-12) {
        best_q = qual;
        best = static_cast<int>(i);
      }
    }
    ROBIN_THROW_IF(best < 0, ErrorCode::MeshFailure, "ear clipping found no valid ear");
    const std::size_t i = static_cast<std::size_t>(best);
    out.push_back({idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]});
    idx.erase(idx.begin() + best);
  }
  ROBIN_THROW_IF(orient2d(v[idx[0]], v[idx[1]], v[idx[2]]) <= eps, ErrorCode::MeshFailure,
                 "ear clipping left a degenerate triangle");
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

}  // namespace detail

/// Coarsest conforming mesh of the polygon: its vertices only, one boundary
/// edge per polygon segment.
inline TriangleMesh coarse_mesh(const PolygonalDomain& domain) {
  const auto& v = domain.vertices();
  std::vector<std::pair<std::array<int, 2>, std::string>> boundary;
  for (std::size_t i = 0; i < v.size(); ++i)
    boundary.push_back({{static_cast<int>(i), static_cast<int>((i + 1) % v.size())}, domain.arc_labels()[i]});
  return TriangleMesh::assemble(v, detail::ear_clip(v), std::move(boundary));
}

/// Uniform red refinement: every triangle is split into four congruent
/// children through its edge midpoints. New nodes are numbered in order of
/// first encounter while sweeping the triangles, so the result is
/// deterministic.
inline TriangleMesh refine(const TriangleMesh& mesh) {
  std::vector<Point> nodes = mesh.nodes();
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = detail::edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(0.5 * (mesh.nodes()[a] + mesh.nodes()[b]));
    mid.emplace(key, id);
    return id;
  };
  std::vector<Triangle> tris;
  tris.reserve(4 * mesh.triangles().size());
  for (const Triangle& t : mesh.triangles()) {
    const int ab = midpoint(t[0], t[1]);
    const int bc = midpoint(t[1], t[2]);
    const int ca = midpoint(t[2], t[0]);
    tris.push_back({t[0], ab, ca});
    tris.push_back({ab, t[1], bc});
    tris.push_back({ca, bc, t[2]});
    tris.push_back({ab, bc, ca});
  }
  std::vector<std::pair<std::array<int, 2>, std::string>> boundary;
  boundary.reserve(2 * mesh.boundary_edges().size());
  for (const auto& e : mesh.boundary_edges()) {
    const int m = mid.at(detail::edge_key(e.nodes[0], e.nodes[1]));
    boundary.push_back({{e.nodes[0], m}, e.label});
    boundary.push_back({{m, e.nodes[1]}, e.label});
  }
  return TriangleMesh::assemble(std::move(nodes), std::move(tris), std::move(boundary));
}

inline TriangleMesh refine(const TriangleMesh& mesh, int levels) {
  TriangleMesh m = mesh;
  for (int i = 0; i < levels; ++i) m = refine(m);
  return m;
}

/// Mesh with h <= h_target: the coarse ear-clipped triangulation of the
/// polygon, red-refined until its largest edge fits. Throws MeshFailure when
/// the required refinement would exceed max_nodes.
inline TriangleMesh mesh_uniform(const PolygonalDomain& domain, double h_target, std::size_t max_nodes = 2'000'000) {
  ROBIN_THROW_IF(!(h_target > 0.0) || !std::isfinite(h_target), ErrorCode::InvalidArgument,
                 "h_target must be positive");
  TriangleMesh m = coarse_mesh(domain);
  const double slack = 1.0 + 1e-12;
  while (m.h() > h_target * slack) {
    // Red refinement roughly quadruples triangles; nodes grow by about the same factor.
    ROBIN_THROW_IF(4 * m.node_count() > max_nodes, ErrorCode::MeshFailure,
                   "h_target " + std::to_string(h_target) + " needs more than " + std::to_string(max_nodes) +
                       " nodes");
    m = refine(m);
  }
  return m;
}

/// A set of boundary edges; represents the arc set omega when nonempty.
struct BoundaryRegion {
  std::vector<int> edge_ids;  // ascending
  double total_length = 0.0;

  [[nodiscard]] bool empty() const { return edge_ids.empty(); }
  [[nodiscard]] bool contains(int e) const { return std::binary_search(edge_ids.begin(), edge_ids.end(), e); }
};

inline BoundaryRegion make_region(const TriangleMesh& mesh, std::vector<int> edge_ids) {
  std::sort(edge_ids.begin(), edge_ids.end());
  edge_ids.erase(std::unique(edge_ids.begin(), edge_ids.end()), edge_ids.end());
  BoundaryRegion r;
  for (int e : edge_ids) {
    ROBIN_THROW_IF(e < 0 || e >= static_cast<int>(mesh.boundary_edges().size()), ErrorCode::InvalidArgument,
                   "boundary edge id out of range");
    r.total_length += mesh.boundary_edges()[e].length;
  }
  r.edge_ids = std::move(edge_ids);
  return r;
}

/// Region of every boundary edge whose label is in `labels`. Throws
/// EmptyRegion when nothing matches.
inline BoundaryRegion boundary_region(const TriangleMesh& mesh, const std::set<std::string>& labels) {
  ROBIN_THROW_IF(labels.empty(), ErrorCode::InvalidArgument, "label set is empty");
  std::vector<int> ids;
  for (std::size_t i = 0; i < mesh.boundary_edges().size(); ++i)
    if (labels.count(mesh.boundary_edges()[i].label)) ids.push_back(static_cast<int>(i));
  ROBIN_THROW_IF(ids.empty(), ErrorCode::EmptyRegion, "no boundary edge carries any of the requested labels");
  return make_region(mesh, std::move(ids));
}

}  // namespace robin
