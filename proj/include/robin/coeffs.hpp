#pragma once

// Coefficients of the elliptic expression
//
//   L u = -sum_jk d_j(a_jk d_k u) + sum_j (a_j d_j u - d_j(conj(a_j) u)) + a u
//
// and the real Robin coefficient theta, together with sample-based checkers
// for Hermitian symmetry, uniform ellipticity and the ordering theta1 <= theta2.
//
// Evaluators must be pure: assembly may call them from several threads.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robin/error.hpp"
#include "robin/geometry.hpp"

namespace robin {

using Complex = std::complex<double>;

struct EllipticCoefficients {
  std::function<Eigen::Matrix2cd(Point)> a2;  // a_jk
  std::function<Eigen::Vector2cd(Point)> a1;  // a_j
  std::function<double(Point)> a0;            // potential a
  double claimed_E = 1.0;

  /// -Laplacian: a2 = I, a1 = 0, a0 = 0.
  static EllipticCoefficients laplacian() {
    return {[](Point) -> Eigen::Matrix2cd { return Eigen::Matrix2cd::Identity(); },
            [](Point) -> Eigen::Vector2cd { return Eigen::Vector2cd::Zero(); }, [](Point) { return 0.0; }, 1.0};
  }
};

/// Robin coefficient given per arc label as a function of the arclength
/// parameter t in [0, 1] (and, for convenience, the physical point).
class RobinCoefficient {
 public:
  using ArcFunction = std::function<double(double t, Point x)>;

  RobinCoefficient() = default;

  static RobinCoefficient constant(double c) {
    RobinCoefficient r;
    r.fallback_ = [c](double, Point) { return c; };
    r.bound_ = std::abs(c);
    return r;
  }

  /// Piecewise constant by label; labels not listed take `otherwise` when
  /// given, and are missing otherwise.
  static RobinCoefficient piecewise(const std::map<std::string, double>& values,
                                    std::optional<double> otherwise = std::nullopt) {
    RobinCoefficient r;
    for (const auto& [label, v] : values) r.set(label, [v](double, Point) { return v; }, std::abs(v));
    if (otherwise) r.set_default([c = *otherwise](double, Point) { return c; }, std::abs(*otherwise));
    return r;
  }

  RobinCoefficient& set(const std::string& label, ArcFunction f, double bound) {
    arcs_[label] = std::move(f);
    bound_ = std::max(bound_, bound);
    return *this;
  }

  RobinCoefficient& set_default(ArcFunction f, double bound) {
    fallback_ = std::move(f);
    bound_ = std::max(bound_, bound);
    return *this;
  }

  [[nodiscard]] bool defines(const std::string& label) const {
    return static_cast<bool>(fallback_) || arcs_.count(label) > 0;
  }

  [[nodiscard]] double operator()(const std::string& label, double t, Point x) const {
    auto it = arcs_.find(label);
    if (it != arcs_.end()) return it->second(t, x);
    ROBIN_THROW_IF(!fallback_, ErrorCode::LabelMissing, "Robin coefficient has no value on arc '" + label + "'");
    return fallback_(t, x);
  }

  /// Declared sup-norm bound.
  [[nodiscard]] double bound() const { return bound_; }

  /// Throws LabelMissing if some boundary label of the mesh is not covered.
  void require_labels(const TriangleMesh& mesh) const {
    for (const auto& l : mesh.labels())
      ROBIN_THROW_IF(!defines(l), ErrorCode::LabelMissing, "Robin coefficient has no value on arc '" + l + "'");
  }

 private:
  std::map<std::string, ArcFunction> arcs_;
  ArcFunction fallback_;
  double bound_ = 0.0;
};

namespace quadrature {

struct Rule1D {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

/// Gauss-Legendre rule with `order` points mapped to [0, 1] (1 to 5 points).
inline Rule1D gauss(int order) {
  static const std::vector<std::vector<std::pair<double, double>>> table = {
      {{0.0, 2.0}},
      {{-0.57735026918962576, 1.0}, {0.57735026918962576, 1.0}},
      {{-0.77459666924148338, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {0.77459666924148338, 5.0 / 9.0}},
      {{-0.86113631159405258, 0.34785484513745386},
       {-0.33998104358485626, 0.65214515486254614},
       {0.33998104358485626, 0.65214515486254614},
       {0.86113631159405258, 0.34785484513745386}},
      {{-0.90617984593866399, 0.23692688505618909},
       {-0.53846931010568309, 0.47862867049936647},
       {0.0, 0.56888888888888889},
       {0.53846931010568309, 0.47862867049936647},
       {0.90617984593866399, 0.23692688505618909}}};
  ROBIN_THROW_IF(order < 1 || order > 5, ErrorCode::InvalidArgument, "Gauss order must be in [1, 5]");
  Rule1D r;
  for (const auto& [x, w] : table[static_cast<std::size_t>(order - 1)]) {
    r.nodes.push_back(0.5 * (x + 1.0));
    r.weights.push_back(0.5 * w);
  }
  return r;
}

}  // namespace quadrature

struct HermitianReport {
  bool pass = false;
  double worst = 0.0;
};

inline HermitianReport check_hermitian(const EllipticCoefficients& c, std::span<const Point> samples, double tol) {
  HermitianReport r;
  for (const Point& x : samples) {
    const Eigen::Matrix2cd a = c.a2(x);
    r.worst = std::max(r.worst, (a - a.adjoint()).cwiseAbs().maxCoeff());
  }
  r.pass = r.worst <= tol;
  return r;
}

struct EllipticityReport {
  double estimate = 0.0;      // min over samples of lambda_min(sym Re a2)
  double rayleigh_min = 0.0;  // min over samples x directions of xi^T Re a2 xi
  bool pass = false;          // estimate >= claimed_E
};

/// Smallest eigenvalue of the symmetrized real part of a2 over the samples.
/// Throws NotElliptic when that estimate is not positive.
inline EllipticityReport check_ellipticity(const EllipticCoefficients& c, std::span<const Point> samples,
                                           std::span<const Point> directions) {
  ROBIN_THROW_IF(samples.empty() || directions.empty(), ErrorCode::InvalidArgument,
                 "ellipticity check needs samples and directions");
  EllipticityReport r;
  r.estimate = std::numeric_limits<double>::infinity();
  r.rayleigh_min = std::numeric_limits<double>::infinity();
  for (const Point& x : samples) {
    const Eigen::Matrix2d re = c.a2(x).real();
    const double p = re(0, 0), q = re(1, 1), s = 0.5 * (re(0, 1) + re(1, 0));
    const double lmin = 0.5 * (p + q) - std::sqrt(0.25 * (p - q) * (p - q) + s * s);
    r.estimate = std::min(r.estimate, lmin);
    for (const Point& d : directions) {
      const double n2 = dot(d, d);
      ROBIN_THROW_IF(!(n2 > 0.0), ErrorCode::InvalidArgument, "zero direction");
      r.rayleigh_min = std::min(r.rayleigh_min, (p * d.x * d.x + 2.0 * s * d.x * d.y + q * d.y * d.y) / n2);
    }
  }
  ROBIN_THROW_IF(!(r.estimate > 0.0), ErrorCode::NotElliptic,
                 "smallest eigenvalue of Re(a2) is " + std::to_string(r.estimate));
  r.pass = r.estimate >= c.claimed_E;
  return r;
}

/// Largest absolute value of any coefficient entry over the samples;
/// throws QuadratureFailure on a non-finite value.
inline double check_bounded(const EllipticCoefficients& c, std::span<const Point> samples) {
  double m = 0.0;
  for (const Point& x : samples) {
    const double v = std::max({c.a2(x).cwiseAbs().maxCoeff(), c.a1(x).cwiseAbs().maxCoeff(), std::abs(c.a0(x))});
    ROBIN_THROW_IF(!std::isfinite(v), ErrorCode::QuadratureFailure, "coefficient is not finite");
    m = std::max(m, v);
  }
  return m;
}

struct ComparisonReport {
  bool leq_everywhere = false;
  BoundaryRegion strict_edges;  // may be empty
  double max_violation = 0.0;   // max of (t1 - t2)^+ over quadrature nodes
};

/// Compares two Robin coefficients at the Gauss nodes of every boundary edge.
inline ComparisonReport robin_compare(const RobinCoefficient& t1, const RobinCoefficient& t2,
                                      const TriangleMesh& mesh, int quad_order = 3) {
  t1.require_labels(mesh);
  t2.require_labels(mesh);
  const auto rule = quadrature::gauss(quad_order);
  ComparisonReport r;
  std::vector<int> strict;
  for (std::size_t i = 0; i < mesh.boundary_edges().size(); ++i) {
    const auto& e = mesh.boundary_edges()[i];
    const Point a = mesh.nodes()[e.nodes[0]], b = mesh.nodes()[e.nodes[1]];
    double min_gap = std::numeric_limits<double>::infinity();
    for (double s : rule.nodes) {
      const double t = e.t0 + s * (e.t1 - e.t0);
      const Point x = a + s * (b - a);
      const double gap = t2(e.label, t, x) - t1(e.label, t, x);
      min_gap = std::min(min_gap, gap);
      r.max_violation = std::max(r.max_violation, -gap);
    }
    if (min_gap > 0.0) strict.push_back(static_cast<int>(i));
  }
  r.leq_everywhere = r.max_violation <= 1e-12;
  r.strict_edges = make_region(mesh, std::move(strict));
  return r;
}

/// Deterministic sample points: the vertices and centroids of the mesh.
inline std::vector<Point> sample_points(const TriangleMesh& mesh) {
  std::vector<Point> s = mesh.nodes();
  for (const auto& t : mesh.triangles())
    s.push_back((1.0 / 3.0) * (mesh.nodes()[t[0]] + mesh.nodes()[t[1]] + mesh.nodes()[t[2]]));
  return s;
}

inline std::vector<Point> unit_directions(int count) {
  std::vector<Point> d;
  for (int i = 0; i < count; ++i) {
    const double a = std::numbers::pi * i / count;
    d.push_back({std::cos(a), std::sin(a)});
  }
  return d;
}

}  // namespace robin
