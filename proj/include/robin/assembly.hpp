#pragma once

// P1 assembly of the Robin form
//
//   a_theta[u, v] = a_0[u, v] + (theta u, v)_{boundary}
//
// into a Hermitian interior matrix S0, a real symmetric boundary matrix
// B_theta and the L2 mass matrix M; plus recovery of the discrete conormal
// derivative on the boundary.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <ostream>
#include <vector>

#include "robin/coeffs.hpp"
#include "robin/error.hpp"
#include "robin/geometry.hpp"

namespace robin {

using SparseC = Eigen::SparseMatrix<Complex>;
using SparseD = Eigen::SparseMatrix<double>;

struct FormMatrices {
  SparseC S0;       // discrete a_0, Hermitian
  SparseD B_theta;  // discrete (theta u, v) on the boundary, symmetric
  SparseD M;        // L2 mass, symmetric positive definite
  int N = 0;

  /// S_theta = S0 + B_theta.
  [[nodiscard]] SparseC S() const { return S0 + SparseC(B_theta.cast<Complex>()); }
};

namespace detail {

struct P1Element {
  std::array<Point, 3> p;
  double area = 0.0;
  std::array<Point, 3> grad;  // constant gradients of the barycentric basis
};

inline P1Element p1_element(const TriangleMesh& mesh, std::size_t t) {
  const Triangle& tri = mesh.triangles()[t];
  P1Element e;
  for (int i = 0; i < 3; ++i) e.p[i] = mesh.nodes()[tri[i]];
  const double det = orient2d(e.p[0], e.p[1], e.p[2]);
  e.area = 0.5 * det;
  for (int i = 0; i < 3; ++i) {
    const Point a = e.p[(i + 1) % 3], b = e.p[(i + 2) % 3];
    e.grad[i] = {(a.y - b.y) / det, (b.x - a.x) / det};
  }
  return e;
}

// Edge-midpoint rule: degree 2, weights area/3.
inline constexpr std::array<std::array<double, 3>, 3> kMidpointBary = {
    {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};

inline void require_finite(bool ok, const char* what) {
  ROBIN_THROW_IF(!ok, ErrorCode::QuadratureFailure, std::string(what) + " evaluated to a non-finite value");
}

template <class Scalar>
Eigen::SparseMatrix<Scalar> from_triplets(int n, const std::vector<Eigen::Triplet<Scalar>>& trip) {
  Eigen::SparseMatrix<Scalar> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

}  // namespace detail

/// Element matrix of a_0 on triangle t, local ordering of the triangle's
/// nodes. Entry (i, j) is a_0[phi_j, phi_i]. The first-order terms enter as
/// C + C^H so the result is Hermitian whenever a2 is.
inline Eigen::Matrix3cd local_a0(const TriangleMesh& mesh, std::size_t t, const EllipticCoefficients& c) {
  const auto el = detail::p1_element(mesh, t);
  Eigen::Matrix3cd K = Eigen::Matrix3cd::Zero(), C = Eigen::Matrix3cd::Zero(), Z = Eigen::Matrix3cd::Zero();
  const double w = el.area / 3.0;
  for (const auto& bary : detail::kMidpointBary) {
    const Point x = bary[0] * el.p[0] + bary[1] * el.p[1] + bary[2] * el.p[2];
    const Eigen::Matrix2cd A = c.a2(x);
    const Eigen::Vector2cd b = c.a1(x);
    const double a = c.a0(x);
    detail::require_finite(A.allFinite(), "a2");
    detail::require_finite(b.allFinite(), "a1");
    detail::require_finite(std::isfinite(a), "a0");
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d gi(el.grad[i].x, el.grad[i].y);
      for (int j = 0; j < 3; ++j) {
        const Eigen::Vector2d gj(el.grad[j].x, el.grad[j].y);
        K(i, j) += w * (gi.transpose().cast<Complex>() * A * gj.cast<Complex>())(0, 0);
        C(i, j) += w * (b(0) * gj(0) + b(1) * gj(1)) * bary[i];
        Z(i, j) += w * a * bary[i] * bary[j];
      }
    }
  }
  return K + C + C.adjoint() + Z;
}

/// Interior form matrix S0[i][j] = a_0[phi_j, phi_i]. Elements are summed in
/// mesh order, so repeated runs give bit-identical matrices.
inline SparseC assemble_a0(const TriangleMesh& mesh, const EllipticCoefficients& c) {
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(9 * mesh.triangles().size());
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const Eigen::Matrix3cd loc = local_a0(mesh, t, c);
    const Triangle& tri = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], loc(i, j));
  }
  return detail::from_triplets(static_cast<int>(mesh.node_count()), trip);
}

/// L2 mass matrix, integrated exactly: (area/12) [[2,1,1],[1,2,1],[1,1,2]].
inline SparseD assemble_mass(const TriangleMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangles().size());
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const double a = mesh.triangle_area(t) / 12.0;
    const Triangle& tri = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], (i == j ? 2.0 : 1.0) * a);
  }
  return detail::from_triplets(static_cast<int>(mesh.node_count()), trip);
}

/// Boundary matrix of (w u, v) for an edge weight w(edge index, t, x),
/// 2-point Gauss per edge.
inline SparseD assemble_boundary_weighted(const TriangleMesh& mesh,
                                          const std::function<double(std::size_t, double, Point)>& weight) {
  const auto rule = quadrature::gauss(2);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * mesh.boundary_edges().size());
  for (std::size_t i = 0; i < mesh.boundary_edges().size(); ++i) {
    const auto& e = mesh.boundary_edges()[i];
    const Point a = mesh.nodes()[e.nodes[0]], b = mesh.nodes()[e.nodes[1]];
    double loc[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = rule.nodes[q];
      const double th = weight(i, e.t0 + s * (e.t1 - e.t0), a + s * (b - a));
      detail::require_finite(std::isfinite(th), "theta");
      const double phi[2] = {1.0 - s, s};
      for (int r = 0; r < 2; ++r)
        for (int k = 0; k < 2; ++k) loc[r][k] += rule.weights[q] * e.length * th * phi[r] * phi[k];
    }
    for (int r = 0; r < 2; ++r)
      for (int k = 0; k < 2; ++k) trip.emplace_back(e.nodes[r], e.nodes[k], loc[r][k]);
  }
  return detail::from_triplets(static_cast<int>(mesh.node_count()), trip);
}

/// B_theta[i][j] = integral over the boundary of theta phi_j phi_i.
/// Throws LabelMissing if theta does not cover every boundary label.
inline SparseD assemble_boundary_mass(const TriangleMesh& mesh, const RobinCoefficient& theta) {
  theta.require_labels(mesh);
  return assemble_boundary_weighted(mesh, [&](std::size_t i, double t, Point x) {
    return theta(mesh.boundary_edges()[i].label, t, x);
  });
}

/// Boundary mass restricted to the edges of a region (theta = 1 there, 0 elsewhere).
inline SparseD assemble_region_mass(const TriangleMesh& mesh, const BoundaryRegion& region) {
  return assemble_boundary_weighted(
      mesh, [&](std::size_t i, double, Point) { return region.contains(static_cast<int>(i)) ? 1.0 : 0.0; });
}

inline FormMatrices assemble_form(const TriangleMesh& mesh, const EllipticCoefficients& c,
                                  const RobinCoefficient& theta) {
  FormMatrices f;
  f.N = static_cast<int>(mesh.node_count());
  f.B_theta = assemble_boundary_mass(mesh, theta);
  f.S0 = assemble_a0(mesh, c);
  f.M = assemble_mass(mesh);
  return f;
}

/// Same interior part and mass, different boundary term.
inline FormMatrices with_boundary(const FormMatrices& base, SparseD B) {
  FormMatrices f = base;
  f.B_theta = std::move(B);
  return f;
}

/// max |S - S^H| / max |S|.
inline double hermitian_defect(const SparseC& S) {
  const SparseC D = S - SparseC(S.adjoint());
  double num = 0.0, den = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SparseC::InnerIterator it(D, k); it; ++it) num = std::max(num, std::abs(it.value()));
  for (int k = 0; k < S.outerSize(); ++k)
    for (SparseC::InnerIterator it(S, k); it; ++it) den = std::max(den, std::abs(it.value()));
  return den > 0.0 ? num / den : num;
}

/// Complex-valued P1 function on the boundary nodes of a mesh.
struct BoundaryFunction {
  std::vector<int> nodes;   // ascending global node indices
  Eigen::VectorXcd values;  // one per entry of `nodes`
};

inline BoundaryFunction trace(const TriangleMesh& mesh, const Eigen::VectorXcd& u) {
  BoundaryFunction f{mesh.boundary_nodes(), Eigen::VectorXcd(mesh.boundary_nodes().size())};
  for (std::size_t i = 0; i < f.nodes.size(); ++i) f.values(static_cast<Eigen::Index>(i)) = u(f.nodes[i]);
  return f;
}

/// L2(boundary) norm of g + w*u where g, u are boundary P1 functions and w
/// a Robin coefficient (w = 0 gives the norm of g); 3-point Gauss per edge.
inline double boundary_l2_norm(const TriangleMesh& mesh, const BoundaryFunction& g,
                               const BoundaryFunction* u = nullptr, const RobinCoefficient* w = nullptr) {
  std::vector<int> local(mesh.node_count(), -1);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) local[g.nodes[i]] = static_cast<int>(i);
  const auto rule = quadrature::gauss(3);
  double sum = 0.0;
  for (const auto& e : mesh.boundary_edges()) {
    const int a = local[e.nodes[0]], b = local[e.nodes[1]];
    ROBIN_THROW_IF(a < 0 || b < 0, ErrorCode::InvalidArgument, "boundary function does not match the mesh");
    const Point pa = mesh.nodes()[e.nodes[0]], pb = mesh.nodes()[e.nodes[1]];
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = rule.nodes[q];
      Complex v = (1.0 - s) * g.values(a) + s * g.values(b);
      if (u && w) {
        const double th = (*w)(e.label, e.t0 + s * (e.t1 - e.t0), pa + s * (pb - pa));
        v += th * ((1.0 - s) * u->values(a) + s * u->values(b));
      }
      sum += rule.weights[q] * e.length * std::norm(v);
    }
  }
  return std::sqrt(sum);
}

enum class ConormalMethod {
  /// Project the element conormal flux nu . (a2 grad u + conj(a1) u) onto
  /// the boundary P1 space.
  boundary_flux,
  /// Solve (g, v) = a_0[u, v] - lambda (u, v) for boundary test functions v.
  /// For a discrete Robin eigenpair this reproduces -theta u exactly.
  variational,
};

/// Discrete conormal derivative of the nodal function u, obtained by solving
/// a system with the boundary mass matrix (theta = 1 weights) on the
/// boundary nodes. `lambda` is used only by ConormalMethod::variational.
inline BoundaryFunction conormal_recover(const TriangleMesh& mesh, const EllipticCoefficients& c,
                                         const Eigen::VectorXcd& u, double lambda,
                                         ConormalMethod method = ConormalMethod::boundary_flux) {
  ROBIN_THROW_IF(u.size() != static_cast<Eigen::Index>(mesh.node_count()), ErrorCode::InvalidArgument,
                 "nodal vector size does not match the mesh");
  const auto& bn = mesh.boundary_nodes();
  const int nb = static_cast<int>(bn.size());
  std::vector<int> local(mesh.node_count(), -1);
  for (int i = 0; i < nb; ++i) local[bn[i]] = i;

  const SparseD B1 = assemble_boundary_weighted(mesh, [](std::size_t, double, Point) { return 1.0; });
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < B1.outerSize(); ++k)
    for (SparseD::InnerIterator it(B1, k); it; ++it)
      if (local[it.row()] >= 0 && local[it.col()] >= 0) trip.emplace_back(local[it.row()], local[it.col()], it.value());
  const SparseD Bb = detail::from_triplets(nb, trip);

  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nb);
  if (method == ConormalMethod::variational) {
    const Eigen::VectorXcd r = assemble_a0(mesh, c) * u - lambda * (assemble_mass(mesh).cast<Complex>() * u);
    for (int i = 0; i < nb; ++i) rhs(i) = r(bn[i]);
  } else {
    const auto rule = quadrature::gauss(3);
    for (const auto& e : mesh.boundary_edges()) {
      const auto el = detail::p1_element(mesh, static_cast<std::size_t>(e.triangle));
      const Triangle& tri = mesh.triangles()[e.triangle];
      Eigen::Vector2cd grad = Eigen::Vector2cd::Zero();
      for (int i = 0; i < 3; ++i) grad += u(tri[i]) * Eigen::Vector2cd(el.grad[i].x, el.grad[i].y);
      const Point pa = mesh.nodes()[e.nodes[0]], pb = mesh.nodes()[e.nodes[1]];
      const Eigen::Vector2cd nu(e.normal.x, e.normal.y);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double s = rule.nodes[q];
        const Point x = pa + s * (pb - pa);
        const Complex us = (1.0 - s) * u(e.nodes[0]) + s * u(e.nodes[1]);
        // Eigen's dot conjugates its left operand: a1.dot(nu) = sum conj(a_j) nu_j.
        const Complex flux = nu.dot(c.a2(x) * grad) + c.a1(x).dot(nu) * us;
        const double w = rule.weights[q] * e.length;
        rhs(local[e.nodes[0]]) += w * (1.0 - s) * flux;
        rhs(local[e.nodes[1]]) += w * s * flux;
      }
    }
  }

  Eigen::SimplicialLDLT<SparseD> ldlt(Bb);
  ROBIN_THROW_IF(ldlt.info() != Eigen::Success, ErrorCode::SingularBoundaryMass, "boundary mass factorization failed");
  const Eigen::VectorXd gr = ldlt.solve(rhs.real());
  const Eigen::VectorXd gi = ldlt.solve(rhs.imag());
  BoundaryFunction g{bn, Eigen::VectorXcd(nb)};
  g.values.real() = gr;
  g.values.imag() = gi;
  return g;
}

/// Coordinate text export: header `%%matrix hermitian N N nnz`, then
/// `i j re im` per stored entry (0-based, column-major order).
inline void write_matrix(std::ostream& os, const SparseC& A) {
  os << "%%matrix hermitian " << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n'
     << std::setprecision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseC::InnerIterator it(A, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

}  // namespace robin
