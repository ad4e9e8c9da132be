#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles/dense_oracle.hpp"
#include "robin/assembly.hpp"
#include "robin/mesh_io.hpp"
#include "robin/spectra.hpp"

using namespace robin;

namespace {

TriangleMesh reference_triangle() {
  return TriangleMesh::assemble({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {{{0, 1}, "a"}, {{1, 2}, "a"}, {{2, 0}, "a"}});
}

Eigen::VectorXcd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

EllipticCoefficients variable_coefficients() {
  EllipticCoefficients c;
  c.a2 = [](Point p) {
    Eigen::Matrix2cd m;
    const Complex off(0.3 * p.x * p.y, 0.2 * (p.x - p.y));
    m << 1.5 + p.x * p.x, off, std::conj(off), 1.0 + 0.5 * p.y;
    return m;
  };
  c.a1 = [](Point p) { return Eigen::Vector2cd(Complex(0.5, p.y), Complex(-p.x, 1.0)); };
  c.a0 = [](Point p) { return 1.0 + std::sin(p.x + 2.0 * p.y); };
  c.claimed_E = 0.5;
  return c;
}

// a_theta[u, v] by direct quadrature of the integrand: edge-midpoint rule on
// triangles and 2-point Gauss on boundary edges.
Complex form_by_quadrature(const TriangleMesh& m, const EllipticCoefficients& c, const RobinCoefficient& theta,
                           const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  Complex total = 0.0;
  for (const auto& t : m.triangles()) {
    const Point p0 = m.nodes()[t[0]], p1 = m.nodes()[t[1]], p2 = m.nodes()[t[2]];
    Eigen::Matrix2d J;
    J << p1.x - p0.x, p1.y - p0.y, p2.x - p0.x, p2.y - p0.y;
    const double area = 0.5 * std::abs(J.determinant());
    auto grad = [&](const Eigen::VectorXcd& w) {
      const Eigen::Vector2cd rhs(w(t[1]) - w(t[0]), w(t[2]) - w(t[0]));
      return Eigen::Vector2cd(J.cast<Complex>().inverse() * rhs);
    };
    const Eigen::Vector2cd gu = grad(u), gv = grad(v);
    const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (const auto& pr : pairs) {
      const Point x = 0.5 * (m.nodes()[t[pr[0]]] + m.nodes()[t[pr[1]]]);
      const Complex um = 0.5 * (u(t[pr[0]]) + u(t[pr[1]])), vm = 0.5 * (v(t[pr[0]]) + v(t[pr[1]]));
      const Eigen::Matrix2cd A = c.a2(x);
      const Eigen::Vector2cd b = c.a1(x);
      Complex f = 0.0;
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) f += A(j, k) * gu(k) * std::conj(gv(j));
        f += b(j) * gu(j) * std::conj(vm) + std::conj(b(j)) * um * std::conj(gv(j));
      }
      f += c.a0(x) * um * std::conj(vm);
      total += area / 3.0 * f;
    }
  }
  const double g = 0.5 / std::sqrt(3.0);
  for (const auto& e : m.boundary_edges()) {
    const Point a = m.nodes()[e.nodes[0]], b = m.nodes()[e.nodes[1]];
    for (double s : {0.5 - g, 0.5 + g}) {
      const Point x = a + s * (b - a);
      const Complex us = (1 - s) * u(e.nodes[0]) + s * u(e.nodes[1]);
      const Complex vs = (1 - s) * v(e.nodes[0]) + s * v(e.nodes[1]);
      total += 0.5 * e.length * theta(e.label, e.t0 + s * (e.t1 - e.t0), x) * us * std::conj(vs);
    }
  }
  return total;
}

double max_abs(const SparseC& A) { return Eigen::MatrixXcd(A).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(LocalMatrices, ReferenceStiffness) {
  const Eigen::MatrixXd K = Eigen::MatrixXd(SparseD(assemble_a0(reference_triangle(), EllipticCoefficients::laplacian()).real()));
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  expected *= 0.5;
  EXPECT_LE((K - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LocalMatrices, ReferenceMass) {
  const Eigen::MatrixXd M = Eigen::MatrixXd(assemble_mass(reference_triangle()));
  Eigen::Matrix3d expected;
  expected << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  expected *= 0.5 / 12.0;
  EXPECT_LE((M - expected).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(LocalMatrices, BoundaryEdge) {
  const auto m = TriangleMesh::assemble({{0, 0}, {3, 0}, {0, 1}}, {{0, 1, 2}},
                                        {{{0, 1}, "long"}, {{1, 2}, "x"}, {{2, 0}, "x"}});
  const Eigen::MatrixXd B =
      Eigen::MatrixXd(assemble_boundary_mass(m, RobinCoefficient::piecewise({{"long", 1.0}, {"x", 0.0}})));
  EXPECT_NEAR(B(0, 0), 3.0 / 6.0 * 2.0, 1e-15);
  EXPECT_NEAR(B(0, 1), 3.0 / 6.0, 1e-15);
  EXPECT_NEAR(B(1, 1), 3.0 / 6.0 * 2.0, 1e-15);
  EXPECT_EQ(B(2, 2), 0.0);
}

TEST(Boundary, ZeroNegationAndScaling) {
  const auto m = refine(coarse_mesh(lshape()), 2);
  const SparseD B1 = assemble_boundary_mass(m, RobinCoefficient::constant(1.0));
  EXPECT_EQ(assemble_boundary_mass(m, RobinCoefficient::constant(0.0)).norm(), 0.0);
  EXPECT_EQ(SparseD(assemble_boundary_mass(m, RobinCoefficient::constant(-1.0)) + B1).norm(), 0.0);
  RobinCoefficient t, t2;
  t.set_default([](double s, Point) { return 1.0 + std::cos(3.0 * s); }, 2.0);
  t2.set_default([](double s, Point) { return 2.0 * (1.0 + std::cos(3.0 * s)); }, 4.0);
  EXPECT_EQ(SparseD(assemble_boundary_mass(m, t2) - 2.0 * assemble_boundary_mass(m, t)).norm(), 0.0);
}

TEST(Boundary, InteriorRowsVanish) {
  const auto m = refine(coarse_mesh(unit_square()), 3);
  const Eigen::MatrixXd B = Eigen::MatrixXd(assemble_boundary_mass(m, RobinCoefficient::constant(2.0)));
  const auto& bn = m.boundary_nodes();
  for (int i = 0; i < static_cast<int>(m.node_count()); ++i)
    if (!std::binary_search(bn.begin(), bn.end(), i)) EXPECT_EQ(B.row(i).cwiseAbs().sum(), 0.0);
}

TEST(Boundary, OrderedCoefficientsGiveSemidefiniteDifference) {
  const auto m = refine(coarse_mesh(unit_square()), 2);
  RobinCoefficient lo, hi;
  lo.set_default([](double s, Point) { return std::sin(4.0 * s); }, 1.0);
  hi.set_default([](double s, Point) { return std::sin(4.0 * s) + s * s; }, 2.0);
  const Eigen::MatrixXcd D = Eigen::MatrixXd(assemble_boundary_mass(m, hi) - assemble_boundary_mass(m, lo)).cast<Complex>();
  const auto ev = oracle::eigenvalues(oracle::tridiagonalize(D));
  EXPECT_GE(ev.front(), -1e-12);
}

TEST(Mass, PartitionOfUnity) {
  for (const auto& d : {unit_square(), lshape()}) {
    auto m = coarse_mesh(d);
    for (int l = 0; l < 4; ++l) {
      const SparseD M = assemble_mass(m);
      const Eigen::VectorXd one = Eigen::VectorXd::Ones(M.rows());
      EXPECT_NEAR(one.dot(M * one), d.area(), 1e-10);
      m = refine(m);
    }
  }
}

TEST(Interior, PotentialAddsMass) {
  const auto m = refine(coarse_mesh(lshape()), 2);
  auto c = EllipticCoefficients::laplacian();
  c.a0 = [](Point) { return 1.0; };
  const SparseC diff = assemble_a0(m, c) - assemble_a0(m, EllipticCoefficients::laplacian()) -
                       assemble_mass(m).cast<Complex>();
  EXPECT_LE(max_abs(diff), 1e-15);
}

TEST(Interior, ImaginaryDriftIsHermitian) {
  const auto m = refine(coarse_mesh(unit_square()), 3);
  auto c = EllipticCoefficients::laplacian();
  c.a1 = [](Point) { return Eigen::Vector2cd(0.0, Complex(0, 1)); };
  const SparseC S = assemble_a0(m, c);
  EXPECT_GT(Eigen::MatrixXcd(S).imag().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(hermitian_defect(S), 1e-15);
}

TEST(Interior, FormMatchesDirectQuadrature) {
  std::mt19937_64 rng(7);
  const auto c = variable_coefficients();
  RobinCoefficient theta;
  theta.set_default([](double s, Point) { return 0.5 + s; }, 1.5);
  for (const auto& mesh : {refine(coarse_mesh(unit_square()), 2), refine(coarse_mesh(lshape()), 1)}) {
    const FormMatrices F = assemble_form(mesh, c, theta);
    const SparseC S = F.S();
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXcd u = random_vector(F.N, rng), v = random_vector(F.N, rng);
      const Complex lib = v.dot(S * u);
      const Complex ref = form_by_quadrature(mesh, c, theta, u, v);
      EXPECT_LE(std::abs(lib - ref), 1e-10 * std::abs(ref));
    }
  }
}

TEST(Interior, NonFiniteCoefficientThrows) {
  auto c = EllipticCoefficients::laplacian();
  c.a0 = [](Point) { return std::nan(""); };
  try {
    assemble_a0(coarse_mesh(unit_square()), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QuadratureFailure);
  }
}

TEST(Form, NeumannHasNoBoundaryTerm) {
  const auto m = refine(coarse_mesh(unit_square()), 2);
  const auto F = assemble_form(m, EllipticCoefficients::laplacian(), RobinCoefficient::constant(0.0));
  EXPECT_EQ(SparseC(F.S() - F.S0).norm(), 0.0);
}

TEST(Form, HermitianForVariableCoefficients) {
  const auto m = refine(coarse_mesh(lshape()), 3);
  RobinCoefficient theta = RobinCoefficient::piecewise({{"inner_h", 2.0}}, -0.5);
  const auto F = assemble_form(m, variable_coefficients(), theta);
  EXPECT_LE(hermitian_defect(F.S()), 1e-12);
}

TEST(Form, LinearInEachCoefficient) {
  const auto m = refine(coarse_mesh(unit_square()), 2);
  auto c = variable_coefficients();
  auto c2 = c;
  c2.a2 = [&c](Point p) { return Eigen::Matrix2cd(2.0 * c.a2(p)); };
  c2.a1 = [&c](Point p) { return Eigen::Vector2cd(2.0 * c.a1(p)); };
  c2.a0 = [&c](Point p) { return 2.0 * c.a0(p); };
  const SparseC S = assemble_a0(m, c), S2 = assemble_a0(m, c2);
  EXPECT_LE(max_abs(S2 - 2.0 * S), 1e-14 * max_abs(S));
}

TEST(Form, DeterministicAndRoundTripStable) {
  const auto m = refine(coarse_mesh(lshape()), 3);
  const auto theta = RobinCoefficient::piecewise({{"inner_h", 1.0}}, 0.25);
  const auto c = variable_coefficients();
  const FormMatrices A = assemble_form(m, c, theta), B = assemble_form(m, c, theta);
  EXPECT_EQ(SparseC(A.S() - B.S()).norm(), 0.0);
  std::stringstream ss;
  write_mesh(ss, m);
  const FormMatrices C = assemble_form(read_mesh(ss), c, theta);
  EXPECT_EQ(SparseC(A.S() - C.S()).norm(), 0.0);
  EXPECT_EQ(SparseD(A.M - C.M).norm(), 0.0);
}

TEST(Conormal, ConstantHasZeroConormal) {
  const auto m = refine(coarse_mesh(unit_square()), 2);
  const Eigen::VectorXcd one = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(m.node_count()));
  for (auto method : {ConormalMethod::boundary_flux, ConormalMethod::variational}) {
    const auto g = conormal_recover(m, EllipticCoefficients::laplacian(), one, 0.0, method);
    EXPECT_LE(g.values.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Conormal, NeumannResidualDecreases) {
  const auto c = EllipticCoefficients::laplacian();
  double prev = std::numeric_limits<double>::infinity();
  for (int level = 3; level <= 5; ++level) {
    const auto m = refine(coarse_mesh(unit_square()), level);
    const auto F = assemble_form(m, c, RobinCoefficient::constant(0.0));
    const Spectrum s = solve_pencil(F, 4);
    const Eigen::VectorXcd u = s.eigenvectors().col(1);
    const double r = boundary_l2_norm(m, conormal_recover(m, c, u, s[1]));
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Conormal, VariationalRecoveryIsExactForDiscreteEigenpairs) {
  // The duality-based recovery reproduces -theta u on the boundary up to
  // solver accuracy; the flux recovery carries the discretization error.
  const auto c = EllipticCoefficients::laplacian();
  const auto theta = RobinCoefficient::constant(1.0);
  const auto m = refine(coarse_mesh(unit_square()), 3);
  const Spectrum s = solve_pencil(assemble_form(m, c, theta), 3);
  const Eigen::VectorXcd u = s.eigenvectors().col(2);
  const auto tr = trace(m, u);
  const double variational = boundary_l2_norm(m, conormal_recover(m, c, u, s[2], ConormalMethod::variational), &tr, &theta);
  const double flux = boundary_l2_norm(m, conormal_recover(m, c, u, s[2], ConormalMethod::boundary_flux), &tr, &theta);
  EXPECT_LE(variational, 1e-8);
  EXPECT_GT(flux, 1e-3);
}

TEST(Export, MatrixHeaderAndEntries) {
  const auto m = coarse_mesh(unit_square());
  const SparseC S = assemble_form(m, EllipticCoefficients::laplacian(), RobinCoefficient::constant(1.0)).S();
  std::stringstream ss;
  write_matrix(ss, S);
  std::string tag, kind;
  long n1, n2, nnz;
  ss >> tag >> kind >> n1 >> n2 >> nnz;
  EXPECT_EQ(tag, "%%matrix");
  EXPECT_EQ(kind, "hermitian");
  EXPECT_EQ(n1, 4);
  EXPECT_EQ(nnz, S.nonZeros());
  Eigen::MatrixXcd back = Eigen::MatrixXcd::Zero(4, 4);
  int i, j;
  double re, im;
  while (ss >> i >> j >> re >> im) back(i, j) = Complex(re, im);
  EXPECT_EQ((back - Eigen::MatrixXcd(S)).cwiseAbs().maxCoeff(), 0.0);
}
