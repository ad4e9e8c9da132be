#pragma once

// Verification harness for Robin eigenvalue monotonicity: for theta1 <= theta2
// the k-th eigenvalues satisfy lambda_k(theta1) <= lambda_k(theta2), strictly
// when theta1 < theta2 on a nonempty boundary arc omega. Strictness follows
// from the counting-function inequality
//
//   N_1(mu) >= N_2(mu) + dim ker(A_1 - mu),
//
// which in turn rests on no eigenfunction of A_1 satisfying the theta2
// boundary condition; its observable trace is that eigenfunctions do not
// vanish on omega.

#include <cmath>
#include <future>
#include <algorithm>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "robin/assembly.hpp"
#include "robin/coeffs.hpp"
#include "robin/error.hpp"
#include "robin/geometry.hpp"
#include "robin/spectra.hpp"

namespace robin {

struct GapRecord {
  int k = 0;  // 1-based
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gap = 0.0;
  bool certified = false;  // gap > strict_tol * (1 + |lambda2|)
};

struct MonotonicityReport {
  std::vector<GapRecord> records;
  bool weak_pass = false;    // every gap >= -1e-9
  bool strict_pass = false;  // every gap certified
  double strict_tol = 1e-8;
  double mesh_h = 0.0;
  int k_max = 0;
  ComparisonReport comparison;
  Spectrum spectrum1;  // first min(N, k_max + kExtraPairs) pairs
  Spectrum spectrum2;
};

inline constexpr double kWeakTol = 1e-9;
inline constexpr int kExtraPairs = 10;

/// Solves both Robin pencils on one mesh (shared S0 and M) and compares the
/// k_max smallest eigenvalues. Throws ComparisonFailed when theta1 <= theta2
/// does not hold at the boundary quadrature nodes.
inline MonotonicityReport monotonicity_report(const TriangleMesh& mesh, const EllipticCoefficients& c,
                                              const RobinCoefficient& theta1, const RobinCoefficient& theta2,
                                              int k_max, double strict_tol = 1e-8, double cluster_tol = 1e-6) {
  ROBIN_THROW_IF(k_max < 1, ErrorCode::InvalidArgument, "k_max must be at least 1");
  MonotonicityReport r;
  r.comparison = robin_compare(theta1, theta2, mesh);
  ROBIN_THROW_IF(!r.comparison.leq_everywhere, ErrorCode::ComparisonFailed,
                 "theta1 exceeds theta2 by " + std::to_string(r.comparison.max_violation));
  const FormMatrices F1 = assemble_form(mesh, c, theta1);
  const FormMatrices F2 = with_boundary(F1, assemble_boundary_mass(mesh, theta2));
  ROBIN_THROW_IF(k_max > F1.N, ErrorCode::InsufficientSpectrum,
                 "k_max exceeds the " + std::to_string(F1.N) + " degrees of freedom");
  // A few extra eigenpairs keep counting queries up to lambda_{k_max} in range.
  const int k_solve = std::min(F1.N, k_max + kExtraPairs);
  auto job = std::async(std::launch::async, [&] { return solve_pencil(F2, k_solve, cluster_tol); });
  r.spectrum1 = solve_pencil(F1, k_solve, cluster_tol);
  r.spectrum2 = job.get();
  r.strict_tol = strict_tol;
  r.mesh_h = mesh.h();
  r.k_max = k_max;
  r.weak_pass = true;
  r.strict_pass = true;
  for (int k = 0; k < k_max; ++k) {
    GapRecord g;
    g.k = k + 1;
    g.lambda1 = r.spectrum1[static_cast<std::size_t>(k)];
    g.lambda2 = r.spectrum2[static_cast<std::size_t>(k)];
    g.gap = g.lambda2 - g.lambda1;
    g.certified = g.gap > strict_tol * (1.0 + std::abs(g.lambda2));
    r.weak_pass = r.weak_pass && g.gap >= -kWeakTol;
    r.strict_pass = r.strict_pass && g.certified;
    r.records.push_back(g);
  }
  return r;
}

struct WeakMonotonicityResult {
  bool pass = false;
  double worst = 0.0;  // max over k of lambda_k(F1) - lambda_k(F2)
};

/// lambda_k(F1) <= lambda_k(F2) + 1e-9 for k <= k_max, where F1 and F2 must
/// share S0 and M exactly (MismatchedMeshes otherwise).
inline WeakMonotonicityResult weak_monotonicity_exact(const FormMatrices& F1, const FormMatrices& F2, int k_max) {
  auto same = [](const auto& A, const auto& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) return false;
    using Sp = std::decay_t<decltype(A)>;
    const Sp D = A - B;
    for (int k = 0; k < D.outerSize(); ++k)
      for (typename Sp::InnerIterator it(D, k); it; ++it)
        if (it.value() != typename Sp::Scalar(0)) return false;
    return true;
  };
  ROBIN_THROW_IF(F1.N != F2.N || !same(F1.S0, F2.S0) || !same(F1.M, F2.M), ErrorCode::MismatchedMeshes,
                 "pencils do not share the interior form and mass matrices");
  const Spectrum s1 = solve_pencil(F1, k_max), s2 = solve_pencil(F2, k_max);
  WeakMonotonicityResult r;
  r.worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < k_max; ++k)
    r.worst = std::max(r.worst, s1[static_cast<std::size_t>(k)] - s2[static_cast<std::size_t>(k)]);
  r.pass = r.worst <= kWeakTol;
  return r;
}

struct NidResult {
  bool pass = false;
  int n1 = 0;       // N_1(mu)
  int n2 = 0;       // N_2(mu)
  int dim_ker = 0;  // dim ker(A_1 - mu), by cluster tolerance
  double mu = 0.0;  // mu after snapping to the spectrum of A_2
};

/// Checks N_1(mu) >= N_2(mu) + dim ker(A_1 - mu). When mu lies within the
/// cluster tolerance of an eigenvalue of spec2 it is snapped onto it.
inline NidResult nid_check(const Spectrum& spec1, const Spectrum& spec2, double mu) {
  double best = std::numeric_limits<double>::infinity();
  for (double l : spec2.eigenvalues()) {
    if (std::abs(l - mu) <= spec2.tol_at(mu) && std::abs(l - mu) < std::abs(best - mu)) best = l;
  }
  NidResult r;
  r.mu = std::isfinite(best) ? best : mu;
  r.n1 = counting(spec1, r.mu);
  r.n2 = counting(spec2, r.mu);
  r.dim_ker = static_cast<int>(eigenspace_indices(spec1, r.mu).size());
  r.pass = r.n1 >= r.n2 + r.dim_ker;
  return r;
}

struct TraceRecord {
  int k = 0;  // 1-based
  double norm = 0.0;
  bool certified = false;  // norm > tol; otherwise strictness at this k is not numerically certified
};

/// L2(omega) norms of the traces of the first k_max eigenvectors of spec.
inline std::vector<TraceRecord> trace_certificate(const Spectrum& spec, const TriangleMesh& mesh,
                                                  const BoundaryRegion& omega, int k_max, double tol = 1e-8) {
  ROBIN_THROW_IF(omega.empty(), ErrorCode::EmptyRegion, "omega is empty");
  ROBIN_THROW_IF(k_max < 1 || static_cast<std::size_t>(k_max) > spec.size() ||
                     spec.eigenvectors().cols() < k_max,
                 ErrorCode::InsufficientSpectrum, "spectrum holds fewer than k_max eigenvectors");
  ROBIN_THROW_IF(spec.eigenvectors().rows() != static_cast<Eigen::Index>(mesh.node_count()),
                 ErrorCode::MismatchedMeshes, "eigenvectors do not live on this mesh");
  const SparseC B = assemble_region_mass(mesh, omega).cast<Complex>();
  std::vector<TraceRecord> out;
  for (int k = 0; k < k_max; ++k) {
    const Eigen::VectorXcd x = spec.eigenvectors().col(k);
    const double n = std::sqrt(std::max(0.0, std::real(x.dot(B * x))));
    out.push_back({k + 1, n, n > tol});
  }
  return out;
}

struct EigencurveTable {
  std::vector<double> t_grid;
  std::vector<std::vector<double>> values;  // values[k][i] = lambda_{k+1}(t_grid[i])
  bool monotone = false;                    // every row nondecreasing within 1e-9
};

/// Eigenvalues along theta_t = (1 - t) theta1 + t theta2. The boundary term is
/// linear in theta, so B_t is formed from the two endpoint matrices.
inline EigencurveTable eigencurve_sweep(const TriangleMesh& mesh, const EllipticCoefficients& c,
                                        const RobinCoefficient& theta1, const RobinCoefficient& theta2,
                                        const std::vector<double>& t_grid, int k_max) {
  ROBIN_THROW_IF(t_grid.empty(), ErrorCode::InvalidArgument, "t_grid is empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    ROBIN_THROW_IF(!(t_grid[i] >= 0.0 && t_grid[i] <= 1.0), ErrorCode::InvalidArgument, "t_grid must lie in [0, 1]");
    ROBIN_THROW_IF(i > 0 && !(t_grid[i] > t_grid[i - 1]), ErrorCode::InvalidArgument, "t_grid must be ascending");
  }
  const auto cmp = robin_compare(theta1, theta2, mesh);
  ROBIN_THROW_IF(!cmp.leq_everywhere, ErrorCode::ComparisonFailed,
                 "theta1 exceeds theta2 by " + std::to_string(cmp.max_violation));
  const FormMatrices F1 = assemble_form(mesh, c, theta1);
  const SparseD B2 = assemble_boundary_mass(mesh, theta2);
  EigencurveTable table;
  table.t_grid = t_grid;
  table.values.assign(static_cast<std::size_t>(k_max), {});
  // Pencils are independent; results are collected in t order.
  std::vector<std::future<Spectrum>> jobs;
  for (double t : t_grid)
    jobs.push_back(std::async(std::launch::async, [&F1, &B2, t, k_max] {
      const SparseD Bt = (1.0 - t) * F1.B_theta + t * B2;
      return solve_pencil(with_boundary(F1, Bt), k_max);
    }));
  for (auto& job : jobs) {
    const Spectrum s = job.get();
    for (int k = 0; k < k_max; ++k) table.values[static_cast<std::size_t>(k)].push_back(s[static_cast<std::size_t>(k)]);
  }
  table.monotone = true;
  for (const auto& row : table.values)
    for (std::size_t i = 1; i < row.size(); ++i) table.monotone = table.monotone && row[i] >= row[i - 1] - kWeakTol;
  return table;
}

struct RichardsonResult {
  double estimate = 0.0;
  double order = 0.0;
};

/// Three-level Richardson extrapolation from the last three values of a
/// sequence computed on meshes with h halving each level. Throws
/// NonConvergent when the difference ratio falls outside (1, 8).
inline RichardsonResult richardson_extrapolate(const std::vector<double>& values) {
  ROBIN_THROW_IF(values.size() < 3, ErrorCode::InvalidArgument, "need at least three mesh levels");
  const std::size_t n = values.size();
  const double v0 = values[n - 3], v1 = values[n - 2], v2 = values[n - 1];
  const double ratio = (v0 - v1) / (v1 - v2);
  ROBIN_THROW_IF(!std::isfinite(ratio) || !(ratio > 1.0 && ratio < 8.0), ErrorCode::NonConvergent,
                 "difference ratio " + std::to_string(ratio) + " outside (1, 8)");
  RichardsonResult r;
  r.order = std::log2(ratio);
  r.estimate = v2 + (v2 - v1) / (ratio - 1.0);
  return r;
}

/// Richardson estimate that accepts sequences already converged to
/// roundoff (relative spread <= 1e-10), such as exact discrete eigenvalues;
/// those report order NaN and the last value.
inline RichardsonResult extrapolate_converged(const std::vector<double>& values) {
  ROBIN_THROW_IF(values.size() < 3, ErrorCode::InvalidArgument, "need at least three mesh levels");
  const std::size_t n = values.size();
  const double scale = 1.0 + std::abs(values[n - 1]);
  if (std::abs(values[n - 3] - values[n - 2]) <= 1e-10 * scale && std::abs(values[n - 2] - values[n - 1]) <= 1e-10 * scale)
    return {values[n - 1], std::numeric_limits<double>::quiet_NaN()};
  return richardson_extrapolate(values);
}

struct ConvergenceTable {
  std::vector<double> h;                     // per level
  std::vector<std::vector<double>> lambda1;  // lambda1[level][k]
  std::vector<std::vector<double>> lambda2;
};

/// Both Robin spectra on `levels` successive red refinements of `mesh`
/// (h halving). Levels are solved concurrently and stored coarse to fine.
inline ConvergenceTable convergence_study(const TriangleMesh& mesh, const EllipticCoefficients& c,
                                          const RobinCoefficient& theta1, const RobinCoefficient& theta2, int levels,
                                          int k_max) {
  ROBIN_THROW_IF(levels < 1, ErrorCode::InvalidArgument, "levels must be at least 1");
  std::vector<TriangleMesh> meshes{mesh};
  for (int l = 1; l < levels; ++l) meshes.push_back(refine(meshes.back()));
  using Pair = std::pair<std::vector<double>, std::vector<double>>;
  std::vector<std::future<Pair>> jobs;
  for (const auto& m : meshes)
    jobs.push_back(std::async(std::launch::async, [&m, &c, &theta1, &theta2, k_max] {
      const FormMatrices F1 = assemble_form(m, c, theta1);
      const FormMatrices F2 = with_boundary(F1, assemble_boundary_mass(m, theta2));
      return Pair{solve_pencil(F1, k_max).eigenvalues(), solve_pencil(F2, k_max).eigenvalues()};
    }));
  ConvergenceTable t;
  for (std::size_t l = 0; l < meshes.size(); ++l) {
    auto [a, b] = jobs[l].get();
    t.h.push_back(meshes[l].h());
    t.lambda1.push_back(std::move(a));
    t.lambda2.push_back(std::move(b));
  }
  return t;
}

inline void write_monotonicity_csv(std::ostream& os, const MonotonicityReport& r) {
  os << "k,lambda1,lambda2,gap,certified\n" << std::setprecision(17);
  for (const auto& g : r.records)
    os << g.k << ',' << g.lambda1 << ',' << g.lambda2 << ',' << g.gap << ',' << (g.certified ? 1 : 0) << '\n';
}

inline void write_summary(std::ostream& os, const MonotonicityReport& r) {
  os << "monotonicity report\n"
     << "  mesh h          " << r.mesh_h << "\n"
     << "  k_max           " << r.k_max << "\n"
     << "  theta1<=theta2  " << (r.comparison.leq_everywhere ? "yes" : "no") << "\n"
     << "  |omega|         " << r.comparison.strict_edges.total_length << " ("
     << r.comparison.strict_edges.edge_ids.size() << " edges)\n"
     << "  weak_pass       " << (r.weak_pass ? "true" : "false") << "\n"
     << "  strict_pass     " << (r.strict_pass ? "true" : "false") << " (strict_tol " << r.strict_tol
     << " relative)\n";
  double min_gap = std::numeric_limits<double>::infinity();
  for (const auto& g : r.records) min_gap = std::min(min_gap, g.gap);
  os << "  min gap         " << min_gap << "\n";
}

}  // namespace robin
