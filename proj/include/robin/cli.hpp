#pragma once

// Command driver behind the robin command-line tool. Each command reads a
// resolved ExperimentConfig, writes its reports into an output directory and
// returns an exit status; library errors propagate as robin::Error and map to
// exit statuses through exit_code().

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "robin/assembly.hpp"
#include "robin/coeffs.hpp"
#include "robin/config.hpp"
#include "robin/error.hpp"
#include "robin/geometry.hpp"
#include "robin/mesh_io.hpp"
#include "robin/spectra.hpp"
#include "robin/theorems.hpp"

namespace robin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitWeakFail = 2;   // compare/sweep: weak monotonicity violated
inline constexpr int kExitCheckFail = 3;  // check: some invariant failed
inline constexpr int kExitInternal = 4;   // unexpected exception
inline constexpr int kErrorBase = 10;

inline constexpr ErrorCode kAllErrors[] = {
    ErrorCode::InvalidArgument,      ErrorCode::SelfIntersection,  ErrorCode::DegenerateEdge,
    ErrorCode::LabelCountMismatch,   ErrorCode::MeshFailure,       ErrorCode::InvalidMesh,
    ErrorCode::EmptyRegion,          ErrorCode::NotElliptic,       ErrorCode::LabelMissing,
    ErrorCode::QuadratureFailure,    ErrorCode::SingularBoundaryMass, ErrorCode::NotPositiveDefinite,
    ErrorCode::ConvergenceFailure,   ErrorCode::InsufficientSpectrum, ErrorCode::ZeroVector,
    ErrorCode::DependentVectors,     ErrorCode::ComparisonFailed,  ErrorCode::MismatchedMeshes,
    ErrorCode::NonConvergent,        ErrorCode::ParseError,        ErrorCode::ValidationError,
    ErrorCode::IoError};

inline int exit_code(ErrorCode c) { return kErrorBase + static_cast<int>(c); }

inline std::string exit_code_table() {
  std::ostringstream os;
  os << "Exit codes:\n"
     << "  " << kExitOk << "   success\n"
     << "  " << kExitUsage << "   usage error\n"
     << "  " << kExitWeakFail << "   weak monotonicity failed (compare, sweep)\n"
     << "  " << kExitCheckFail << "   an invariant failed (check)\n"
     << "  " << kExitInternal << "   unexpected internal error\n";
  for (ErrorCode c : kAllErrors) os << "  " << exit_code(c) << "  " << to_string(c) << '\n';
  return os.str();
}

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  bool quiet = false;
  bool export_mesh = false;      // mesh.txt
  bool export_matrices = false;  // S1.mtx, S2.mtx, M.mtx
};

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  ROBIN_THROW_IF(!os, ErrorCode::IoError, "cannot write " + path.string());
  body(os);
  ROBIN_THROW_IF(!os, ErrorCode::IoError, "write failed for " + path.string());
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

struct Instance {
  TriangleMesh mesh;
  EllipticCoefficients c;
  RobinCoefficient theta1;
  RobinCoefficient theta2;
};

inline Instance make_instance(const ExperimentConfig& cfg) {
  Instance in{make_mesh(cfg), make_coefficients(cfg.coefficients), make_robin(cfg.theta1), make_robin(cfg.theta2)};
  in.theta1.require_labels(in.mesh);
  in.theta2.require_labels(in.mesh);
  const auto samples = sample_points(in.mesh);
  const auto herm = check_hermitian(in.c, samples, 1e-12);
  ROBIN_THROW_IF(!herm.pass, ErrorCode::InvalidArgument,
                 "a2 is not Hermitian (defect " + std::to_string(herm.worst) + ")");
  check_ellipticity(in.c, samples, unit_directions(16));
  check_bounded(in.c, samples);
  return in;
}

inline BoundaryRegion omega_of(const ExperimentConfig& cfg, const Instance& in, const MonotonicityReport& r) {
  if (cfg.omega) return boundary_region(in.mesh, *cfg.omega);
  return r.comparison.strict_edges;
}

inline void prepare(const RunOptions& opt, const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  ROBIN_THROW_IF(ec, ErrorCode::IoError, "cannot create " + opt.out_dir.string() + ": " + ec.message());
  write_file(opt.out_dir / "resolved_config.json", [&](std::ostream& os) { os << cfg.resolved.dump(2) << '\n'; });
}

inline void exports(const RunOptions& opt, const Instance& in) {
  if (opt.export_mesh) write_file(opt.out_dir / "mesh.txt", [&](std::ostream& os) { write_mesh(os, in.mesh); });
  if (opt.export_matrices) {
    const FormMatrices F1 = assemble_form(in.mesh, in.c, in.theta1);
    const SparseD B2 = assemble_boundary_mass(in.mesh, in.theta2);
    write_file(opt.out_dir / "S1.mtx", [&](std::ostream& os) { write_matrix(os, F1.S()); });
    write_file(opt.out_dir / "S2.mtx", [&](std::ostream& os) { write_matrix(os, with_boundary(F1, B2).S()); });
    write_file(opt.out_dir / "M.mtx", [&](std::ostream& os) { write_matrix(os, F1.M.cast<Complex>()); });
  }
}

// Grid of mu values: mu_count points spanning [lambda_1 - 1, lambda_{k_max}]
// of theta1, then the theta2 eigenvalues lambda_k for k <= min(10, k_max).
inline std::vector<std::pair<std::string, double>> nid_grid(const MonotonicityReport& r, int mu_count) {
  std::vector<std::pair<std::string, double>> mus;
  const double lo = r.spectrum1[0] - 1.0;
  const double hi = r.spectrum1[static_cast<std::size_t>(r.k_max - 1)];
  for (int i = 0; i < mu_count; ++i)
    mus.emplace_back("grid", mu_count == 1 ? hi : lo + (hi - lo) * i / (mu_count - 1));
  for (int k = 0; k < std::min(10, r.k_max); ++k) mus.emplace_back("eigen", r.spectrum2[static_cast<std::size_t>(k)]);
  return mus;
}

}  // namespace detail

inline int run_solve(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  detail::prepare(opt, cfg);
  const auto in = detail::make_instance(cfg);
  detail::exports(opt, in);
  const FormMatrices F = assemble_form(in.mesh, in.c, in.theta1);
  const Spectrum s = solve_pencil(F, std::min(cfg.k_max, F.N), cfg.cluster_tol);
  detail::write_file(opt.out_dir / "spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, s); });
  if (!opt.quiet) {
    log << "solve: " << in.mesh.node_count() << " nodes, h = " << in.mesh.h() << '\n' << std::setprecision(10);
    for (std::size_t k = 0; k < s.size(); ++k) log << "  lambda_" << k + 1 << " = " << s[k] << '\n';
  }
  return kExitOk;
}

inline int run_compare(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  detail::prepare(opt, cfg);
  const auto in = detail::make_instance(cfg);
  detail::exports(opt, in);
  const MonotonicityReport r =
      monotonicity_report(in.mesh, in.c, in.theta1, in.theta2, cfg.k_max, cfg.strict_tol, cfg.cluster_tol);
  detail::write_file(opt.out_dir / "monotonicity.csv", [&](std::ostream& os) { write_monotonicity_csv(os, r); });

  int nid_total = 0, nid_pass = 0;
  detail::write_file(opt.out_dir / "nid.csv", [&](std::ostream& os) {
    os << "kind,mu,n1,n2,dim_ker,pass\n" << std::setprecision(17);
    for (const auto& [kind, mu] : detail::nid_grid(r, cfg.mu_count)) {
      const NidResult n = nid_check(r.spectrum1, r.spectrum2, mu);
      ++nid_total;
      nid_pass += n.pass ? 1 : 0;
      os << kind << ',' << n.mu << ',' << n.n1 << ',' << n.n2 << ',' << n.dim_ker << ',' << (n.pass ? 1 : 0) << '\n';
    }
  });

  const BoundaryRegion omega = detail::omega_of(cfg, in, r);
  std::vector<TraceRecord> traces;
  if (!omega.empty()) traces = trace_certificate(r.spectrum2, in.mesh, omega, cfg.k_max, cfg.strict_tol);
  detail::write_file(opt.out_dir / "trace.csv", [&](std::ostream& os) {
    os << "k,trace_norm,certified\n" << std::setprecision(17);
    for (const auto& t : traces) os << t.k << ',' << t.norm << ',' << (t.certified ? 1 : 0) << '\n';
  });

  std::vector<int> uncertified, flagged;
  for (const auto& g : r.records)
    if (!g.certified) uncertified.push_back(g.k);
  for (const auto& t : traces)
    if (!t.certified) flagged.push_back(t.k);
  auto list = [](const std::vector<int>& v) {
    std::string s;
    for (int k : v) s += (s.empty() ? "" : " ") + std::to_string(k);
    return s.empty() ? std::string("none") : s;
  };
  std::ostringstream summary;
  write_summary(summary, r);
  summary << "  nid checks      " << nid_pass << "/" << nid_total << " pass\n"
          << "  uncertified k   " << list(uncertified) << "\n"
          << "  trace flags k   " << (omega.empty() ? std::string("n/a (omega empty)") : list(flagged)) << "\n";
  detail::write_file(opt.out_dir / "summary.txt", [&](std::ostream& os) { os << summary.str(); });
  if (!opt.quiet) log << summary.str();
  return r.weak_pass ? kExitOk : kExitWeakFail;
}

inline int run_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  detail::prepare(opt, cfg);
  const auto in = detail::make_instance(cfg);
  detail::exports(opt, in);
  const int k = std::min<int>(cfg.k_max, static_cast<int>(in.mesh.node_count()));
  const EigencurveTable t = eigencurve_sweep(in.mesh, in.c, in.theta1, in.theta2, cfg.t_grid, k);
  detail::write_file(opt.out_dir / "eigencurves.csv", [&](std::ostream& os) {
    os << 't';
    for (int j = 1; j <= k; ++j) os << ",lambda_" << j;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < t.t_grid.size(); ++i) {
      os << t.t_grid[i];
      for (const auto& row : t.values) os << ',' << row[i];
      os << '\n';
    }
  });
  if (!opt.quiet)
    log << "sweep: " << t.t_grid.size() << " points, " << k << " curves, monotone = " << (t.monotone ? "true" : "false")
        << '\n';
  return t.monotone ? kExitOk : kExitWeakFail;
}

inline int run_converge(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  detail::prepare(opt, cfg);
  const auto in = detail::make_instance(cfg);
  detail::exports(opt, in);
  const int k = std::min<int>(cfg.k_max, static_cast<int>(in.mesh.node_count()));
  const ConvergenceTable t = convergence_study(in.mesh, in.c, in.theta1, in.theta2, cfg.levels, k);
  detail::write_file(opt.out_dir / "converge.csv", [&](std::ostream& os) {
    os << "level,h,k,lambda1,lambda2,gap\n" << std::setprecision(17);
    for (std::size_t l = 0; l < t.h.size(); ++l)
      for (int j = 0; j < k; ++j) {
        const double a = t.lambda1[l][static_cast<std::size_t>(j)], b = t.lambda2[l][static_cast<std::size_t>(j)];
        os << l << ',' << t.h[l] << ',' << j + 1 << ',' << a << ',' << b << ',' << b - a << '\n';
      }
  });
  int nonconvergent = 0;
  detail::write_file(opt.out_dir / "richardson.csv", [&](std::ostream& os) {
    os << "k,quantity,estimate,order,status\n" << std::setprecision(17);
    for (int j = 0; j < k; ++j) {
      std::optional<double> e1, e2;
      for (int which = 0; which < 2; ++which) {
        std::vector<double> seq;
        for (const auto& level : which == 0 ? t.lambda1 : t.lambda2) seq.push_back(level[static_cast<std::size_t>(j)]);
        os << j + 1 << ',' << (which == 0 ? "lambda1" : "lambda2") << ',';
        try {
          const RichardsonResult r = extrapolate_converged(seq);
          (which == 0 ? e1 : e2) = r.estimate;
          os << r.estimate << ',' << r.order << ",ok\n";
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonConvergent) throw;
          ++nonconvergent;
          os << ",,NonConvergent\n";
        }
      }
      if (e1 && e2)
        os << j + 1 << ",gap," << *e2 - *e1 << ",,ok\n";
      else
        os << j + 1 << ",gap,,,NonConvergent\n";
    }
  });
  if (!opt.quiet)
    log << "converge: " << t.h.size() << " levels, finest h = " << t.h.back() << ", " << nonconvergent
        << " non-convergent sequences\n";
  return kExitOk;
}

/// Invariant suite on the configured instance; `seed` drives the random
/// subspaces and shifts.
inline std::vector<CheckLine> run_checks(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<CheckLine> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  const auto in = detail::make_instance(cfg);
  const TriangleMesh& mesh = in.mesh;
  std::mt19937_64 rng(seed);

  // geometry
  if (!cfg.mesh_file) {
    const double a = make_domain(cfg.domain).area();
    add("geometry.area", std::abs(mesh.area() - a) <= 1e-12 * a, "mesh " + detail::fmt(mesh.area()) + " vs domain " + detail::fmt(a));
  }
  {
    bool ok = true;
    for (const auto& e : mesh.boundary_edges()) {
      const Triangle& t = mesh.triangles()[e.triangle];
      int opp = t[0];
      for (int v : t)
        if (v != e.nodes[0] && v != e.nodes[1]) opp = v;
      const Point m = 0.5 * (mesh.nodes()[e.nodes[0]] + mesh.nodes()[e.nodes[1]]);
      ok = ok && std::abs(norm(e.normal) - 1.0) <= 1e-12 && dot(e.normal, m - mesh.nodes()[opp]) > 0.0;
    }
    add("geometry.outward_normals", ok, std::to_string(mesh.boundary_edges().size()) + " boundary edges");
  }
  {
    const BoundaryRegion all = boundary_region(mesh, mesh.labels());
    add("geometry.region_cover", std::abs(all.total_length - mesh.boundary_length()) <= 1e-12 * mesh.boundary_length(),
        "all labels cover length " + detail::fmt(all.total_length));
  }
  {
    std::stringstream ss;
    write_mesh(ss, mesh);
    const TriangleMesh back = read_mesh(ss);
    const FormMatrices A = assemble_form(mesh, in.c, in.theta1), B = assemble_form(back, in.c, in.theta1);
    const bool same = SparseC(A.S() - B.S()).norm() == 0.0 && SparseD(A.M - B.M).norm() == 0.0;
    add("geometry.mesh_roundtrip", same, "exported and re-imported mesh assemble identical matrices");
  }

  // coeffs
  const auto samples = sample_points(mesh);
  const auto herm = check_hermitian(in.c, samples, 1e-12);
  add("coeffs.hermitian_a2", herm.pass, "worst defect " + detail::fmt(herm.worst));
  const auto ell = check_ellipticity(in.c, samples, unit_directions(16));
  add("coeffs.ellipticity", ell.pass, "estimate " + detail::fmt(ell.estimate) + " vs claimed " + detail::fmt(in.c.claimed_E));
  const auto cmp = robin_compare(in.theta1, in.theta2, mesh);
  add("coeffs.theta_order", cmp.leq_everywhere, "max violation " + detail::fmt(cmp.max_violation));

  // assembly
  const FormMatrices F1 = assemble_form(mesh, in.c, in.theta1);
  const FormMatrices F2 = with_boundary(F1, assemble_boundary_mass(mesh, in.theta2));
  for (const auto* F : {&F1, &F2}) {
    const double d = hermitian_defect(F->S());
    add(F == &F1 ? "assembly.hermitian_S1" : "assembly.hermitian_S2", d <= 1e-12, "relative defect " + detail::fmt(d));
  }
  {
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(F1.N);
    const double total = one.dot(F1.M * one);
    add("assembly.mass_total", std::abs(total - mesh.area()) <= 1e-12 * mesh.area(),
        "1^T M 1 = " + detail::fmt(total));
  }
  {
    const auto& edges = mesh.boundary_edges();
    auto value = [&](const RobinCoefficient& th, std::size_t i, double t, Point x) { return th(edges[i].label, t, x); };
    const SparseD sum = assemble_boundary_weighted(
        mesh, [&](std::size_t i, double t, Point x) { return value(in.theta1, i, t, x) + value(in.theta2, i, t, x); });
    const SparseD diff = sum - F1.B_theta - F2.B_theta;
    const double scale = std::max(1.0, Eigen::MatrixXd(sum).cwiseAbs().maxCoeff());
    add("assembly.boundary_linearity", Eigen::MatrixXd(diff).cwiseAbs().maxCoeff() <= 1e-13 * scale,
        "B(theta1 + theta2) = B(theta1) + B(theta2)");
  }

  // spectra
  const int k = std::min<int>(cfg.k_max, F1.N);
  const MonotonicityReport r = monotonicity_report(mesh, in.c, in.theta1, in.theta2, k, cfg.strict_tol, cfg.cluster_tol);
  const Spectrum& s1 = r.spectrum1;
  {
    const double worst = *std::max_element(s1.residuals().begin(), s1.residuals().end());
    add("spectra.residuals", worst <= kResidualTol, "max relative residual " + detail::fmt(worst));
    const Eigen::MatrixXcd& X = s1.eigenvectors();
    const Eigen::MatrixXcd G = X.adjoint() * (F1.M.cast<Complex>() * X);
    const double dev = (G - Eigen::MatrixXcd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
    add("spectra.m_orthonormal", dev <= 1e-10, "max |X^H M X - I| = " + detail::fmt(dev));
  }
  {
    const double shift = std::abs(s1[0]) + 1.0;
    bool pd = false;
    if (robin::detail::is_real(F1.S())) {
      Eigen::SimplicialLDLT<SparseD> ldlt;
      pd = robin::detail::shifted_positive_definite<double>(ldlt, SparseD(F1.S().real()), F1.M, -shift);
    } else {
      Eigen::SimplicialLDLT<SparseC> ldlt;
      pd = robin::detail::shifted_positive_definite<Complex>(ldlt, F1.S(), SparseC(F1.M.cast<Complex>()), -shift);
    }
    add("spectra.semibounded", pd, "S + (|lambda_1| + 1) M positive definite");
  }
  {
    // Courant-Fischer: every j-dimensional subspace has max Rayleigh >= lambda_j.
    std::normal_distribution<double> g;
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 50; ++trial) {
      const int j = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(k, 10)));
      Eigen::MatrixXcd V(F1.N, j);
      for (Eigen::Index a = 0; a < V.rows(); ++a)
        for (Eigen::Index b = 0; b < V.cols(); ++b) V(a, b) = Complex(g(rng), g(rng));
      const double lj = s1[static_cast<std::size_t>(j - 1)];
      worst = std::max(worst, (lj - max_rayleigh_on_span(F1, V)) / (1.0 + std::abs(lj)));
    }
    add("spectra.min_max_random", worst <= 1e-9, "worst relative violation " + detail::fmt(worst));
  }
  {
    // N(mu) is certified by the first N(mu) eigenvectors and not exceeded by N(mu) + 1 of them.
    std::uniform_real_distribution<double> u(s1[0], s1[static_cast<std::size_t>(k - 1)]);
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
      const double mu = u(rng);
      const int n = counting(s1, mu);
      if (n > 0) ok = ok && subspace_certificate(F1, mu + s1.tol_at(mu), s1.eigenvectors().leftCols(n));
      if (n < static_cast<int>(s1.size()))
        ok = ok && !subspace_certificate(F1, mu, s1.eigenvectors().leftCols(n + 1));
    }
    add("spectra.counting_certificate", ok, "10 random mu");
  }
  {
    const Spectrum again = solve_pencil(F1, static_cast<int>(s1.size()), cfg.cluster_tol);
    add("spectra.deterministic", again.eigenvalues() == s1.eigenvalues(), "repeated solve is bitwise identical");
  }

  // theorems
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& gr : r.records) worst = std::max(worst, -gr.gap);
    add("theorems.weak_monotonicity", r.weak_pass, "largest lambda1 - lambda2 = " + detail::fmt(worst));
  }
  const BoundaryRegion omega = detail::omega_of(cfg, in, r);
  if (!omega.empty()) {
    bool ok = true;
    int count = 0;
    for (const auto& [kind, mu] : detail::nid_grid(r, cfg.mu_count)) {
      ok = ok && nid_check(r.spectrum1, r.spectrum2, mu).pass;
      ++count;
    }
    add("theorems.counting_inequality", ok, std::to_string(count) + " mu values");
    add("theorems.strict_monotonicity", r.strict_pass, "strict_tol " + detail::fmt(cfg.strict_tol) + " relative");
    const auto traces = trace_certificate(r.spectrum2, mesh, omega, k, cfg.strict_tol);
    const bool traced = std::all_of(traces.begin(), traces.end(), [](const TraceRecord& t) { return t.certified; });
    add("theorems.trace_certificate", traced, "eigenfunction traces on omega above " + detail::fmt(cfg.strict_tol));
  }
  return out;
}

inline int run_check(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  detail::prepare(opt, cfg);
  const auto lines = run_checks(cfg, opt.seed);
  bool ok = true;
  std::ostringstream text;
  for (const auto& l : lines) {
    ok = ok && l.pass;
    text << (l.pass ? "PASS " : "FAIL ") << l.name << "  " << l.detail << '\n';
  }
  detail::write_file(opt.out_dir / "check.txt", [&](std::ostream& os) { os << text.str(); });
  if (!opt.quiet) log << text.str();
  return ok ? kExitOk : kExitCheckFail;
}

/// Dispatches one of solve | compare | sweep | converge | check.
inline int run(const std::string& command, const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
  if (command == "solve") return run_solve(cfg, opt, log);
  if (command == "compare") return run_compare(cfg, opt, log);
  if (command == "sweep") return run_sweep(cfg, opt, log);
  if (command == "converge") return run_converge(cfg, opt, log);
  if (command == "check") return run_check(cfg, opt, log);
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
}

}  // namespace robin::cli
