#pragma once

// Generalized Hermitian eigenproblem S x = lambda M x for the assembled
// pencil, the eigenvalue counting function, eigenspaces, Rayleigh quotients
// and min-max subspace certificates.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "robin/assembly.hpp"
#include "robin/error.hpp"

namespace robin {

struct Cluster {
  double value = 0.0;  // mean of the member eigenvalues
  int multiplicity = 0;
};

/// Ascending eigenvalues with M-orthonormal eigenvectors (columns).
///
/// Eigenvalues within cluster_tol * (1 + |lambda|) of their predecessor are
/// grouped into one multiplicity cluster. `complete` marks a spectrum that
/// holds every eigenvalue of the pencil, so counting never runs out of range.
class Spectrum {
 public:
  Spectrum() = default;

  Spectrum(std::vector<double> eigenvalues, Eigen::MatrixXcd eigenvectors, std::vector<double> residuals,
           double cluster_tol, bool complete)
      : values_(std::move(eigenvalues)),
        vectors_(std::move(eigenvectors)),
        residuals_(std::move(residuals)),
        cluster_tol_(cluster_tol),
        complete_(complete) {
    ROBIN_THROW_IF(!std::is_sorted(values_.begin(), values_.end()), ErrorCode::InvalidArgument,
                   "eigenvalues must be ascending");
    ROBIN_THROW_IF(!(cluster_tol_ >= 0.0), ErrorCode::InvalidArgument, "cluster_tol must be nonnegative");
    if (residuals_.empty()) residuals_.assign(values_.size(), 0.0);
    build_clusters();
  }

  /// Values only, for tests and synthetic data.
  static Spectrum from_values(std::vector<double> eigenvalues, double cluster_tol = 1e-6, bool complete = false) {
    return {std::move(eigenvalues), Eigen::MatrixXcd(), {}, cluster_tol, complete};
  }

  [[nodiscard]] const std::vector<double>& eigenvalues() const { return values_; }
  [[nodiscard]] const Eigen::MatrixXcd& eigenvectors() const { return vectors_; }
  [[nodiscard]] const std::vector<double>& residuals() const { return residuals_; }
  [[nodiscard]] const std::vector<Cluster>& clusters() const { return clusters_; }
  [[nodiscard]] const std::vector<int>& cluster_ids() const { return cluster_ids_; }
  [[nodiscard]] double cluster_tol() const { return cluster_tol_; }
  [[nodiscard]] bool complete() const { return complete_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t k) const { return values_[k]; }

  /// Absolute clustering tolerance at mu.
  [[nodiscard]] double tol_at(double mu) const { return cluster_tol_ * (1.0 + std::abs(mu)); }

 private:
  void build_clusters() {
    cluster_ids_.resize(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (i == 0 || values_[i] - values_[i - 1] > tol_at(values_[i - 1])) clusters_.push_back({0.0, 0});
      Cluster& c = clusters_.back();
      c.value += (values_[i] - c.value) / (c.multiplicity + 1);
      ++c.multiplicity;
      cluster_ids_[i] = static_cast<int>(clusters_.size()) - 1;
    }
  }

  std::vector<double> values_;
  Eigen::MatrixXcd vectors_;
  std::vector<double> residuals_;
  std::vector<Cluster> clusters_;
  std::vector<int> cluster_ids_;
  double cluster_tol_ = 1e-6;
  bool complete_ = false;
};

struct SolveOptions {
  enum class Method { automatic, dense, iterative };

  std::optional<int> k;  // number of smallest eigenpairs; all when empty
  double cluster_tol = 1e-6;
  Method method = Method::automatic;
  int max_iterations = 3000;
  /// automatic uses the dense path at or below this many unknowns.
  int dense_threshold = 400;
};

/// Residual bound used for every returned eigenpair:
/// ||S x - lambda M x|| <= kResidualTol * (||S|| + |lambda| ||M||) * ||x||,
/// with induced 1-norms for the matrices and 2-norms for vectors.
inline constexpr double kResidualTol = 1e-9;

namespace detail {

template <class Scalar>
double norm1(const Eigen::SparseMatrix<Scalar>& A) {
  double best = 0.0;
  for (int k = 0; k < A.outerSize(); ++k) {
    double s = 0.0;
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
double relative_residual(const Eigen::SparseMatrix<Scalar>& S, const Eigen::SparseMatrix<Scalar>& M, double normS,
                         double normM, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, double lambda) {
  const double r = (S * x - lambda * (M * x)).norm();
  const double scale = (normS + std::abs(lambda) * normM) * x.norm();
  return scale > 0.0 ? r / scale : r;
}

// Largest-magnitude entry made real positive (first index on ties).
inline void normalize_phase(Eigen::MatrixXcd& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double a = std::abs(X(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (amax > 0.0) X.col(j) *= std::conj(X(imax, j)) / amax;
  }
}

template <class Scalar>
struct RawEigen {
  std::vector<double> values;
  MatX<Scalar> vectors;
};

template <class Scalar>
RawEigen<Scalar> dense_pencil(const Eigen::SparseMatrix<Scalar>& S, const Eigen::SparseMatrix<Scalar>& M, int k) {
  const MatX<Scalar> Sd = MatX<Scalar>(S);
  const MatX<Scalar> Md = MatX<Scalar>(M);
  Eigen::LLT<MatX<Scalar>> llt(Md);
  ROBIN_THROW_IF(llt.info() != Eigen::Success, ErrorCode::NotPositiveDefinite, "mass matrix is not positive definite");
  // Only the lower triangles are read.
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX<Scalar>> es(Sd, Md);
  ROBIN_THROW_IF(es.info() != Eigen::Success, ErrorCode::ConvergenceFailure, "dense eigensolver failed");
  RawEigen<Scalar> out;
  out.values.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.values[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  out.vectors = es.eigenvectors().leftCols(k);
  return out;
}

// Factorizes S - sigma M and reports whether it is positive definite, which by
// Sylvester's law of inertia holds exactly when sigma lies below the spectrum.
template <class Scalar>
bool shifted_positive_definite(Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>>& ldlt,
                               const Eigen::SparseMatrix<Scalar>& S, const Eigen::SparseMatrix<Scalar>& M,
                               double sigma) {
  const Eigen::SparseMatrix<Scalar> A = S - Scalar(sigma) * M;
  ldlt.compute(A);
  if (ldlt.info() != Eigen::Success) return false;
  const auto D = ldlt.vectorD();
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (!(std::real(D(i)) > 0.0) || !std::isfinite(std::real(D(i)))) return false;
  return true;
}

// M-orthonormalizes the columns of Y by two passes of Cholesky QR.
template <class Scalar>
bool m_orthonormalize(MatX<Scalar>& Y, const Eigen::SparseMatrix<Scalar>& M) {
  for (int pass = 0; pass < 2; ++pass) {
    MatX<Scalar> G = Y.adjoint() * (M * Y);
    G = (0.5 * (G + G.adjoint())).eval();
    Eigen::LLT<MatX<Scalar>> llt(G);
    if (llt.info() != Eigen::Success) return false;
    // Y <- Y L^{-H}
    Y = llt.matrixU().template solve<Eigen::OnTheRight>(Y);
  }
  return true;
}

// Shift-and-invert subspace iteration with Rayleigh-Ritz, block size p > k.
// The shift is placed strictly below the spectrum (verified by inertia), so
// the dominant invariant subspace of (S - sigma M)^{-1} M is the one of the k
// smallest eigenvalues, and multiple eigenvalues are captured by the block.
template <class Scalar>
RawEigen<Scalar> iterative_pencil(const Eigen::SparseMatrix<Scalar>& S, const Eigen::SparseMatrix<Scalar>& M, int k,
                                  int max_iterations) {
  const int n = static_cast<int>(S.rows());
  const int p = std::min(n, std::max(2 * k, k + 10));
  const double normS = norm1(S), normM = norm1(M);

  {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<Scalar>> mchol(M);
    bool ok = mchol.info() == Eigen::Success;
    ROBIN_THROW_IF(!ok, ErrorCode::NotPositiveDefinite, "mass matrix is not positive definite");
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt;
  // Walk the shift down from -1 until the shifted matrix is positive definite.
  double step = 1.0;
  double sigma = -1.0;
  int tries = 0;
  while (!shifted_positive_definite(ldlt, S, M, sigma)) {
    ROBIN_THROW_IF(++tries > 200, ErrorCode::ConvergenceFailure, "could not place a shift below the spectrum");
    step *= 2.0;
    sigma -= step;
  }

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  MatX<Scalar> X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = Scalar(unif(rng));

  const double target = 0.05 * kResidualTol;
  RawEigen<Scalar> out;
  for (int it = 0; it < max_iterations; ++it) {
    MatX<Scalar> Y = ldlt.solve(MatX<Scalar>(M * X));
    ROBIN_THROW_IF(!m_orthonormalize(Y, M), ErrorCode::ConvergenceFailure, "iteration block lost rank");
    MatX<Scalar> H = Y.adjoint() * (S * Y);
    H = (0.5 * (H + H.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatX<Scalar>> es(H);
    X = Y * es.eigenvectors();
    bool converged = true;
    for (int j = 0; j < k && converged; ++j)
      converged = relative_residual<Scalar>(S, M, normS, normM, X.col(j), es.eigenvalues()(j)) <= target;
    if (converged) {
      out.values.resize(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) out.values[static_cast<std::size_t>(j)] = es.eigenvalues()(j);
      out.vectors = X.leftCols(k);
      return out;
    }
  }
  throw Error(ErrorCode::ConvergenceFailure,
              "subspace iteration did not converge in " + std::to_string(max_iterations) + " iterations");
}

template <class Scalar>
Spectrum solve_typed(const Eigen::SparseMatrix<Scalar>& S, const Eigen::SparseMatrix<Scalar>& M,
                     const SolveOptions& opt) {
  const int n = static_cast<int>(S.rows());
  const int k = opt.k.value_or(n);
  ROBIN_THROW_IF(k < 1 || k > n, ErrorCode::InvalidArgument,
                 "requested " + std::to_string(k) + " eigenpairs of a pencil of size " + std::to_string(n));
  bool dense = opt.method == SolveOptions::Method::dense;
  if (opt.method == SolveOptions::Method::automatic)
    dense = n <= opt.dense_threshold || 4 * k > n || !opt.k.has_value();
  if (!dense && std::min(n, std::max(2 * k, k + 10)) >= n) dense = true;

  RawEigen<Scalar> raw = dense ? dense_pencil(S, M, k) : iterative_pencil(S, M, k, opt.max_iterations);

  const double normS = norm1(S), normM = norm1(M);
  std::vector<double> residuals(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    residuals[static_cast<std::size_t>(j)] =
        relative_residual<Scalar>(S, M, normS, normM, raw.vectors.col(j), raw.values[static_cast<std::size_t>(j)]);
  Eigen::MatrixXcd X = raw.vectors.template cast<Complex>();
  normalize_phase(X);
  return {std::move(raw.values), std::move(X), std::move(residuals), opt.cluster_tol, k == n};
}

inline bool is_real(const SparseC& S) {
  for (int k = 0; k < S.outerSize(); ++k)
    for (SparseC::InnerIterator it(S, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

}  // namespace detail

/// Smallest eigenpairs of S x = lambda M x for Hermitian S and symmetric
/// positive definite M. Real pencils are solved in real arithmetic. Throws
/// NotPositiveDefinite or ConvergenceFailure.
inline Spectrum solve_pencil(const SparseC& S, const SparseD& M, const SolveOptions& opt = {}) {
  ROBIN_THROW_IF(S.rows() != S.cols() || M.rows() != M.cols() || S.rows() != M.rows(), ErrorCode::InvalidArgument,
                 "pencil dimensions disagree");
  if (detail::is_real(S)) return detail::solve_typed<double>(SparseD(S.real()), M, opt);
  return detail::solve_typed<Complex>(S, SparseC(M.cast<Complex>()), opt);
}

inline Spectrum solve_pencil(const FormMatrices& F, std::optional<int> k, double cluster_tol = 1e-6) {
  SolveOptions opt;
  opt.k = k;
  opt.cluster_tol = cluster_tol;
  return solve_pencil(F.S(), F.M, opt);
}

namespace detail {

inline void require_range(const Spectrum& spec, double mu) {
  if (spec.complete()) return;
  ROBIN_THROW_IF(spec.size() == 0 || mu + spec.tol_at(mu) >= spec.eigenvalues().back(),
                 ErrorCode::InsufficientSpectrum, "mu = " + std::to_string(mu) + " is beyond the computed spectrum");
}

}  // namespace detail

/// N(mu): number of eigenvalues <= mu + cluster tolerance.
inline int counting(const Spectrum& spec, double mu) {
  detail::require_range(spec, mu);
  const double bound = mu + spec.tol_at(mu);
  return static_cast<int>(std::upper_bound(spec.eigenvalues().begin(), spec.eigenvalues().end(), bound) -
                          spec.eigenvalues().begin());
}

/// Indices of the eigenvalues within the cluster tolerance of mu.
inline std::vector<int> eigenspace_indices(const Spectrum& spec, double mu) {
  detail::require_range(spec, mu);
  std::vector<int> idx;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (std::abs(spec[i] - mu) <= spec.tol_at(mu)) idx.push_back(static_cast<int>(i));
  return idx;
}

/// M-orthonormal basis (columns) of the computed eigenspace at mu; possibly empty.
inline Eigen::MatrixXcd eigenspace(const Spectrum& spec, double mu) {
  const auto idx = eigenspace_indices(spec, mu);
  Eigen::MatrixXcd V(spec.eigenvectors().rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) V.col(static_cast<Eigen::Index>(j)) = spec.eigenvectors().col(idx[j]);
  return V;
}

/// (u^H S u) / (u^H M u). Throws ZeroVector for u = 0.
inline double rayleigh(const FormMatrices& F, const Eigen::VectorXcd& u) {
  ROBIN_THROW_IF(u.size() != F.N, ErrorCode::InvalidArgument, "vector size does not match the pencil");
  const SparseC S = F.S();
  const double den = std::real(u.dot(F.M.cast<Complex>() * u));
  ROBIN_THROW_IF(!(den > 0.0), ErrorCode::ZeroVector, "Rayleigh quotient of the zero vector");
  const Complex num = u.dot(S * u);
  const double scale = std::max(std::abs(num), detail::norm1(S) * u.squaredNorm());
  ROBIN_THROW_IF(std::abs(num.imag()) > 1e-12 * scale, ErrorCode::InvalidArgument,
                 "form value has a non-negligible imaginary part; S is not Hermitian");
  return num.real() / den;
}

/// Optimal discrete lower bound c with a_theta[u] >= c ||u||^2: the smallest
/// eigenvalue of the pencil.
inline double form_lower_bound(const FormMatrices& F) { return solve_pencil(F, 1).eigenvalues().front(); }

/// Largest Rayleigh quotient over span(V), i.e. the top eigenvalue of the
/// projected pencil (V^H S V, V^H M V). Throws DependentVectors when the
/// M-Gram matrix is numerically rank deficient (relative tolerance 1e-10).
inline double max_rayleigh_on_span(const FormMatrices& F, const Eigen::MatrixXcd& V) {
  ROBIN_THROW_IF(V.cols() == 0, ErrorCode::InvalidArgument, "empty subspace");
  ROBIN_THROW_IF(V.rows() != F.N, ErrorCode::InvalidArgument, "vector size does not match the pencil");
  Eigen::MatrixXcd G = V.adjoint() * (F.M.cast<Complex>() * V);
  G = (0.5 * (G + G.adjoint())).eval();
  Eigen::MatrixXcd H = V.adjoint() * (F.S() * V);
  H = (0.5 * (H + H.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gram(G, Eigen::EigenvaluesOnly);
  const double gmax = gram.eigenvalues().maxCoeff();
  ROBIN_THROW_IF(!(gram.eigenvalues().minCoeff() > 1e-10 * gmax), ErrorCode::DependentVectors,
                 "subspace vectors are linearly dependent");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// True when every u in span(V) satisfies a_theta[u] <= mu ||u||^2 (up to 1e-9).
inline bool subspace_certificate(const FormMatrices& F, double mu, const Eigen::MatrixXcd& V) {
  return max_rayleigh_on_span(F, V) <= mu + 1e-9;
}

/// CSV with header `k,lambda,cluster_id,residual`; k is 1-based.
inline void write_spectrum_csv(std::ostream& os, const Spectrum& spec) {
  os << "k,lambda,cluster_id,residual\n" << std::setprecision(17);
  for (std::size_t i = 0; i < spec.size(); ++i)
    os << i + 1 << ',' << spec[i] << ',' << spec.cluster_ids()[i] << ',' << spec.residuals()[i] << '\n';
}

}  // namespace robin
