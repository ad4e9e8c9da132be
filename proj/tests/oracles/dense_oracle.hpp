#pragma once

// Brute-force reference for small Hermitian pencils S x = lambda M x:
// hand-written Cholesky of M, reduction C = L^-1 S L^-H, Householder
// tridiagonalization and Sturm-sequence bisection. Eigen is used only as
// storage.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

/// Lower-triangular L with A = L L^H, or nullopt if A is not positive definite.
inline std::optional<Eigen::MatrixXcd> cholesky(const Eigen::MatrixXcd& A) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = A(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(L(j, k));
    if (!(d > 0.0)) return std::nullopt;
    L(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      cd s = A(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
      L(i, j) = s / L(j, j).real();
    }
  }
  return L;
}

/// C = L^-1 S L^-H by two triangular solves.
inline Eigen::MatrixXcd reduce(const Eigen::MatrixXcd& S, const Eigen::MatrixXcd& L) {
  const Eigen::Index n = S.rows();
  auto forward = [&](const Eigen::MatrixXcd& B) {  // X = L^-1 B
    Eigen::MatrixXcd X = B;
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index i = 0; i < n; ++i) {
        cd s = X(i, c);
        for (Eigen::Index k = 0; k < i; ++k) s -= L(i, k) * X(k, c);
        X(i, c) = s / L(i, i);
      }
    return X;
  };
  const Eigen::MatrixXcd Y = forward(S);               // L^-1 S
  const Eigen::MatrixXcd Z = forward(Y.adjoint());     // L^-1 (L^-1 S)^H = L^-1 S L^-H (S Hermitian)
  Eigen::MatrixXcd C = Z.adjoint();
  return 0.5 * (C + C.adjoint());
}

struct Tridiagonal {
  std::vector<double> d;  // diagonal
  std::vector<double> e;  // |off-diagonal|, size n - 1
};

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal form.
inline Tridiagonal tridiagonalize(Eigen::MatrixXcd A) {
  const Eigen::Index n = A.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index m = n - k - 1;
    Eigen::VectorXcd x(m);
    for (Eigen::Index i = 0; i < m; ++i) x(i) = A(k + 1 + i, k);
    double xn = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) xn += std::norm(x(i));
    xn = std::sqrt(xn);
    if (xn == 0.0) continue;
    const cd phase = std::abs(x(0)) > 0.0 ? x(0) / std::abs(x(0)) : cd(1.0);
    Eigen::VectorXcd v = x;
    v(0) += phase * xn;
    double vn = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) vn += std::norm(v(i));
    if (vn == 0.0) continue;
    // A <- H A H with H = I - 2 v v^H / (v^H v) acting on rows/cols k+1..n-1.
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(n, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) H(k + 1 + i, k + 1 + j) -= 2.0 * v(i) * std::conj(v(j)) / vn;
    A = (H * A * H).eval();
  }
  Tridiagonal t;
  for (Eigen::Index i = 0; i < n; ++i) t.d.push_back(A(i, i).real());
  for (Eigen::Index i = 0; i + 1 < n; ++i) t.e.push_back(std::abs(A(i + 1, i)));
  return t;
}

/// Number of eigenvalues of the tridiagonal matrix strictly below x.
inline int sturm_count(const Tridiagonal& t, double x) {
  int count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < t.d.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : t.e[i - 1] * t.e[i - 1];
    q = t.d[i] - x - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

/// All eigenvalues, ascending, by bisection on Sturm counts.
inline std::vector<double> eigenvalues(const Tridiagonal& t) {
  const std::size_t n = t.d.size();
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? t.e[i - 1] : 0.0) + (i + 1 < n ? t.e[i] : 0.0);
    lo = std::min(lo, t.d[i] - r);
    hi = std::max(hi, t.d[i] + r);
  }
  lo -= 1.0;
  hi += 1.0;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double a = lo, b = hi;  // count(a) <= k < count(b)
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
      const double c = 0.5 * (a + b);
      if (sturm_count(t, c) <= static_cast<int>(k)) a = c;
      else b = c;
    }
    out[k] = 0.5 * (a + b);
  }
  return out;
}

/// Generalized eigenvalues of the Hermitian pencil (S, M), M positive definite.
inline std::vector<double> pencil_eigenvalues(const Eigen::MatrixXcd& S, const Eigen::MatrixXcd& M) {
  const auto L = cholesky(M);
  if (!L) throw std::runtime_error("oracle: M is not positive definite");
  return eigenvalues(tridiagonalize(reduce(S, *L)));
}

/// Number of eigenvalues of the Hermitian matrix A that are <= x.
inline int count_at_most(const Eigen::MatrixXcd& A, double x) {
  const Tridiagonal t = tridiagonalize(A);
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  return sturm_count(t, x + 1e-13 * scale);
}

}  // namespace oracle
