#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "risicsc/error.hpp"

namespace risicsc {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Relative pivot threshold below which a Hermitian matrix is treated as singular.
inline constexpr double kSingularRelTol = 1e-12;

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

namespace detail {

inline Eigen::LLT<CMatrix> checked_llt(const CMatrix& a, const char* what) {
  Eigen::LLT<CMatrix> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": matrix is not Hermitian positive definite");
  }
  const auto diag = llt.matrixLLT().diagonal().real().cwiseAbs2();
  if (diag.size() > 0 && diag.minCoeff() < kSingularRelTol * diag.maxCoeff()) {
    throw NumericalError(std::string(what) + ": matrix is numerically singular");
  }
  return llt;
}

}  // namespace detail

/// Natural log-determinant of a Hermitian positive definite matrix.
inline double logdet_hpd(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  const auto llt = detail::checked_llt(a, "logdet");
  return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

/// Solves A X = B for Hermitian positive definite A.
inline CMatrix solve_hpd(const CMatrix& a, const CMatrix& b) {
  return detail::checked_llt(a, "solve").solve(b);
}

inline CMatrix inverse_hpd(const CMatrix& a) {
  return solve_hpd(a, CMatrix::Identity(a.rows(), a.cols()));
}

/// Wraps an angle into (0, 2*pi].
inline double wrap_phase(double angle) {
  double t = std::fmod(angle, kTwoPi);
  if (t <= 0.0) t += kTwoPi;
  return t;
}

/// Unit-norm vector with the phase fixed so the first non-negligible entry is real positive.
inline CVector canonical_direction(const CVector& v) {
  const double norm = v.norm();
  if (norm == 0.0) return v;
  CVector u = v / norm;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) > 1e-9) {
      u *= std::conj(u(i)) / std::abs(u(i));
      break;
    }
  }
  return u;
}

struct GeneralizedEigenpair {
  double value = 0.0;
  CVector vector;  // unit norm
};

/// Largest eigenpair of the Hermitian-definite pencil (A, B): max_w (w^H A w)/(w^H B w).
/// B is factored as L L^H and the standard problem L^{-1} A L^{-H} is solved.
inline GeneralizedEigenpair max_generalized_eigen(const CMatrix& a, const CMatrix& b) {
  const auto llt = detail::checked_llt(b, "generalized eigenproblem");
  const auto lower = llt.matrixL();
  CMatrix tmp = lower.solve(hermitian_part(a));
  CMatrix reduced = lower.solve(tmp.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(reduced));
  const Eigen::Index top = reduced.rows() - 1;
  CVector w = llt.matrixU().solve(eig.eigenvectors().col(top));
  return {eig.eigenvalues()(top), canonical_direction(w)};
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
///
/// Power iteration until the residual is below `tol` times the Rayleigh quotient; the returned
/// value is the quotient plus the residual norm, which bounds the top eigenvalue from above once
/// the iteration has locked onto it. Falls back to a full eigendecomposition when the iteration
/// stagnates.
inline double max_eigenvalue_psd(const CMatrix& a, double tol = 1e-8, int max_iter = 1000) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  CVector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = cd(1.0 + 0.01 * static_cast<double>(i), 0.0);
  x.normalize();
  for (int it = 0; it < max_iter; ++it) {
    CVector y = a * x;
    const double rho = x.dot(y).real();
    const double residual = (y - rho * x).norm();
    if (rho > 0.0 && residual <= tol * rho) return rho + residual;
    const double ny = y.norm();
    if (ny == 0.0) break;
    x = y / ny;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(a), Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues()(n - 1));
}

/// Frobenius power of a stack of matrices.
inline double frobenius_sq(const CMatrix& a) { return a.squaredNorm(); }

}  // namespace risicsc
