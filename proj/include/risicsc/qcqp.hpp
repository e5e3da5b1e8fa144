#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "risicsc/linalg.hpp"

namespace risicsc {

// Complex matrix variables X_i. Real-valued functions are differentiated with respect to the
// conjugate coordinates, so d/dX* tr(X^H Q X) - 2 Re tr(X^H B) = Q X - B.

/// Block i contributes tr(X_i^H Q_i X_i) - 2 Re tr(X_i^H B_i) and carries ||X_i||_F^2 <= cap_i.
struct QcqpBlock {
  CMatrix quad;
  CMatrix lin;
  double cap = 0.0;
};

/// constant + sum_j tr(X_j^H R_j X_j) - 2 Re sum_j tr(X_j^H L_j) <= 0, every R_j Hermitian PSD.
struct QcqpConstraint {
  double constant = 0.0;
  std::vector<std::pair<int, CMatrix>> quad;
  std::vector<std::pair<int, CMatrix>> lin;
};

struct ConvexQuadraticProgram {
  std::vector<QcqpBlock> blocks;
  std::vector<QcqpConstraint> constraints;
};

inline double qcqp_objective(const ConvexQuadraticProgram& qp, const std::vector<CMatrix>& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < qp.blocks.size(); ++i) {
    v += (x[i].adjoint() * qp.blocks[i].quad * x[i]).trace().real() -
         2.0 * (x[i].adjoint() * qp.blocks[i].lin).trace().real();
  }
  return v;
}

inline double qcqp_constraint(const QcqpConstraint& c, const std::vector<CMatrix>& x) {
  double v = c.constant;
  for (const auto& [j, r] : c.quad) v += (x[j].adjoint() * r * x[j]).trace().real();
  for (const auto& [j, l] : c.lin) v -= 2.0 * (x[j].adjoint() * l).trace().real();
  return v;
}

struct QcqpOptions {
  double tol = 1e-7;            // KKT residual, normalized units
  double margin = 1e-6;         // constraints are solved as c_r / scale_r <= -margin
  int max_iter = 10000;         // dual coordinate sweeps
  std::vector<double> warm_multipliers;  // constraint multipliers from a related solve
};

struct QcqpCertificate {
  double kkt_residual = 0.0;
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  bool converged = false;
  bool backtracked = false;     // final point moved toward the start to restore feasibility
  bool kept_start = false;      // start returned because no better feasible point was found
  std::vector<double> power_multipliers;
  std::vector<double> constraint_multipliers;
};

struct QcqpResult {
  std::vector<CMatrix> x;
  double objective = 0.0;
  QcqpCertificate certificate;
};

namespace detail {

struct CappedQuadratic {
  CMatrix x;
  double mu = 0.0;
};

/// min tr(X^H Q X) - 2 Re tr(X^H B) s.t. ||X||^2 <= cap, Q Hermitian PSD.
inline CappedQuadratic capped_quadratic(const CMatrix& q, const CMatrix& b, double cap) {
  const Eigen::Index n = q.rows();
  if (b.squaredNorm() == 0.0) return {CMatrix::Zero(n, b.cols()), 0.0};
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(q));
  const RVector lam = eig.eigenvalues().cwiseMax(0.0);
  const CMatrix c = eig.eigenvectors().adjoint() * b;
  const RVector beta = c.rowwise().squaredNorm();
  const double beta_max = beta.maxCoeff();
  const auto power = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (beta(j) <= 1e-300 * beta_max) continue;
      const double den = lam(j) + mu;
      if (den <= 0.0) return std::numeric_limits<double>::infinity();
      s += beta(j) / (den * den);
    }
    return s;
  };
  double mu = 0.0;
  if (power(0.0) > cap) {
    double lo = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) lo = std::max(lo, std::sqrt(beta(j) / cap) - lam(j));
    double hi = std::sqrt(beta.sum() / cap);
    const auto phi = [&](double m) { return power(m) - cap; };
    if (phi(lo) <= 0.0) {
      mu = lo;
    } else {
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(phi, lo, hi, phi(lo), phi(hi),
                                                       boost::math::tools::eps_tolerance<double>(52), iters);
      mu = r.second;  // upper end keeps the power at or below the cap
    }
  }
  CMatrix y(n, b.cols());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double den = lam(j) + mu;
    y.row(j) = (beta(j) <= 1e-300 * beta_max || den <= 0.0) ? CMatrix::Zero(1, b.cols()) : CMatrix(c.row(j) / den);
  }
  return {eig.eigenvectors() * y, mu};
}

}  // namespace detail

/// Feasible-start solver for the convex program. The power caps are handled exactly inside a
/// Lagrangian whose other multipliers are raised by cyclic coordinate ascent on the concave dual;
/// each coordinate is a monotone one-dimensional root find. The returned point is feasible and no
/// worse than `start`.
inline QcqpResult solve(const ConvexQuadraticProgram& qp, const std::vector<CMatrix>& start,
                        const QcqpOptions& opt = {}) {
  const std::size_t nb = qp.blocks.size();
  const std::size_t nc = qp.constraints.size();

  // Normalize the objective and every constraint row to O(1) magnitudes.
  double obj_scale = 0.0;
  for (const auto& b : qp.blocks) {
    obj_scale = std::max(obj_scale, max_eigenvalue_psd(hermitian_part(b.quad)) * b.cap +
                                        2.0 * b.lin.norm() * std::sqrt(b.cap));
  }
  if (!(obj_scale > 0.0)) obj_scale = 1.0;
  std::vector<double> row_scale(nc);
  for (std::size_t r = 0; r < nc; ++r) {
    const auto& c = qp.constraints[r];
    double s = std::abs(c.constant);
    for (const auto& [j, m] : c.quad) s += max_eigenvalue_psd(hermitian_part(m)) * qp.blocks[j].cap;
    for (const auto& [j, m] : c.lin) s += 2.0 * m.norm() * std::sqrt(qp.blocks[j].cap);
    row_scale[r] = s > 0.0 ? s : 1.0;
  }

  std::vector<double> nu(nc, 0.0);
  if (opt.warm_multipliers.size() == nc) {
    for (std::size_t r = 0; r < nc; ++r) nu[r] = std::max(0.0, opt.warm_multipliers[r] * row_scale[r] / obj_scale);
  }
  std::vector<double> mu(nb, 0.0);

  const auto primal = [&](const std::vector<double>& nu_v, std::vector<double>* mu_out) {
    std::vector<CMatrix> x(nb);
    for (std::size_t i = 0; i < nb; ++i) {
      CMatrix q = qp.blocks[i].quad / obj_scale;
      CMatrix b = qp.blocks[i].lin / obj_scale;
      for (std::size_t r = 0; r < nc; ++r) {
        if (nu_v[r] == 0.0) continue;
        const double w = nu_v[r] / row_scale[r];
        for (const auto& [j, m] : qp.constraints[r].quad) {
          if (j == static_cast<int>(i)) q += w * m;
        }
        for (const auto& [j, m] : qp.constraints[r].lin) {
          if (j == static_cast<int>(i)) b += w * m;
        }
      }
      auto sol = detail::capped_quadratic(q, b, qp.blocks[i].cap);
      x[i] = std::move(sol.x);
      if (mu_out != nullptr) (*mu_out)[i] = sol.mu;
    }
    return x;
  };
  const auto slack = [&](std::size_t r, const std::vector<CMatrix>& x) {
    return qcqp_constraint(qp.constraints[r], x) / row_scale[r] + opt.margin;
  };

  QcqpResult res;
  auto& cert = res.certificate;
  std::vector<CMatrix> x = primal(nu, &mu);
  const auto kkt = [&](const std::vector<CMatrix>& xv) {
    double feas = 0.0;
    double comp = 0.0;
    for (std::size_t r = 0; r < nc; ++r) {
      const double h = slack(r, xv);
      feas = std::max(feas, std::max(h, 0.0));
      comp = std::max(comp, nu[r] > 0.0 ? std::abs(h) : 0.0);
    }
    return std::pair{feas, comp};
  };

  for (int sweep = 0; sweep < opt.max_iter; ++sweep) {
    const auto [feas, comp] = kkt(x);
    if (std::max(feas, comp) <= opt.tol) {
      cert.converged = true;
      break;
    }
    ++cert.iterations;
    for (std::size_t r = 0; r < nc; ++r) {
      std::vector<double> trial = nu;
      const auto h = [&](double t) {
        trial[r] = t;
        return slack(r, primal(trial, nullptr));
      };
      const double h0 = h(0.0);
      if (h0 <= 0.0) {
        nu[r] = 0.0;
        continue;
      }
      double lo = 0.0;
      double hlo = h0;
      double hi = std::max(nu[r], 1e-3);
      double hhi = h(hi);
      while (hhi > 0.0 && hi < 1e15) {
        lo = hi;
        hlo = hhi;
        hi *= 4.0;
        hhi = h(hi);
      }
      if (hhi > 0.0) {
        nu[r] = hi;  // constraint cannot be met through this coordinate alone
        continue;
      }
      std::uintmax_t iters = 100;
      const auto root = boost::math::tools::toms748_solve(h, lo, hi, hlo, hhi,
                                                          boost::math::tools::eps_tolerance<double>(50), iters);
      nu[r] = root.second;  // h <= 0 side
    }
    x = primal(nu, &mu);
  }

  const auto [feas, comp] = kkt(x);
  double stat = 0.0;
  {
    // Gradient of the Lagrangian in normalized units; zero up to rounding by construction.
    for (std::size_t i = 0; i < nb; ++i) {
      CMatrix g = (qp.blocks[i].quad * x[i] - qp.blocks[i].lin) / obj_scale + mu[i] * x[i];
      for (std::size_t r = 0; r < nc; ++r) {
        const double w = nu[r] / row_scale[r];
        for (const auto& [j, m] : qp.constraints[r].quad) {
          if (j == static_cast<int>(i)) g += w * m * x[i];
        }
        for (const auto& [j, m] : qp.constraints[r].lin) {
          if (j == static_cast<int>(i)) g -= w * m;
        }
      }
      stat = std::max(stat, g.norm() * std::sqrt(qp.blocks[i].cap));
    }
  }
  cert.stationarity = stat;
  cert.feasibility = feas;
  cert.complementarity = comp;
  cert.kkt_residual = std::max({stat, feas, comp});
  for (std::size_t i = 0; i < nb; ++i) cert.power_multipliers.push_back(mu[i] * obj_scale);
  for (std::size_t r = 0; r < nc; ++r) cert.constraint_multipliers.push_back(nu[r] * obj_scale / row_scale[r]);

  // Exact feasibility of the returned point (true constraints, no margin).
  const auto feasible = [&](const std::vector<CMatrix>& xv) {
    for (std::size_t i = 0; i < nb; ++i) {
      if (xv[i].squaredNorm() > qp.blocks[i].cap * (1.0 + 1e-12)) return false;
    }
    for (std::size_t r = 0; r < nc; ++r) {
      if (qcqp_constraint(qp.constraints[r], xv) > 0.0) return false;
    }
    return true;
  };
  if (!feasible(x)) {
    cert.backtracked = true;
    const auto mix = [&](double t) {
      std::vector<CMatrix> y(nb);
      for (std::size_t i = 0; i < nb; ++i) y[i] = (1.0 - t) * start[i] + t * x[i];
      return y;
    };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mix(mid)) ? lo : hi) = mid;
    }
    x = mix(lo);
  }
  const double start_obj = qcqp_objective(qp, start);
  res.objective = qcqp_objective(qp, x);
  if (!(res.objective <= start_obj) || !feasible(x)) {
    cert.kept_start = true;
    res.x = start;
    res.objective = start_obj;
  } else {
    res.x = std::move(x);
  }
  return res;
}

}  // namespace risicsc
