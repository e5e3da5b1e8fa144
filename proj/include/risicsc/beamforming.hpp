#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "risicsc/channel.hpp"
#include "risicsc/config.hpp"
#include "risicsc/linalg.hpp"
#include "risicsc/metrics.hpp"
#include "risicsc/qcqp.hpp"

namespace risicsc {

// Random rank-1 beam sets tried when the default start misses a radar requirement.
inline constexpr int kBeamSearchTrials = 2000;

struct SolverOptions {
  bool optimize_ris = true;  // false holds the RIS phases at their initial values
  int restart = 0;           // 0 is the deterministic start; >0 draws a randomized start
};

/// Per-UE weights omega_k = delta_k lambda_k scaled by B/ln 2, so the inner objective is measured
/// in the same units as sum_k omega_k R_k.
inline std::vector<double> rate_weights(const std::vector<double>& delta, const std::vector<double>& lambda,
                                        const SystemConfig& cfg) {
  std::vector<double> w(delta.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = delta[k] * lambda[k] * cfg.bandwidth_hz / std::numbers::ln2;
  return w;
}

inline std::vector<double> rate_weights(const BeamformingState& s, const SystemConfig& cfg) {
  return rate_weights(s.frac_delta, s.frac_lambda, cfg);
}

/// MMSE decoder (J_k + H F F^H H^H)^-1 H F.
inline CMatrix update_decoder(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, int k, double noise) {
  const CMatrix hf = h[k] * f[k];
  return solve_hpd(interference_plus_noise(h, f, k, noise) + hf * hf.adjoint(), hf);
}

/// D_k = (E_k^MMSE)^-1.
inline CMatrix update_weight(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, int k, double noise) {
  return hermitian_part(inverse_hpd(mmse_error(h, f, k, noise)));
}

/// Unit-norm maximizer of the radar SINR quotient for fixed precoders.
inline CVector update_radar_rx(const ChannelSet& ch, const std::vector<CMatrix>& f, int k, double noise) {
  return max_generalized_eigen(echo_covariance(ch, f, k), sensing_interference(ch, f, k, noise)).vector;
}

/// sum_k omega_k [tr(D_k E_k) - ln det D_k - d] with omega from rate_weights.
inline double inner_objective(const SystemConfig& cfg, const std::vector<CMatrix>& h, const BeamformingState& s,
                              const std::vector<double>& omega) {
  double v = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (omega[k] == 0.0) continue;
    const int kk = static_cast<int>(k);
    const CMatrix e = mse_matrix(h, s.f_c, s.w_c[k], kk, cfg.noise_comm_mw);
    v += omega[k] * ((s.d_weight[k] * e).trace().real() - logdet_hpd(s.d_weight[k]) -
                     static_cast<double>(s.f_c[k].cols()));
  }
  return v;
}

inline double inner_objective(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s,
                              const std::vector<double>& omega) {
  return inner_objective(cfg, effective_channels(ch, s.theta), s, omega);
}

/// eta w^H T_k w - |w^H G F|^2; the radar requirement holds iff this is <= 0.
inline double sensing_constraint_value(const SystemConfig& cfg, const ChannelSet& ch, const std::vector<CMatrix>& f,
                                       const CVector& w, int k) {
  const double interf = w.dot(sensing_interference(ch, f, k, cfg.noise_sense_mw) * w).real();
  return cfg.sinr_threshold * interf - (w.adjoint() * ch.g_target[k] * f[k]).squaredNorm();
}

/// Sensing requirement of UE k with the echo term replaced by its tangent at `anchor`:
/// eta sum_{i != k} ||w^H H_{k,i} F_i||^2 + eta sigma^2 ||w||^2 + ||s||^2 - 2 Re(q^H F_k s) <= 0 with
/// q = G^H w and s = F_k^(t)H q.
inline QcqpConstraint linearized_sensing_constraint(const SystemConfig& cfg, const ChannelSet& ch,
                                                    const std::vector<CMatrix>& anchor, const CVector& w, int k) {
  QcqpConstraint c;
  const double eta = cfg.sinr_threshold;
  const CVector q = ch.g_target[k].adjoint() * w;
  const CVector s = anchor[k].adjoint() * q;
  c.constant = eta * cfg.noise_sense_mw * w.squaredNorm() + s.squaredNorm();
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    const CVector a = ch.h_uu[k][i].adjoint() * w;
    c.quad.emplace_back(static_cast<int>(i), eta * a * a.adjoint());
  }
  c.lin.emplace_back(k, q * s.adjoint());
  return c;
}

/// Convex precoder subproblem: WMMSE quadratic objective, power caps and linearized sensing rows.
inline ConvexQuadraticProgram precoder_program(const SystemConfig& cfg, const ChannelSet& ch,
                                               const std::vector<CMatrix>& h, const BeamformingState& s,
                                               const std::vector<double>& omega) {
  const int k_ues = cfg.ues;
  const Eigen::Index m = h[0].rows();
  CMatrix agg = CMatrix::Zero(m, m);
  for (int k = 0; k < k_ues; ++k) {
    if (omega[k] == 0.0) continue;
    agg.noalias() += omega[k] * s.w_c[k] * s.d_weight[k] * s.w_c[k].adjoint();
  }
  agg = hermitian_part(agg);
  ConvexQuadraticProgram qp;
  for (int i = 0; i < k_ues; ++i) {
    QcqpBlock b;
    b.quad = hermitian_part(h[i].adjoint() * agg * h[i]);
    b.lin = omega[i] * h[i].adjoint() * s.w_c[i] * s.d_weight[i];
    b.cap = cfg.power_budget_mw[i];
    qp.blocks.push_back(std::move(b));
  }
  if (cfg.sinr_threshold > 0.0) {
    for (int k = 0; k < k_ues; ++k) qp.constraints.push_back(linearized_sensing_constraint(cfg, ch, s.f_c, s.w_s[k], k));
  }
  return qp;
}

inline QcqpResult update_precoders(const SystemConfig& cfg, const ChannelSet& ch, const std::vector<CMatrix>& h,
                                   const BeamformingState& s, const std::vector<double>& omega,
                                   const QcqpOptions& opt = {}) {
  return solve(precoder_program(cfg, ch, h, s, omega), s.f_c, opt);
}

/// RIS part of the inner objective: g(phi) = phi^H Xi phi + 2 Re(phi^T u), plus a phase-independent
/// constant, with Xi = C .* B^T.
struct RisQuadraticForm {
  CMatrix xi_mat;
  CVector u_vec;
  double lambda_max = 0.0;
  double constant = 0.0;
};

inline RisQuadraticForm ris_quadratic_form(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s,
                                           const std::vector<double>& omega) {
  const int k_ues = cfg.ues;
  const Eigen::Index l = ch.h_r.cols();
  RisQuadraticForm form;
  CMatrix b = CMatrix::Zero(l, l);
  std::vector<CMatrix> ru_f(k_ues), bu_f(k_ues);
  for (int i = 0; i < k_ues; ++i) {
    ru_f[i] = ch.h_ru[i] * s.f_c[i];
    bu_f[i] = ch.h_bu[i] * s.f_c[i];
    b.noalias() += ru_f[i] * ru_f[i].adjoint();
  }
  CMatrix c = CMatrix::Zero(l, l);
  CMatrix u_mat = CMatrix::Zero(l, l);
  for (int k = 0; k < k_ues; ++k) {
    if (omega[k] == 0.0) continue;
    const CMatrix wdw = s.w_c[k] * s.d_weight[k] * s.w_c[k].adjoint();
    const CMatrix hr_wdw = ch.h_r.adjoint() * wdw;  // L x M
    c.noalias() += omega[k] * hr_wdw * ch.h_r;
    for (int i = 0; i < k_ues; ++i) {
      // S_{k,i}^H = H_ru,i F_i F_i^H H_bu,i^H W D W^H H_r
      u_mat.noalias() += omega[k] * ru_f[i] * (bu_f[i].adjoint() * wdw * ch.h_r);
      form.constant += omega[k] * (s.d_weight[k] * s.w_c[k].adjoint() * bu_f[i] * bu_f[i].adjoint() * s.w_c[k])
                                      .trace()
                                      .real();
    }
    // P_k = H_ru,k F_k D_k W_k^H H_r
    u_mat.noalias() -= omega[k] * ru_f[k] * s.d_weight[k] * s.w_c[k].adjoint() * ch.h_r;
    const Eigen::Index d = s.f_c[k].cols();
    form.constant += omega[k] * (s.d_weight[k].trace().real() -
                                 2.0 * (s.d_weight[k] * s.w_c[k].adjoint() * bu_f[k]).trace().real() +
                                 cfg.noise_comm_mw * (s.d_weight[k] * s.w_c[k].adjoint() * s.w_c[k]).trace().real() -
                                 logdet_hpd(s.d_weight[k]) - static_cast<double>(d));
  }
  form.xi_mat = hermitian_part(c.cwiseProduct(b.transpose()));
  form.u_vec = u_mat.diagonal();
  form.lambda_max = max_eigenvalue_psd(form.xi_mat);
  return form;
}

inline CVector unit_modulus(const RVector& theta) {
  return theta.unaryExpr([](double t) { return std::polar(1.0, t); });
}

inline double ris_objective(const RisQuadraticForm& form, const CVector& phi) {
  return phi.dot(form.xi_mat * phi).real() + 2.0 * (phi.transpose() * form.u_vec).value().real();
}

/// Quadratic majorizer of g at phi_t built from lambda_max I - Xi.
inline double ris_surrogate(const RisQuadraticForm& form, const CVector& phi, const CVector& phi_t) {
  const Eigen::Index l = phi.size();
  const CMatrix shift = form.lambda_max * CMatrix::Identity(l, l) - form.xi_mat;
  return form.lambda_max * phi.squaredNorm() - 2.0 * phi.dot(shift * phi_t).real() + phi_t.dot(shift * phi_t).real() +
         2.0 * (phi.transpose() * form.u_vec).value().real();
}

/// One MM step: theta = arg((lambda_max I - Xi) phi_t - conj(u)), wrapped into (0, 2 pi].
inline RVector ris_mm_step(const RisQuadraticForm& form, const CVector& phi_t) {
  const CVector target = form.lambda_max * phi_t - form.xi_mat * phi_t - form.u_vec.conjugate();
  RVector theta(phi_t.size());
  for (Eigen::Index l = 0; l < theta.size(); ++l) {
    const cd z = std::abs(target(l)) > 0.0 ? target(l) : phi_t(l);
    theta(l) = wrap_phase(std::arg(z));
  }
  return theta;
}

/// MM iterations from `theta` until the relative descent drops below 1e-8 or `max_iter`.
inline RVector ris_mm(const RisQuadraticForm& form, RVector theta, int max_iter) {
  double g = ris_objective(form, unit_modulus(theta));
  const double scale = form.lambda_max * static_cast<double>(theta.size()) + 2.0 * form.u_vec.lpNorm<1>();
  for (int it = 0; it < max_iter; ++it) {
    RVector next = ris_mm_step(form, unit_modulus(theta));
    const double g_next = ris_objective(form, unit_modulus(next));
    if (g_next > g) break;
    const double drop = g - g_next;
    theta = std::move(next);
    g = g_next;
    if (drop <= 1e-8 * std::max(std::abs(g), scale * 1e-12)) break;
  }
  return theta;
}

/// Refreshes decoders and WMMSE weights to their MMSE values for the current precoders and phases.
inline void refresh_receivers(const SystemConfig& cfg, const std::vector<CMatrix>& h, BeamformingState& s) {
  for (int k = 0; k < cfg.ues; ++k) {
    s.w_c[k] = update_decoder(h, s.f_c, k, cfg.noise_comm_mw);
    s.d_weight[k] = update_weight(h, s.f_c, k, cfg.noise_comm_mw);
  }
}

inline void refresh_radar(const SystemConfig& cfg, const ChannelSet& ch, BeamformingState& s) {
  for (int k = 0; k < cfg.ues; ++k) s.w_s[k] = update_radar_rx(ch, s.f_c, k, cfg.noise_sense_mw);
}

struct InnerResult {
  BeamformingState state;
  std::vector<double> trace;  // inner objective after each full cycle, starting value first
  int iterations = 0;
  int qcqp_unconverged = 0;
};

/// Block descent over precoders, decoders and weights, radar filters and RIS phases for fixed
/// fractional weights. Expects decoders and weights already at their MMSE values. Stops on a
/// relative objective change below `tol` (cfg.epsilon when tol <= 0).
inline InnerResult inner_loop(const SystemConfig& cfg, const ChannelSet& ch, BeamformingState s,
                              const std::vector<double>& omega, const SolverOptions& opt = {}, double tol = 0.0) {
  if (tol <= 0.0) tol = cfg.epsilon;
  InnerResult res;
  auto h = effective_channels(ch, s.theta);
  double obj = inner_objective(cfg, h, s, omega);
  res.trace.push_back(obj);
  const bool ris = opt.optimize_ris && ch.h_r.cols() > 0 && ch.h_r.squaredNorm() > 0.0;
  std::vector<double> multipliers;
  for (int it = 0; it < cfg.max_iters.inner; ++it) {
    ++res.iterations;
    QcqpOptions qopt;
    qopt.warm_multipliers = multipliers;
    auto pre = update_precoders(cfg, ch, h, s, omega, qopt);
    if (!pre.certificate.converged) ++res.qcqp_unconverged;
    multipliers = pre.certificate.constraint_multipliers;
    s.f_c = std::move(pre.x);
    refresh_receivers(cfg, h, s);
    refresh_radar(cfg, ch, s);
    if (ris) {
      const auto form = ris_quadratic_form(cfg, ch, s, omega);
      s.theta = ris_mm(form, s.theta, cfg.max_iters.mm);
      h = effective_channels(ch, s.theta);
    }
    const double next = inner_objective(cfg, h, s, omega);
    const double change = std::abs(obj - next) / std::max(std::abs(obj), std::numeric_limits<double>::min());
    obj = next;
    res.trace.push_back(obj);
    if (change < tol) break;
  }
  refresh_receivers(cfg, h, s);
  res.state = std::move(s);
  return res;
}

/// Orthonormal basis of the complement of `v` in C^n, columns ordered deterministically unless an
/// rng is given (then the complement is randomly rotated).
inline CMatrix orthogonal_complement(const CVector& v, std::mt19937_64* rng) {
  const Eigen::Index n = v.size();
  CMatrix basis(n, n);
  basis.col(0) = v.normalized();
  if (rng != nullptr) {
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 1; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) basis(i, j) = cd(normal(*rng), normal(*rng));
    }
  } else {
    basis.rightCols(n - 1) = CMatrix::Identity(n, n).rightCols(n - 1);
  }
  Eigen::HouseholderQR<CMatrix> qr(basis);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  return q.rightCols(n - 1);
}

namespace detail {

/// Least powers meeting every radar requirement with unit beams `v` and MVDR receivers, by the
/// fixed point p_k <- target / q_k(p) (monotone from zero). Empty when a budget is exceeded.
inline std::optional<std::vector<double>> least_sensing_powers(const SystemConfig& cfg, const ChannelSet& ch,
                                                               const std::vector<CVector>& v, double target) {
  const int k_ues = static_cast<int>(v.size());
  std::vector<double> p(k_ues, 0.0);
  for (int it = 0; it < 500; ++it) {
    std::vector<double> next(k_ues);
    double change = 0.0;
    for (int k = 0; k < k_ues; ++k) {
      const Eigen::Index n = ch.g_target[k].rows();
      CMatrix t = cfg.noise_sense_mw * CMatrix::Identity(n, n);
      for (int i = 0; i < k_ues; ++i) {
        if (i == k) continue;
        const CVector c = ch.h_uu[k][i] * v[i];
        t.noalias() += p[i] * c * c.adjoint();
      }
      const CVector g = ch.g_target[k] * v[k];
      next[k] = target / g.dot(t.ldlt().solve(g)).real();
      if (!(next[k] <= cfg.power_budget_mw[k])) return std::nullopt;
      change = std::max(change, std::abs(next[k] - p[k]) / next[k]);
    }
    p = std::move(next);
    if (change < 1e-10) return p;
  }
  return std::nullopt;
}

}  // namespace detail

/// Feasible starting point: precoders aimed at the target, random phases, MVDR radar filters and
/// MMSE receivers. Interferers are backed off when a radar requirement is missed.
inline BeamformingState initial_state(const SystemConfig& cfg, const ChannelSet& ch, const SolverOptions& opt = {}) {
  const int k_ues = cfg.ues;
  const int d = cfg.streams;
  std::mt19937_64 rng(derive_seed(cfg.seed, kStreamInit + 1000ULL * static_cast<std::uint64_t>(opt.restart)));
  BeamformingState s;
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  s.theta.resize(ch.h_r.cols());
  for (Eigen::Index l = 0; l < s.theta.size(); ++l) s.theta(l) = wrap_phase(phase(rng));
  for (int k = 0; k < k_ues; ++k) {
    const double p = cfg.power_budget_mw[k];
    Eigen::JacobiSVD<CMatrix> svd(ch.g_target[k], Eigen::ComputeFullV);
    const CVector lead = svd.matrixV().col(0);
    CMatrix f = CMatrix::Zero(lead.size(), d);
    f.col(0) = std::sqrt(d > 1 ? 0.9 * p : p) * lead;
    if (d > 1) {
      const CMatrix rest = orthogonal_complement(lead, opt.restart > 0 ? &rng : nullptr);
      for (int j = 1; j < d; ++j) f.col(j) = std::sqrt(0.1 * p / (d - 1)) * rest.col(j - 1);
    }
    s.f_c.push_back(std::move(f));
  }
  const double target = cfg.sinr_threshold * (1.0 + 1e-6);
  const auto sinr = [&](int k) {
    return radar_sinr(ch, s.f_c, update_radar_rx(ch, s.f_c, k, cfg.noise_sense_mw), k, cfg.noise_sense_mw);
  };
  for (int k = 0; k < k_ues; ++k) {
    const double sv = Eigen::JacobiSVD<CMatrix>(ch.g_target[k]).singularValues()(0);
    const double top = cfg.power_budget_mw[k] * sv * sv / cfg.noise_sense_mw;
    if (top < target) throw InfeasibleError(k, "radar SINR requirement unreachable even without interference");
  }
  const auto all_ok = [&] {
    for (int k = 0; k < k_ues; ++k) {
      if (sinr(k) < target) return false;
    }
    return true;
  };
  // Back off interferers of the worst UE. Cheap, keeps the full-rank start, but can stall when
  // the UEs hurt each other.
  const std::vector<CMatrix> full_rank = s.f_c;
  for (int round = 0; round < 50; ++round) {
    int worst = -1;
    double worst_ratio = 1.0;
    for (int k = 0; k < k_ues; ++k) {
      const double ratio = sinr(k) / target;
      if (ratio < worst_ratio) {
        worst_ratio = ratio;
        worst = k;
      }
    }
    if (worst < 0) break;
    const std::vector<CMatrix> base = s.f_c;
    const auto scaled = [&](double t) {
      for (int i = 0; i < k_ues; ++i) s.f_c[i] = i == worst ? base[i] : CMatrix(std::sqrt(t) * base[i]);
    };
    scaled(0.0);
    if (sinr(worst) < target) break;
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      scaled(mid);
      (sinr(worst) >= target ? lo : hi) = mid;
    }
    scaled(lo);
  }
  if (!all_ok()) {
    // Rank-1 beams, so N >= 2 receivers can null each interferer. Lead beams first, then random
    // directions; keep the set with the most power headroom.
    std::vector<CVector> best_v;
    std::vector<double> best_p;
    double best_load = std::numeric_limits<double>::infinity();
    const auto consider = [&](const std::vector<CVector>& v) {
      const auto p = detail::least_sensing_powers(cfg, ch, v, target);
      if (!p) return;
      double load = 0.0;
      for (int k = 0; k < k_ues; ++k) load = std::max(load, (*p)[k] / cfg.power_budget_mw[k]);
      if (load < best_load) {
        best_load = load;
        best_v = v;
        best_p = *p;
      }
    };
    std::vector<CVector> v(k_ues);
    for (int k = 0; k < k_ues; ++k) v[k] = full_rank[k].col(0).normalized();
    consider(v);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < kBeamSearchTrials; ++trial) {
      for (int k = 0; k < k_ues; ++k) {
        for (Eigen::Index i = 0; i < v[k].size(); ++i) v[k](i) = cd(normal(rng), normal(rng));
        v[k].normalize();
      }
      consider(v);
    }
    if (best_v.empty()) {
      int worst = 0;
      for (int k = 1; k < k_ues; ++k) {
        if (sinr(k) < sinr(worst)) worst = k;
      }
      throw InfeasibleError(worst, "no feasible starting point for the radar SINR requirement");
    }
    // Common up-scaling only raises every SINR.
    for (int k = 0; k < k_ues; ++k) {
      s.f_c[k] = CMatrix::Zero(full_rank[k].rows(), d);
      s.f_c[k].col(0) = std::sqrt(best_p[k] / best_load) * best_v[k];
    }
  }
  s.w_s.resize(k_ues);
  refresh_radar(cfg, ch, s);
  for (int k = 0; k < k_ues; ++k) {
    if (radar_sinr(ch, s.f_c, s.w_s[k], k, cfg.noise_sense_mw) < cfg.sinr_threshold) {
      throw InfeasibleError(k, "no feasible starting point for the radar SINR requirement");
    }
  }
  s.w_c.resize(k_ues);
  s.d_weight.resize(k_ues);
  refresh_receivers(cfg, effective_channels(ch, s.theta), s);
  s.frac_delta.assign(k_ues, 0.0);
  s.frac_lambda.assign(k_ues, 0.0);
  return s;
}

}  // namespace risicsc
