#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "risicsc/beamforming.hpp"
#include "risicsc/config.hpp"
#include "risicsc/metrics.hpp"

namespace risicsc {

struct AuxVariables {
  std::vector<double> delta;
  std::vector<double> lambda;
};

/// delta_k = 1/R_k, lambda_k = xi_k v_k / R_k.
inline AuxVariables init_aux(const std::vector<double>& rates, const std::vector<double>& weights,
                             const std::vector<double>& volumes) {
  AuxVariables a;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    if (!(rates[k] > 0.0)) throw NumericalError("init_aux: UE " + std::to_string(k) + " has zero rate");
    a.delta.push_back(1.0 / rates[k]);
    a.lambda.push_back(weights[k] * volumes[k] / rates[k]);
  }
  return a;
}

struct Residuals {
  std::vector<double> chi;
  std::vector<double> kappa;
};

/// chi_k = delta_k R_k - 1, kappa_k = lambda_k R_k - xi_k v_k.
inline Residuals residuals(const AuxVariables& a, const std::vector<double>& rates, const std::vector<double>& weights,
                           const std::vector<double>& volumes) {
  Residuals r;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    r.chi.push_back(a.delta[k] * rates[k] - 1.0);
    r.kappa.push_back(a.lambda[k] * rates[k] - weights[k] * volumes[k]);
  }
  return r;
}

inline double residual_sq(const Residuals& r) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.chi.size(); ++k) s += r.chi[k] * r.chi[k] + r.kappa[k] * r.kappa[k];
  return s;
}

/// Dimensionless residual size: max over UEs of |chi_k| and |kappa_k| / (xi_k v_k).
inline double residual_max(const Residuals& r, const std::vector<double>& weights, const std::vector<double>& volumes) {
  double m = 0.0;
  for (std::size_t k = 0; k < r.chi.size(); ++k) {
    m = std::max(m, std::abs(r.chi[k]));
    const double scale = weights[k] * volumes[k];
    if (scale > 0.0) m = std::max(m, std::abs(r.kappa[k]) / scale);
  }
  return m;
}

struct NewtonStep {
  AuxVariables aux;
  int power = 0;  // accepted exponent i of the damping factor zeta^i
};

/// Damped Newton update of the auxiliaries for fixed rates. i is the smallest exponent with
/// ||res(next)||^2 <= (1 - eps zeta^i)^2 ||res(current)||^2.
inline NewtonStep newton_step(const AuxVariables& a, const std::vector<double>& rates,
                              const std::vector<double>& weights, const std::vector<double>& volumes, double zeta,
                              double eps) {
  const Residuals r = residuals(a, rates, weights, volumes);
  const double cur = residual_sq(r);
  if (cur == 0.0) return {a, 0};
  double damp = 1.0;
  for (int i = 0; i <= 60; ++i) {
    AuxVariables next = a;
    for (std::size_t k = 0; k < rates.size(); ++k) {
      next.delta[k] -= damp * r.chi[k] / rates[k];
      next.lambda[k] -= damp * r.kappa[k] / rates[k];
    }
    const double nxt = residual_sq(residuals(next, rates, weights, volumes));
    const double bound = (1.0 - eps * damp) * (1.0 - eps * damp) * cur;
    if (nxt <= bound) return {next, i};
    damp *= zeta;
  }
  throw NumericalError("newton_step: damping search stagnated");
}

inline std::vector<double> as_real(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

struct FractionalResult {
  BeamformingState state;
  std::vector<double> residual_trace;  // dimensionless residual before each Newton step
  int iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
};

inline double ratio_sum(const std::vector<double>& rates, const std::vector<double>& weights,
                        const std::vector<double>& volumes) {
  double s = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) s += weights[k] * volumes[k] / rates[k];
  return s;
}

/// Alternates the inner beamforming solve with auxiliary weights delta_k lambda_k and a Newton step
/// on the auxiliaries. The residual is also checked after the beamformers are re-solved for the
/// trial auxiliaries; if it grew, the trial is pulled back toward the last accepted point by zeta.
/// Without this the weights can flip between UEs forever. Returns the iterate with the smallest
/// sum of xi_k v_k / R_k seen, with delta_k = 1/R_k and lambda_k = xi_k v_k / R_k at its rates.
inline FractionalResult outer_loop(const SystemConfig& cfg, const ChannelSet& ch, BeamformingState s,
                                   const ComputeState& compute, const SolverOptions& opt = {}) {
  FractionalResult res;
  const auto volumes = as_real(compute.v);
  auto rates = mmse_rates(cfg, ch, s.f_c, s.theta);
  AuxVariables aux = init_aux(rates, cfg.weights, volumes);
  s.frac_delta = aux.delta;
  s.frac_lambda = aux.lambda;
  const bool idle = std::all_of(volumes.begin(), volumes.end(), [](double v) { return v == 0.0; });
  if (idle) {
    res.converged = true;
    res.state = std::move(s);
    return res;
  }
  BeamformingState best = s;
  std::vector<double> best_rates = rates;
  double best_obj = ratio_sum(rates, cfg.weights, volumes);

  // last accepted point and the full Newton direction taken from it
  bool have_base = false;
  AuxVariables base_aux, dir;
  double base_r = 0.0;
  double damp = 1.0;
  int stalls = 0;
  // Inexact Newton: the inner solve is tightened with the residual, otherwise its leftover
  // progress keeps the rates (and so the residual) moving at about epsilon.
  double inner_tol = cfg.epsilon;
  for (int it = 0; it < cfg.max_iters.fractional; ++it) {
    ++res.iterations;
    auto inner = inner_loop(cfg, ch, s, rate_weights(aux.delta, aux.lambda, cfg), opt, inner_tol);
    res.inner_iterations += inner.iterations;
    rates = mmse_rates(cfg, ch, inner.state.f_c, inner.state.theta);
    if (const double obj = ratio_sum(rates, cfg.weights, volumes); obj < best_obj) {
      best_obj = obj;
      best = inner.state;
      best_rates = rates;
    }
    const double r = residual_max(residuals(aux, rates, cfg.weights, volumes), cfg.weights, volumes);
    res.residual_trace.push_back(r);
    inner_tol = std::clamp(0.1 * r, 1e-12, cfg.epsilon);
    if (r < 1e-6) {
      res.converged = true;
      break;
    }
    if (have_base && r > base_r && damp > 1e-3) {
      damp *= cfg.newton_step;
      for (std::size_t k = 0; k < aux.delta.size(); ++k) {
        aux.delta[k] = base_aux.delta[k] + damp * dir.delta[k];
        aux.lambda[k] = base_aux.lambda[k] + damp * dir.lambda[k];
      }
      s = std::move(inner.state);
      continue;
    }
    if (damp <= 1e-3 && ++stalls >= 25) break;  // beamformers jump between optima; keep the best iterate
    have_base = true;
    base_aux = aux;
    base_r = r;
    damp = 1.0;
    const AuxVariables next = newton_step(aux, rates, cfg.weights, volumes, cfg.newton_step, cfg.newton_eps).aux;
    dir = aux;
    for (std::size_t k = 0; k < aux.delta.size(); ++k) {
      dir.delta[k] = next.delta[k] - aux.delta[k];
      dir.lambda[k] = next.lambda[k] - aux.lambda[k];
    }
    aux = next;
    s = std::move(inner.state);
  }
  aux = init_aux(best_rates, cfg.weights, volumes);
  best.frac_delta = aux.delta;
  best.frac_lambda = aux.lambda;
  res.state = std::move(best);
  return res;
}

}  // namespace risicsc
