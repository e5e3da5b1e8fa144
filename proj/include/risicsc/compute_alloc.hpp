#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "risicsc/config.hpp"
#include "risicsc/metrics.hpp"

namespace risicsc {

/// Latency max(T_l, T_c) of one UE offloading v of its V bits.
inline double task_latency(double V, double c, double f_l, double f_e, double R, double v) {
  const double local = (V - v) * c / f_l;
  if (v <= 0.0) return local;
  return std::max(local, v / R + v * c / f_e);
}

/// Continuous offloading volume equalizing local and edge-side latency.
inline double optimal_offload_fraction(double V, double c, double f_l, double f_e, double R) {
  const double den = f_e * f_l + c * R * (f_e + f_l);
  if (!(den > 0.0)) throw NumericalError("optimal_offload_fraction: degenerate denominator");
  return V * c * R * f_e / den;
}

/// Integer minimizer of task_latency. The continuous optimum is rounded both ways; the immediate
/// neighbours are also scored so that a rounding error in the optimum cannot skip the true argmin.
/// Ties go to the smaller volume.
inline std::int64_t integer_offload(double V, double c, double f_l, double f_e, double R) {
  if (V <= 0.0 || !(R > 0.0) || !(f_e > 0.0)) return 0;
  const double vhat = optimal_offload_fraction(V, c, f_l, f_e, R);
  const auto top = static_cast<std::int64_t>(V);
  const auto lo = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(vhat)) - 1, 0, top);
  const auto hi = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(vhat)) + 1, 0, top);
  std::int64_t best = lo;
  double best_t = task_latency(V, c, f_l, f_e, R, static_cast<double>(lo));
  for (std::int64_t v = lo + 1; v <= hi; ++v) {
    const double t = task_latency(V, c, f_l, f_e, R, static_cast<double>(v));
    if (t < best_t) {
      best_t = t;
      best = v;
    }
  }
  return best;
}

/// Per-UE data of the edge CPU problem.
struct ComputeTask {
  double weight = 0.0;
  double bits = 0.0;
  double cycles_per_bit = 0.0;
  double local_cpu = 0.0;
  double rate = 0.0;
};

inline std::vector<ComputeTask> compute_tasks(const SystemConfig& cfg, const std::vector<double>& rates) {
  std::vector<ComputeTask> t;
  for (int k = 0; k < cfg.ues; ++k) {
    t.push_back({cfg.weights[k], cfg.task_bits[k], cfg.cycles_per_bit[k], cfg.local_cpu_hz[k], rates[k]});
  }
  return t;
}

/// Weighted latency with every UE at its continuous optimum for edge rates f.
inline double relaxed_compute_objective(const std::vector<ComputeTask>& tasks, const std::vector<double>& f) {
  double total = 0.0;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& t = tasks[k];
    const double cr = t.cycles_per_bit * t.rate;
    total += t.weight * t.bits * t.cycles_per_bit * (cr + f[k]) / (f[k] * t.local_cpu + cr * (f[k] + t.local_cpu));
  }
  return total;
}

struct EdgeAllocation {
  std::vector<double> f_e;
  double mu = 0.0;
  int iterations = 0;
};

/// Splits the edge CPU by bisection on the multiplier of the capacity constraint, with
/// f_k(mu) = (sqrt(xi V c^3 R^2 / mu) - c R f_l)/(f_l + c R) clipped at zero. Once the active set is
/// stable the sum is affine in 1/sqrt(mu), and mu is finished in closed form.
inline EdgeAllocation edge_allocation(const std::vector<ComputeTask>& tasks, double f_total) {
  if (!(f_total > 0.0)) throw ConfigError("edge_allocation: total edge CPU must be positive");
  const std::size_t k_ues = tasks.size();
  std::vector<double> a(k_ues), b(k_ues);
  double mu_hi = 0.0;
  for (std::size_t k = 0; k < k_ues; ++k) {
    const auto& t = tasks[k];
    if (!(t.rate > 0.0)) throw NumericalError("edge_allocation: UE " + std::to_string(k) + " has zero rate");
    const double cr = t.cycles_per_bit * t.rate;
    a[k] = std::sqrt(t.weight * t.bits * t.cycles_per_bit) * cr / (t.local_cpu + cr);
    b[k] = cr * t.local_cpu / (t.local_cpu + cr);
    mu_hi = std::max(mu_hi, t.weight * t.bits * t.cycles_per_bit / (t.local_cpu * t.local_cpu));
  }
  EdgeAllocation out;
  out.f_e.assign(k_ues, 0.0);
  if (mu_hi == 0.0) return out;  // nothing to compute anywhere

  const auto alloc = [&](double mu, std::vector<double>& f) {
    double sum = 0.0;
    for (std::size_t k = 0; k < k_ues; ++k) {
      f[k] = std::max(0.0, a[k] / std::sqrt(mu) - b[k]);
      sum += f[k];
    }
    return sum;
  };
  std::vector<double> f(k_ues);
  double mu_lo = mu_hi;
  while (alloc(mu_lo, f) < f_total) {
    mu_lo *= 0.25;
    ++out.iterations;
  }
  const double tol = 1e-9 * f_total;
  double mu = mu_lo;
  double sum = alloc(mu, f);
  // Closed-form multiplier on the current active set; accepted when the active set reproduces itself.
  const auto finish = [&] {
    double sa = 0.0;
    double sb = 0.0;
    for (std::size_t k = 0; k < k_ues; ++k) {
      if (f[k] > 0.0) {
        sa += a[k];
        sb += b[k];
      }
    }
    if (sa <= 0.0) return false;
    const double root = sa / (f_total + sb);
    const double mu_exact = 1.0 / (root * root);
    std::vector<double> g(k_ues);
    const double s_exact = alloc(mu_exact, g);
    for (std::size_t k = 0; k < k_ues; ++k) {
      if ((g[k] > 0.0) != (f[k] > 0.0)) return false;
    }
    if (std::abs(s_exact - f_total) > tol) return false;
    mu = mu_exact;
    sum = s_exact;
    f = g;
    return true;
  };
  bool exact = finish();
  while (!exact && out.iterations < 400) {
    mu = std::sqrt(mu_lo * mu_hi);
    sum = alloc(mu, f);
    (sum > f_total ? mu_lo : mu_hi) = mu;
    ++out.iterations;
    exact = finish();
  }
  out.f_e = f;
  out.mu = mu;
  return out;
}

/// Weighted latency of integer offloading volumes.
inline double compute_objective(const std::vector<ComputeTask>& tasks, const ComputeState& s) {
  double total = 0.0;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& t = tasks[k];
    total += t.weight * task_latency(t.bits, t.cycles_per_bit, t.local_cpu, s.f_e[k], t.rate, static_cast<double>(s.v[k]));
  }
  return total;
}

struct ComputeResult {
  ComputeState state;
  std::vector<double> trace;  // objective after every pass
  int iterations = 0;
};

inline std::vector<std::int64_t> offload_volumes(const std::vector<ComputeTask>& tasks, const std::vector<double>& f) {
  std::vector<std::int64_t> v(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& t = tasks[k];
    v[k] = integer_offload(t.bits, t.cycles_per_bit, t.local_cpu, f[k], t.rate);
  }
  return v;
}

/// Alternates integer offloading and edge CPU allocation for fixed rates. A new allocation is kept
/// only if the integer objective does not grow. `warm_f` seeds the edge rates (equal split if empty).
inline ComputeResult alternate_compute(const std::vector<double>& rates, const SystemConfig& cfg,
                                       const std::vector<double>& warm_f = {}) {
  const auto tasks = compute_tasks(cfg, rates);
  ComputeResult res;
  std::vector<double> f = warm_f;
  if (f.size() != tasks.size()) f.assign(tasks.size(), cfg.edge_cpu_total_hz / cfg.ues);
  res.state = {offload_volumes(tasks, f), f};
  double obj = compute_objective(tasks, res.state);
  res.trace.push_back(obj);
  for (int it = 0; it < cfg.max_iters.compute; ++it) {
    ++res.iterations;
    const auto alloc = edge_allocation(tasks, cfg.edge_cpu_total_hz);
    ComputeState cand{offload_volumes(tasks, alloc.f_e), alloc.f_e};
    const double cand_obj = compute_objective(tasks, cand);
    if (cand_obj > obj) break;
    const double change = std::abs(obj - cand_obj) / std::max(obj, std::numeric_limits<double>::min());
    res.state = std::move(cand);
    obj = cand_obj;
    res.trace.push_back(obj);
    if (change < cfg.epsilon) break;
  }
  return res;
}

inline ComputeResult alternate_compute(const ChannelSet& ch, const BeamformingState& s, const SystemConfig& cfg) {
  return alternate_compute(mmse_rates(cfg, ch, s.f_c, s.theta), cfg);
}

/// Every bit offloaded; edge CPU split in proportion to sqrt(xi V c).
inline ComputeState full_offload_compute(const SystemConfig& cfg) {
  ComputeState s;
  double norm = 0.0;
  for (int k = 0; k < cfg.ues; ++k) norm += std::sqrt(cfg.weights[k] * cfg.task_bits[k] * cfg.cycles_per_bit[k]);
  for (int k = 0; k < cfg.ues; ++k) {
    s.v.push_back(static_cast<std::int64_t>(cfg.task_bits[k]));
    const double share = norm > 0.0 ? std::sqrt(cfg.weights[k] * cfg.task_bits[k] * cfg.cycles_per_bit[k]) / norm
                                     : 1.0 / cfg.ues;
    s.f_e.push_back(share * cfg.edge_cpu_total_hz);
  }
  return s;
}

}  // namespace risicsc
