#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "risicsc/beamforming.hpp"
#include "risicsc/channel.hpp"
#include "risicsc/compute_alloc.hpp"
#include "risicsc/config.hpp"
#include "risicsc/fractional.hpp"
#include "risicsc/metrics.hpp"

namespace risicsc {

struct TraceRecord {
  int iteration = 0;
  double weighted_latency = 0.0;
  std::vector<double> t_ue;
};

struct SolveResult {
  BeamformingState state;
  ComputeState compute;
  LatencyReport report;
  std::vector<TraceRecord> trace;  // one record per outer iteration
  double initial_latency = 0.0;
  int iterations = 0;
  int fractional_iterations = 0;
  int inner_iterations = 0;
};

struct DriverOptions {
  SolverOptions solver;
  std::optional<ComputeState> fixed_compute;  // hold offloading and edge CPU fixed (full offloading)
  std::optional<RVector> initial_theta;        // overrides the random initial RIS phases
};

/// Block coordinate descent between compute allocation and beamforming. Each pass re-solves the
/// beamforming for the current offloading volumes, then re-allocates compute for the new rates; the
/// pair is kept only if the weighted latency does not grow, so the trace is non-increasing.
inline SolveResult algorithm4(const SystemConfig& cfg, const ChannelSet& ch, const DriverOptions& opt = {}) {
  SolveResult res;
  const bool idle = std::all_of(cfg.task_bits.begin(), cfg.task_bits.end(), [](double v) { return v == 0.0; });
  if (idle) {
    res.compute.v.assign(cfg.ues, 0);
    res.compute.f_e.assign(cfg.ues, cfg.edge_cpu_total_hz / cfg.ues);
    res.report = latency(std::vector<double>(cfg.ues, 0.0), res.compute, cfg);
    res.trace.push_back({1, res.report.weighted_total, res.report.t_ue});
    res.iterations = 1;
    return res;
  }
  BeamformingState s = initial_state(cfg, ch, opt.solver);
  if (opt.initial_theta) {
    s.theta = *opt.initial_theta;
    refresh_receivers(cfg, effective_channels(ch, s.theta), s);
  }
  auto rates = mmse_rates(cfg, ch, s.f_c, s.theta);
  ComputeState compute = opt.fixed_compute ? *opt.fixed_compute : alternate_compute(rates, cfg).state;
  double current = latency(rates, compute, cfg).weighted_total;
  res.initial_latency = current;
  s.frac_delta.assign(cfg.ues, 0.0);
  s.frac_lambda.assign(cfg.ues, 0.0);

  for (int it = 0; it < cfg.max_iters.bcd; ++it) {
    ++res.iterations;
    const double before = current;
    auto frac = outer_loop(cfg, ch, s, compute, opt.solver);
    res.fractional_iterations += frac.iterations;
    res.inner_iterations += frac.inner_iterations;
    const auto cand_rates = mmse_rates(cfg, ch, frac.state.f_c, frac.state.theta);
    const ComputeState cand_compute =
        opt.fixed_compute ? compute : alternate_compute(cand_rates, cfg, compute.f_e).state;
    const double cand = latency(cand_rates, cand_compute, cfg).weighted_total;
    if (cand <= current) {
      s = std::move(frac.state);
      rates = cand_rates;
      compute = cand_compute;
      current = cand;
    }
    const auto rep = latency(rates, compute, cfg);
    res.trace.push_back({res.iterations, rep.weighted_total, rep.t_ue});
    const double change = std::abs(before - current) / std::max(before, std::numeric_limits<double>::min());
    if (change < cfg.epsilon) break;
  }
  res.state = std::move(s);
  res.compute = std::move(compute);
  res.report = latency(rates, res.compute, cfg);
  return res;
}

}  // namespace risicsc
