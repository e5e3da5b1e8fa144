#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "risicsc/beamforming.hpp"
#include "risicsc/channel.hpp"
#include "risicsc/compute_alloc.hpp"
#include "risicsc/config.hpp"
#include "risicsc/metrics.hpp"

namespace risicsc {

// Cap on filter / precoder / phase passes inside one closed-form iteration.
inline constexpr int kSingleUeRadioPasses = 1000;

inline std::int64_t su_offload(double V, double c, double f_l, double f_total, double R) {
  return integer_offload(V, c, f_l, f_total, R);
}

struct MrcDecoders {
  CVector w_c;
  CVector w_s;
};

/// Matched filters w_c = H f and w_s = G f.
inline MrcDecoders mrc_decoders(const CMatrix& h, const CMatrix& g, const CVector& f) {
  if (f.squaredNorm() == 0.0) throw ConfigError("mrc_decoders: zero precoder");
  return {h * f, g * f};
}

enum class PrecoderCase { kCommOnly = 1, kTwoRay = 2 };

struct TwoRayPrecoder {
  CVector f;
  cd a;
  cd b;
  PrecoderCase which = PrecoderCase::kCommOnly;
};

/// Maximizes |h^H f|^2 subject to ||f||^2 <= P and |g^H f|^2 >= eta. The optimum lies on the power
/// boundary and in span{h, g}. Throws InfeasibleError when eta > P ||g||^2.
inline TwoRayPrecoder two_ray_precoder(const CVector& h, const CVector& g, double power, double eta) {
  const double hh = h.squaredNorm();
  const double gg = g.squaredNorm();
  if (hh == 0.0) throw ConfigError("two_ray_precoder: zero communication direction");
  const cd hg = h.dot(g);  // h^H g
  const double abs_hg = std::abs(hg);
  TwoRayPrecoder out;
  const auto comm_only = [&] {
    out.a = std::sqrt(power / hh);
    out.b = 0.0;
    out.which = PrecoderCase::kCommOnly;
    out.f = out.a * h;
    return out;
  };
  if (eta <= power * abs_hg * abs_hg / hh) return comm_only();
  if (eta > power * gg) throw InfeasibleError(0, "radar SINR threshold exceeds the Cauchy bound P ||g||^2");
  const double den = hh * gg - abs_hg * abs_hg;
  if (den <= 1e-12 * hh * gg) return comm_only();  // collinear: only the aligned direction is left
  const double mag_a = std::sqrt(std::max(0.0, power * gg - eta) / den);
  const double mag_b = std::max(0.0, (std::sqrt(eta) - abs_hg * mag_a) / gg);
  out.a = mag_a;
  out.b = abs_hg > 0.0 ? std::polar(mag_b, -std::arg(hg)) : cd(mag_b, 0.0);
  out.which = PrecoderCase::kTwoRay;
  out.f = out.a * h + out.b * g;
  return out;
}

/// Phases aligning every reflected term with the direct term of w^H H f.
inline RVector su_ris_phase(const CVector& w_c, const CMatrix& h_bu, const CMatrix& h_r, const CMatrix& h_ru,
                            const CVector& f) {
  const auto angle = [](cd z) { return z == cd(0.0, 0.0) ? 0.0 : std::arg(z); };
  const double direct = angle(w_c.dot(h_bu * f));
  const CVector left = h_r.adjoint() * w_c;  // conj of (w^H H_r)
  const CVector right = h_ru * f;
  RVector theta(h_r.cols());
  for (Eigen::Index l = 0; l < theta.size(); ++l) theta(l) = wrap_phase(direct - angle(std::conj(left(l)) * right(l)));
  return theta;
}

struct SingleUeResult {
  BeamformingState state;
  ComputeState compute;
  LatencyReport report;
  std::vector<double> trace;  // weighted latency, starting value first
  std::vector<PrecoderCase> cases;
  int iterations = 0;
};

/// Alternating closed-form updates for one UE with one stream: offloading, matched filters,
/// two-ray precoder and aligned RIS phases.
inline SingleUeResult algorithm5(const SystemConfig& cfg, const ChannelSet& ch, const SolverOptions& opt = {}) {
  if (cfg.ues != 1 || cfg.streams != 1) throw ConfigError("algorithm5 needs ues = 1 and streams = 1");
  const double power = cfg.power_budget_mw[0];
  const double eta = cfg.sinr_threshold;
  const CMatrix& g_mat = ch.g_target[0];
  std::mt19937_64 rng(derive_seed(cfg.seed, kStreamInit + 1000ULL * static_cast<std::uint64_t>(opt.restart)));

  SingleUeResult res;
  BeamformingState& s = res.state;
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  s.theta.resize(ch.h_r.cols());
  for (Eigen::Index l = 0; l < s.theta.size(); ++l) s.theta(l) = wrap_phase(phase(rng));
  Eigen::JacobiSVD<CMatrix> svd(g_mat, Eigen::ComputeFullV);
  CVector f = std::sqrt(power) * CVector(svd.matrixV().col(0));
  if (opt.restart > 0) {
    std::normal_distribution<double> normal;
    CVector r(f.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = cd(normal(rng), normal(rng));
    r *= std::sqrt(power) / r.norm();
    if ((g_mat * r).squaredNorm() / cfg.noise_sense_mw >= eta) f = r;
  }
  if ((g_mat * f).squaredNorm() / cfg.noise_sense_mw < eta) {
    throw InfeasibleError(0, "radar SINR threshold exceeds the echo power at full budget");
  }

  const auto rate = [&](const CVector& fv, const RVector& th) {
    const CMatrix h = effective_channel(ch.h_bu[0], ch.h_r, ch.h_ru[0], th);
    return cfg.bandwidth_hz * std::log2(1.0 + (h * fv).squaredNorm() / cfg.noise_comm_mw);
  };
  const auto weighted = [&](double r, std::int64_t v) {
    return cfg.weights[0] * task_latency(cfg.task_bits[0], cfg.cycles_per_bit[0], cfg.local_cpu_hz[0],
                                         cfg.edge_cpu_total_hz, r, static_cast<double>(v));
  };
  double r = rate(f, s.theta);
  std::int64_t v = su_offload(cfg.task_bits[0], cfg.cycles_per_bit[0], cfg.local_cpu_hz[0], cfg.edge_cpu_total_hz, r);
  double obj = weighted(r, v);
  res.trace.push_back(obj);
  for (int it = 0; it < cfg.max_iters.single_ue; ++it) {
    ++res.iterations;
    // The offload split does not enter the radio block, so the filter / precoder / phase
    // alternation is run to its own fixed point; one pass at a time can crawl below epsilon
    // far from it.
    double gain = (effective_channel(ch.h_bu[0], ch.h_r, ch.h_ru[0], s.theta) * f).squaredNorm();
    PrecoderCase last = PrecoderCase::kCommOnly;
    for (int pass = 0; pass < kSingleUeRadioPasses; ++pass) {
      const CMatrix h = effective_channel(ch.h_bu[0], ch.h_r, ch.h_ru[0], s.theta);
      auto mrc = mrc_decoders(h, g_mat, f);
      const CVector h_dir = h.adjoint() * mrc.w_c / (std::sqrt(cfg.noise_comm_mw) * mrc.w_c.norm());
      const CVector g_dir = g_mat.adjoint() * mrc.w_s / (std::sqrt(cfg.noise_sense_mw) * mrc.w_s.norm());
      const auto pre = two_ray_precoder(h_dir, g_dir, power, eta);
      last = pre.which;
      f = pre.f;
      mrc = mrc_decoders(h, g_mat, f);
      if (opt.optimize_ris) s.theta = su_ris_phase(mrc.w_c, ch.h_bu[0], ch.h_r, ch.h_ru[0], f);
      const double next_gain = (effective_channel(ch.h_bu[0], ch.h_r, ch.h_ru[0], s.theta) * f).squaredNorm();
      const bool done = next_gain - gain <= 1e-12 * next_gain;
      gain = next_gain;
      if (done) break;
    }
    res.cases.push_back(last);
    r = rate(f, s.theta);
    v = su_offload(cfg.task_bits[0], cfg.cycles_per_bit[0], cfg.local_cpu_hz[0], cfg.edge_cpu_total_hz, r);
    const double next = weighted(r, v);
    const double change = std::abs(obj - next) / std::max(obj, std::numeric_limits<double>::min());
    obj = next;
    res.trace.push_back(obj);
    if (change < cfg.epsilon) break;
  }

  const CMatrix h = effective_channel(ch.h_bu[0], ch.h_r, ch.h_ru[0], s.theta);
  const auto mrc = mrc_decoders(h, g_mat, f);
  s.f_c = {CMatrix(f)};
  s.w_c = {CMatrix(mrc.w_c)};
  s.w_s = {mrc.w_s.normalized()};
  s.d_weight = {CMatrix::Constant(1, 1, cd(1.0 + (h * f).squaredNorm() / cfg.noise_comm_mw, 0.0))};
  s.frac_delta = {1.0 / r};
  s.frac_lambda = {cfg.weights[0] * static_cast<double>(v) / r};
  res.compute = {{v}, {cfg.edge_cpu_total_hz}};
  res.report = latency({r}, res.compute, cfg);
  return res;
}

}  // namespace risicsc
