#pragma once

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <vector>

#include "risicsc/channel.hpp"
#include "risicsc/config.hpp"
#include "risicsc/linalg.hpp"

namespace risicsc {

/// Precoders (N x d), decoders (M x d), radar receive vectors (N), RIS phases stored as angles,
/// WMMSE weights (d x d) and the two fractional auxiliaries per UE.
struct BeamformingState {
  std::vector<CMatrix> f_c;
  std::vector<CMatrix> w_c;
  std::vector<CVector> w_s;
  RVector theta;
  std::vector<CMatrix> d_weight;
  std::vector<double> frac_delta;
  std::vector<double> frac_lambda;
};

/// Offloaded bits and edge CPU rate per UE.
struct ComputeState {
  std::vector<std::int64_t> v;
  std::vector<double> f_e;
};

struct LatencyReport {
  std::vector<double> t_local;
  std::vector<double> t_offload;
  std::vector<double> t_edge;
  std::vector<double> t_ue;
  std::vector<double> rates;  // bit/s used for t_offload
  double weighted_total = 0.0;
};

inline std::vector<CMatrix> effective_channels(const ChannelSet& ch, const RVector& theta) {
  std::vector<CMatrix> h;
  h.reserve(ch.h_bu.size());
  for (std::size_t k = 0; k < ch.h_bu.size(); ++k) h.push_back(effective_channel(ch.h_bu[k], ch.h_r, ch.h_ru[k], theta));
  return h;
}

/// J_k = sum_{i != k} H_i F_i F_i^H H_i^H + sigma^2 I.
inline CMatrix interference_plus_noise(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, int k,
                                       double noise) {
  const Eigen::Index m = h[k].rows();
  CMatrix j = noise * CMatrix::Identity(m, m);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    const CMatrix hf = h[i] * f[i];
    j.noalias() += hf * hf.adjoint();
  }
  return j;
}

inline CMatrix interference_plus_noise(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s,
                                       int k) {
  return interference_plus_noise(effective_channels(ch, s.theta), s.f_c, k, cfg.noise_comm_mw);
}

/// Rate of UE k after projecting onto decoder W: B log2 det(I + W^H H F F^H H^H W (W^H J W)^-1).
inline double offload_rate(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, const CMatrix& w, int k,
                           double noise, double bandwidth) {
  const CMatrix j = interference_plus_noise(h, f, k, noise);
  const CMatrix whjw = w.adjoint() * j * w;
  const CMatrix whhf = w.adjoint() * h[k] * f[k];
  const double nats = logdet_hpd(whjw + whhf * whhf.adjoint()) - logdet_hpd(whjw);
  return bandwidth * nats / std::numbers::ln2;
}

inline double offload_rate(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s, int k) {
  return offload_rate(effective_channels(ch, s.theta), s.f_c, s.w_c[k], k, cfg.noise_comm_mw, cfg.bandwidth_hz);
}

/// E_k^MMSE = I - F^H H^H (J + H F F^H H^H)^-1 H F.
inline CMatrix mmse_error(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, int k, double noise) {
  const CMatrix hf = h[k] * f[k];
  const CMatrix cov = interference_plus_noise(h, f, k, noise) + hf * hf.adjoint();
  const Eigen::Index d = f[k].cols();
  return hermitian_part(CMatrix::Identity(d, d) - hf.adjoint() * solve_hpd(cov, hf));
}

/// Rate with the MMSE decoder, -B log2 det E^MMSE.
inline double mmse_rate(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, int k, double noise,
                        double bandwidth) {
  return -bandwidth * logdet_hpd(mmse_error(h, f, k, noise)) / std::numbers::ln2;
}

inline std::vector<double> mmse_rates(const SystemConfig& cfg, const ChannelSet& ch, const std::vector<CMatrix>& f,
                                      const RVector& theta) {
  const auto h = effective_channels(ch, theta);
  std::vector<double> r(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    r[k] = mmse_rate(h, f, static_cast<int>(k), cfg.noise_comm_mw, cfg.bandwidth_hz);
  }
  return r;
}

/// E_k = (W^H H F - I)(W^H H F - I)^H + sum_{i != k} W^H H_i F_i F_i^H H_i^H W + sigma^2 W^H W.
inline CMatrix mse_matrix(const std::vector<CMatrix>& h, const std::vector<CMatrix>& f, const CMatrix& w, int k,
                          double noise) {
  const Eigen::Index d = f[k].cols();
  const CMatrix e = w.adjoint() * h[k] * f[k] - CMatrix::Identity(d, d);
  CMatrix out = e * e.adjoint() + noise * w.adjoint() * w;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    const CMatrix x = w.adjoint() * h[i] * f[i];
    out.noalias() += x * x.adjoint();
  }
  return hermitian_part(out);
}

inline CMatrix mse_matrix(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s, int k) {
  return mse_matrix(effective_channels(ch, s.theta), s.f_c, s.w_c[k], k, cfg.noise_comm_mw);
}

/// T_k = sum_{i != k} H_{k,i} F_i F_i^H H_{k,i}^H + sigma_s^2 I.
inline CMatrix sensing_interference(const ChannelSet& ch, const std::vector<CMatrix>& f, int k, double noise) {
  const Eigen::Index n = ch.g_target[k].rows();
  CMatrix t = noise * CMatrix::Identity(n, n);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (static_cast<int>(i) == k) continue;
    const CMatrix x = ch.h_uu[k][i] * f[i];
    t.noalias() += x * x.adjoint();
  }
  return t;
}

/// Echo signal covariance G F F^H G^H.
inline CMatrix echo_covariance(const ChannelSet& ch, const std::vector<CMatrix>& f, int k) {
  const CMatrix gf = ch.g_target[k] * f[k];
  return gf * gf.adjoint();
}

inline double radar_sinr(const ChannelSet& ch, const std::vector<CMatrix>& f, const CVector& w_s, int k,
                         double noise) {
  if (w_s.squaredNorm() == 0.0) throw ConfigError("radar_sinr: zero receive vector");
  const double num = (w_s.adjoint() * ch.g_target[k] * f[k]).squaredNorm();
  const double den = w_s.dot(sensing_interference(ch, f, k, noise) * w_s).real();
  return num / den;
}

inline double radar_sinr(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s, int k) {
  return radar_sinr(ch, s.f_c, s.w_s[k], k, cfg.noise_sense_mw);
}

/// Per-UE latency branches for given rates. Throws when bits are offloaded over a dead link or
/// to a UE without edge CPU.
inline LatencyReport latency(const std::vector<double>& rates, const ComputeState& compute, const SystemConfig& cfg) {
  const int k_ues = cfg.ues;
  LatencyReport rep;
  rep.rates = rates;
  for (int k = 0; k < k_ues; ++k) {
    const double v = static_cast<double>(compute.v[k]);
    if (v < 0.0 || v > cfg.task_bits[k]) throw ConfigError("latency: offloaded bits outside [0, V]");
    const double local = (cfg.task_bits[k] - v) * cfg.cycles_per_bit[k] / cfg.local_cpu_hz[k];
    double up = 0.0;
    double edge = 0.0;
    if (v > 0.0) {
      if (!(rates[k] > 0.0)) throw NumericalError("latency: UE " + std::to_string(k) + " offloads over a zero rate");
      if (!(compute.f_e[k] > 0.0)) {
        throw NumericalError("latency: UE " + std::to_string(k) + " offloads without edge CPU");
      }
      up = v / rates[k];
      edge = v * cfg.cycles_per_bit[k] / compute.f_e[k];
    }
    rep.t_local.push_back(local);
    rep.t_offload.push_back(up);
    rep.t_edge.push_back(edge);
    rep.t_ue.push_back(std::max(local, up + edge));
    rep.weighted_total += cfg.weights[k] * rep.t_ue.back();
  }
  return rep;
}

inline LatencyReport latency(const SystemConfig& cfg, const ChannelSet& ch, const BeamformingState& s,
                             const ComputeState& compute) {
  return latency(mmse_rates(cfg, ch, s.f_c, s.theta), compute, cfg);
}

/// True when every precoder meets its power budget within 1e-9 relative.
inline bool power_feasible(const BeamformingState& s, const SystemConfig& cfg, double rel_tol = 1e-9) {
  for (int k = 0; k < cfg.ues; ++k) {
    if (s.f_c[k].squaredNorm() > cfg.power_budget_mw[k] * (1.0 + rel_tol)) return false;
  }
  return true;
}

}  // namespace risicsc
