#pragma once

#include <numbers>
#include <random>
#include <vector>

#include "risicsc/risicsc.hpp"

namespace testing_helpers {

using risicsc::cd;
using risicsc::CMatrix;
using risicsc::CVector;

inline CMatrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cd(n(rng), n(rng));
  return m;
}

inline CVector random_vector(int n, std::mt19937_64& rng) { return random_matrix(n, 1, rng); }

inline CVector random_unit(int n, std::mt19937_64& rng) { return random_vector(n, rng).normalized(); }

// Small synthetic scenario with unit-scale channels; avoids the path-loss magnitudes of the
// default layout so tolerances can be stated in absolute terms.
inline risicsc::SystemConfig toy_config(int k, int m, int n, int l, int d) {
  risicsc::SystemConfig cfg;
  cfg.ues = k;
  cfg.bs_antennas = m;
  cfg.ue_antennas = n;
  cfg.ris_elements = l;
  cfg.streams = d;
  cfg.bandwidth_hz = 1.0;
  cfg.noise_comm_mw = 0.5;
  cfg.noise_sense_mw = 0.5;
  cfg.power_budget_mw.assign(k, 2.0);
  cfg.weights.assign(k, 1.0 / k);
  cfg.sinr_threshold = 0.5;
  cfg.task_bits.assign(k, 1000.0);
  cfg.cycles_per_bit.assign(k, 1.0);
  cfg.local_cpu_hz.assign(k, 100.0);
  cfg.edge_cpu_total_hz = 400.0;
  cfg.geometry = risicsc::detail::default_geometry(k == 1 ? 1 : 2);
  if (k > 2) {
    cfg.geometry.ues.clear();
    cfg.geometry.targets.clear();
    for (int i = 0; i < k; ++i) {
      cfg.geometry.ues.push_back({240.0 + 5.0 * i, 40.0 + 3.0 * i});
      cfg.geometry.targets.push_back({260.0 + 5.0 * i, 40.0 + 3.0 * i});
    }
  }
  return cfg;
}

inline risicsc::ChannelSet toy_channels(const risicsc::SystemConfig& cfg, std::mt19937_64& rng) {
  risicsc::ChannelSet ch;
  const int k = cfg.ues, m = cfg.bs_antennas, n = cfg.ue_antennas, l = cfg.ris_elements;
  ch.h_r = random_matrix(m, l, rng, 0.3);
  ch.h_uu.resize(k);
  for (int i = 0; i < k; ++i) {
    ch.h_bu.push_back(random_matrix(m, n, rng));
    ch.h_ru.push_back(random_matrix(l, n, rng, 0.3));
    ch.h_uu[i].resize(k);
    for (int j = 0; j < k; ++j)
      if (j != i) ch.h_uu[i][j] = random_matrix(n, n, rng, 0.3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double angle = u(rng);
    const cd alpha = std::polar(1.5, u(rng) * 3.0);
    ch.target_angle.push_back(angle);
    ch.target_gain.push_back(alpha);
    ch.g_target.push_back(risicsc::target_response(alpha, angle, n));
  }
  return ch;
}

inline std::vector<CMatrix> random_precoders(const risicsc::SystemConfig& cfg, std::mt19937_64& rng) {
  std::vector<CMatrix> f;
  for (int k = 0; k < cfg.ues; ++k) {
    CMatrix x = random_matrix(cfg.ue_antennas, cfg.streams, rng);
    x *= std::sqrt(cfg.power_budget_mw[k]) / x.norm();
    f.push_back(x);
  }
  return f;
}

// Best |h^H f|^2 over a 100 x 100 grid of the feasible part of the power sphere inside span{h, g}:
// f = sqrt(P) (sqrt(s) g_hat + sqrt(1 - s) e^{jp} u) with s from the sensing boundary up to 1.
// Returns -1 when no candidate is feasible.
inline double two_ray_grid_best(const CVector& h, const CVector& g, double power, double eta) {
  const CVector g_hat = g.normalized();
  const double s_min = eta / (power * g.squaredNorm());
  if (s_min > 1.0) return -1.0;
  CVector u = h - g_hat * g_hat.dot(h);
  if (u.norm() <= 1e-12 * h.norm()) return power * std::norm(h.dot(g_hat));  // span{h, g} is one-dimensional
  u.normalize();
  double best = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double s = s_min + (1.0 - s_min) * i / 99.0;
    for (int j = 0; j < 100; ++j) {
      const CVector f = std::sqrt(power) * (std::sqrt(s) * g_hat + std::sqrt(1.0 - s) * std::polar(1.0, 2 * std::numbers::pi * j / 100.0) * u);
      best = std::max(best, std::norm(h.dot(f)));
    }
  }
  return best;
}

}  // namespace testing_helpers
