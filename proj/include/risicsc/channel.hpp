#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "risicsc/config.hpp"
#include "risicsc/linalg.hpp"

namespace risicsc {

/// One random channel realization. Index conventions: h_bu[k] is M x N, h_r is M x L,
/// h_ru[k] is L x N, h_uu[k][i] (i != k) is the N x N channel from UE i into UE k's radar
/// receiver, g_target[k] is the N x N target response seen by UE k.
struct ChannelSet {
  std::vector<CMatrix> h_bu;
  CMatrix h_r;
  std::vector<CMatrix> h_ru;
  std::vector<std::vector<CMatrix>> h_uu;  // h_uu[k][k] is an empty matrix
  std::vector<CMatrix> g_target;
  std::vector<double> target_angle;
  std::vector<cd> target_gain;

  int ues() const { return static_cast<int>(h_bu.size()); }
  int bs_antennas() const { return ues() > 0 ? static_cast<int>(h_bu[0].rows()) : 0; }
  int ue_antennas() const { return ues() > 0 ? static_cast<int>(h_bu[0].cols()) : 0; }
  int ris_elements() const { return static_cast<int>(h_r.cols()); }

  bool operator==(const ChannelSet& o) const {
    const auto eq = [](const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i]) return false;
      }
      return true;
    };
    if (!eq(h_bu, o.h_bu) || !eq(h_ru, o.h_ru) || !eq(g_target, o.g_target)) return false;
    if (h_r.rows() != o.h_r.rows() || h_r.cols() != o.h_r.cols() || h_r != o.h_r) return false;
    if (h_uu.size() != o.h_uu.size()) return false;
    for (std::size_t k = 0; k < h_uu.size(); ++k) {
      if (!eq(h_uu[k], o.h_uu[k])) return false;
    }
    return target_angle == o.target_angle && target_gain == o.target_gain;
  }
};

/// Linear power gain of a link: 10^(-(PL0 + 10 alpha log10(d/d0))/10).
inline double pathloss_gain(double distance_m, double exponent, const SystemConfig& cfg) {
  if (!(distance_m > 0.0)) throw ConfigError("pathloss_gain: distance must be positive");
  const double loss_db = cfg.pathloss_ref_db + 10.0 * exponent * std::log10(distance_m / cfg.ref_distance_m);
  return std::pow(10.0, -loss_db / 10.0);
}

/// Half-wavelength ULA response: entry m is exp(j pi m sin(angle)).
inline CVector steering_vector(double angle, int elements) {
  CVector a(elements);
  const double step = std::numbers::pi * std::sin(angle);
  for (int m = 0; m < elements; ++m) a(m) = std::polar(1.0, step * m);
  return a;
}

/// I.i.d. CN(0, gain) entries.
inline CMatrix gen_rayleigh(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(gain / 2.0));
  CMatrix h(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      h(i, j) = cd(re, im);
    }
  }
  if (gain == 0.0) h.setZero();
  return h;
}

/// Rician fading with a ULA line-of-sight term a_r(aoa) a_t(aod)^H. k_factor >= 1e6 is treated
/// as pure line of sight (no random draw).
inline CMatrix gen_rician(int rows, int cols, double gain, double k_factor, double aoa, double aod,
                          std::mt19937_64& rng) {
  const CMatrix los = steering_vector(aoa, rows) * steering_vector(aod, cols).adjoint();
  if (k_factor >= 1e6) return std::sqrt(gain) * los;
  const CMatrix nlos = gen_rayleigh(rows, cols, 1.0, rng);
  return std::sqrt(gain) * (std::sqrt(k_factor / (1.0 + k_factor)) * los + std::sqrt(1.0 / (1.0 + k_factor)) * nlos);
}

/// alpha a(angle) a(angle)^H.
inline CMatrix target_response(cd alpha, double angle, int n) {
  const CVector a = steering_vector(angle, n);
  return alpha * a * a.adjoint();
}

/// H_bu + H_r diag(exp(j theta)) H_ru.
inline CMatrix effective_channel(const CMatrix& h_bu, const CMatrix& h_r, const CMatrix& h_ru, const RVector& theta) {
  if (h_r.cols() != theta.size() || h_ru.rows() != theta.size() || h_r.rows() != h_bu.rows() ||
      h_ru.cols() != h_bu.cols()) {
    throw ConfigError("effective_channel: dimension mismatch");
  }
  if (theta.size() == 0) return h_bu;
  const CVector phi = theta.unaryExpr([](double t) { return std::polar(1.0, t); });
  return h_bu + h_r * phi.asDiagonal() * h_ru;
}

/// Angle of the line from `from` to `to`, seen by a ULA along the x-axis at `from`.
inline double array_angle(const Point& from, const Point& to) {
  return std::asin((to.x - from.x) / distance(from, to));
}

namespace detail {

inline std::mt19937_64 substream(std::uint64_t base, std::uint64_t link, std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(derive_seed(derive_seed(base, link), a), b));
}

// Rician matrix whose scattered part is drawn one RIS element at a time (a column of H_r or a row
// of H_ru), each from its own stream, so growing L only appends elements.
inline CMatrix rician_by_element(int rows, int cols, bool per_column, double gain, double k_factor, double aoa,
                                 double aod, std::uint64_t base, std::uint64_t link, std::uint64_t ue) {
  const CMatrix los = steering_vector(aoa, rows) * steering_vector(aod, cols).adjoint();
  if (k_factor >= 1e6) return std::sqrt(gain) * los;
  CMatrix nlos(rows, cols);
  const int count = per_column ? cols : rows;
  for (int e = 0; e < count; ++e) {
    auto rng = substream(base, link, ue, static_cast<std::uint64_t>(e));
    if (per_column) {
      nlos.col(e) = gen_rayleigh(rows, 1, 1.0, rng);
    } else {
      nlos.row(e) = gen_rayleigh(1, cols, 1.0, rng);
    }
  }
  return std::sqrt(gain) * (std::sqrt(k_factor / (1.0 + k_factor)) * los + std::sqrt(1.0 / (1.0 + k_factor)) * nlos);
}

}  // namespace detail

/// Draws all links. Each link (and each RIS element of the reflected links) uses its own stream
/// derived from one draw of `rng`, so two configs that differ only in L, or only in a path-loss
/// exponent, share the common part of their realizations.
inline ChannelSet realize_scenario(const SystemConfig& cfg, std::mt19937_64& rng) {
  const int k_ues = cfg.ues;
  const int m = cfg.bs_antennas;
  const int n = cfg.ue_antennas;
  const int l = cfg.ris_elements;
  const Geometry& geo = cfg.geometry;
  const std::uint64_t base = rng();
  enum : std::uint64_t { kBsRis = 1, kUeBs, kUeRis, kUeUe, kTarget };
  ChannelSet ch;

  ch.h_r = detail::rician_by_element(m, l, true, pathloss_gain(distance(geo.ris, geo.bs), cfg.exponents.r, cfg),
                                     cfg.rician_k, array_angle(geo.bs, geo.ris), array_angle(geo.ris, geo.bs), base,
                                     kBsRis, 0);
  for (int k = 0; k < k_ues; ++k) {
    const Point& ue = geo.ues[k];
    const auto uk = static_cast<std::uint64_t>(k);
    auto rng_bu = detail::substream(base, kUeBs, uk);
    ch.h_bu.push_back(gen_rayleigh(m, n, pathloss_gain(distance(ue, geo.bs), cfg.exponents.bu, cfg), rng_bu));
    ch.h_ru.push_back(detail::rician_by_element(l, n, false, pathloss_gain(distance(ue, geo.ris), cfg.exponents.ru, cfg),
                                                cfg.rician_k, array_angle(geo.ris, ue), array_angle(ue, geo.ris),
                                                base, kUeRis, uk));
  }
  ch.h_uu.resize(k_ues);
  for (int k = 0; k < k_ues; ++k) {
    ch.h_uu[k].resize(k_ues);
    for (int i = 0; i < k_ues; ++i) {
      if (i == k) continue;
      const double gain = pathloss_gain(distance(geo.ues[i], geo.ues[k]), cfg.exponents.uu, cfg);
      auto rng_uu = detail::substream(base, kUeUe, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i));
      ch.h_uu[k][i] = gen_rayleigh(n, n, gain, rng_uu);
    }
  }
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  for (int k = 0; k < k_ues; ++k) {
    const double angle = array_angle(geo.ues[k], geo.targets[k]);
    double gain = pathloss_gain(distance(geo.ues[k], geo.targets[k]), cfg.exponents.target, cfg);
    if (cfg.target_two_way) gain *= gain;
    auto rng_t = detail::substream(base, kTarget, static_cast<std::uint64_t>(k));
    const cd alpha = std::polar(std::sqrt(gain), phase(rng_t));
    ch.target_angle.push_back(angle);
    ch.target_gain.push_back(alpha);
    ch.g_target.push_back(target_response(alpha, angle, n));
  }
  return ch;
}

/// Realization for the scenario seed of `cfg`.
inline ChannelSet realize_scenario(const SystemConfig& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.seed, kStreamChannels));
  return realize_scenario(cfg, rng);
}

/// Same realization with the reflected path removed (RIS links blocked).
inline ChannelSet without_ris(ChannelSet ch) {
  ch.h_r.setZero();
  for (auto& h : ch.h_ru) h.setZero();
  return ch;
}

}  // namespace risicsc
