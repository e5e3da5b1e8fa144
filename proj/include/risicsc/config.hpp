#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "risicsc/error.hpp"

namespace risicsc {

inline double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// SplitMix64 finalizer; used to derive independent stream seeds from a scenario seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream identifiers for derive_seed.
inline constexpr std::uint64_t kStreamTasks = 1;
inline constexpr std::uint64_t kStreamChannels = 2;
inline constexpr std::uint64_t kStreamInit = 3;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Geometry {
  Point bs{0.0, 0.0};
  Point ris{200.0, 0.0};
  std::vector<Point> ues;
  std::vector<Point> targets;
  bool operator==(const Geometry&) const = default;
};

struct PathlossExponents {
  double bu = 3.75;
  double r = 2.2;
  double ru = 2.2;
  double uu = 2.2;
  double target = 2.0;  // UE -> radar target echo
  bool operator==(const PathlossExponents&) const = default;
};

/// Iteration caps of the nested loops.
struct IterationCaps {
  int compute = 50;      // offloading / edge CPU alternation
  int fractional = 2000;  // auxiliary-variable Newton loop
  int inner = 50;        // beamforming block descent
  int bcd = 30;          // outermost compute <-> beamforming alternation
  int single_ue = 100;   // closed-form single-UE loop
  int mm = 100;          // RIS majorization-minimization steps
  bool operator==(const IterationCaps&) const = default;
};

/// Every scalar parameter of one scenario. Per-UE task parameters are stored as the concrete
/// values drawn for this scenario. Immutable once validated.
struct SystemConfig {
  int ues = 2;
  int bs_antennas = 4;
  int ue_antennas = 2;
  int ris_elements = 30;
  int streams = 2;

  double bandwidth_hz = 1e6;
  double noise_comm_mw = 3.98e-12;
  double noise_sense_mw = 3.98e-12;
  std::vector<double> power_budget_mw;
  double sinr_threshold = 10.0;  // linear
  std::vector<double> weights;

  double pathloss_ref_db = 30.0;
  double ref_distance_m = 1.0;
  PathlossExponents exponents;
  bool target_two_way = true;
  double rician_k = 3.0;
  Geometry geometry;

  std::vector<double> task_bits;
  std::vector<double> cycles_per_bit;
  std::vector<double> local_cpu_hz;
  double edge_cpu_total_hz = 5e10;

  double epsilon = 1e-3;
  IterationCaps max_iters;
  double newton_step = 0.5;
  double newton_eps = 0.01;
  std::uint64_t seed = 1;

  bool operator==(const SystemConfig&) const = default;

  void validate() const;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& field, const std::string& msg) {
  throw ConfigError("config field '" + field + "': " + msg);
}

inline void require_positive(const std::string& field, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) config_fail(field, "must be strictly positive and finite");
}

inline void require_sized(const std::string& field, std::size_t size, int k) {
  if (size != static_cast<std::size_t>(k)) {
    config_fail(field, "expected " + std::to_string(k) + " per-UE entries, got " + std::to_string(size));
  }
}

}  // namespace detail

inline void SystemConfig::validate() const {
  using detail::config_fail;
  using detail::require_positive;
  using detail::require_sized;
  if (ues < 1) config_fail("ues", "K must be >= 1");
  if (bs_antennas < 1) config_fail("bs_antennas", "M must be >= 1");
  if (ue_antennas < 1) config_fail("ue_antennas", "N must be >= 1");
  if (ris_elements < 1) config_fail("ris_elements", "L must be >= 1");
  if (streams < 1) config_fail("streams", "d must be >= 1");
  if (streams > std::min(bs_antennas, ue_antennas)) {
    config_fail("streams", "d exceeds min(M,N)");
  }
  require_positive("bandwidth_hz", bandwidth_hz);
  require_positive("noise_comm_mw", noise_comm_mw);
  require_positive("noise_sense_mw", noise_sense_mw);
  require_positive("sinr_threshold", sinr_threshold);
  require_positive("ref_distance_m", ref_distance_m);
  require_positive("edge_cpu_total_hz", edge_cpu_total_hz);
  require_positive("epsilon", epsilon);
  if (!(rician_k >= 0.0)) config_fail("rician_k", "must be >= 0");
  if (!(newton_step > 0.0 && newton_step < 1.0)) config_fail("newton_step", "zeta must lie in (0,1)");
  require_positive("newton_eps", newton_eps);
  for (const auto& [name, v] : {std::pair{"exponents.bu", exponents.bu}, std::pair{"exponents.r", exponents.r},
                                std::pair{"exponents.ru", exponents.ru}, std::pair{"exponents.uu", exponents.uu},
                                std::pair{"exponents.target", exponents.target}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) config_fail(name, "must be finite and >= 0");
  }
  for (const auto& [name, v] : {std::pair{"max_iters.compute", max_iters.compute},
                                std::pair{"max_iters.fractional", max_iters.fractional},
                                std::pair{"max_iters.inner", max_iters.inner}, std::pair{"max_iters.bcd", max_iters.bcd},
                                std::pair{"max_iters.single_ue", max_iters.single_ue},
                                std::pair{"max_iters.mm", max_iters.mm}}) {
    if (v < 1) config_fail(name, "must be >= 1");
  }
  require_sized("power_budget_mw", power_budget_mw.size(), ues);
  require_sized("weights", weights.size(), ues);
  require_sized("task_bits", task_bits.size(), ues);
  require_sized("cycles_per_bit", cycles_per_bit.size(), ues);
  require_sized("local_cpu_hz", local_cpu_hz.size(), ues);
  require_sized("geometry.ues", geometry.ues.size(), ues);
  require_sized("geometry.targets", geometry.targets.size(), ues);
  for (int k = 0; k < ues; ++k) {
    const auto idx = "[" + std::to_string(k) + "]";
    require_positive("power_budget_mw" + idx, power_budget_mw[k]);
    require_positive("weights" + idx, weights[k]);
    require_positive("cycles_per_bit" + idx, cycles_per_bit[k]);
    require_positive("local_cpu_hz" + idx, local_cpu_hz[k]);
    if (!(task_bits[k] >= 0.0) || task_bits[k] != std::floor(task_bits[k])) {
      config_fail("task_bits" + idx, "must be a non-negative integer number of bits");
    }
    if (distance(geometry.ues[k], geometry.targets[k]) <= 0.0) {
      config_fail("geometry.targets" + idx, "target coincides with its UE");
    }
    if (distance(geometry.ues[k], geometry.bs) <= 0.0 || distance(geometry.ues[k], geometry.ris) <= 0.0) {
      config_fail("geometry.ues" + idx, "UE coincides with the BS or RIS");
    }
  }
  if (distance(geometry.bs, geometry.ris) <= 0.0) config_fail("geometry.ris", "RIS coincides with the BS");
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  std::vector<std::string> unknown;
  for (const auto& item : obj.items()) {
    if (!keys.contains(item.key())) unknown.push_back(item.key());
  }
  if (!unknown.empty()) {
    std::string names;
    for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + (where.empty() ? u : where + "." + u);
    throw ConfigError("unknown config keys: " + names);
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out, const std::string& prefix = "") {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(prefix + key, e.what());
  }
}

inline Point read_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    config_fail(field, "expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Point> read_points(const json& j, const std::string& field) {
  if (!j.is_array()) config_fail(field, "expected a list of [x, y] points");
  std::vector<Point> pts;
  for (std::size_t i = 0; i < j.size(); ++i) pts.push_back(read_point(j[i], field + "[" + std::to_string(i) + "]"));
  return pts;
}

/// Per-UE quantity: a number (same for every UE), a list (one per UE) or {"min": a, "max": b}
/// (drawn uniformly per UE from the task RNG).
inline std::vector<double> read_per_ue(const json& j, const std::string& field, int k, std::mt19937_64& rng,
                                       bool integral) {
  std::vector<double> out;
  if (j.is_number()) {
    out.assign(k, j.get<double>());
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_number()) config_fail(field, "list entries must be numbers");
      out.push_back(e.get<double>());
    }
  } else if (j.is_object()) {
    reject_unknown(j, field, {"min", "max"});
    if (!j.contains("min") || !j.contains("max") || !j["min"].is_number() || !j["max"].is_number()) {
      config_fail(field, "range needs numeric 'min' and 'max'");
    }
    const double lo = j["min"].get<double>();
    const double hi = j["max"].get<double>();
    if (!(lo <= hi)) config_fail(field, "range min exceeds max");
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int i = 0; i < k; ++i) out.push_back(lo == hi ? lo : dist(rng));
  } else {
    config_fail(field, "expected a number, a per-UE list or a {min, max} range");
  }
  if (integral) {
    for (auto& v : out) v = std::round(v);
  }
  return out;
}

/// Threshold given as a linear number or as a string with a "dB" or "linear" suffix.
inline double read_threshold(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) config_fail(field, "expected a number (linear) or a string like \"10 dB\"");
  std::string s = j.get<std::string>();
  std::istringstream in(s);
  double value = 0.0;
  std::string unit;
  if (!(in >> value)) config_fail(field, "cannot parse '" + s + "'");
  in >> unit;
  std::string rest;
  if (in >> rest) config_fail(field, "trailing text in '" + s + "'");
  if (unit == "dB" || unit == "db") return db_to_linear(value);
  if (unit == "linear" || unit.empty()) return value;
  config_fail(field, "unknown unit '" + unit + "' (use dB or linear)");
}

inline Geometry default_geometry(int k) {
  Geometry g;
  if (k == 1) {
    g.ues = {{250.0, 50.0}};
    g.targets = {{270.0, 50.0}};
  } else if (k == 2) {
    g.ues = {{240.0, 50.0}, {250.0, -50.0}};
    g.targets = {{260.0, 50.0}, {250.0, -70.0}};
  }
  return g;
}

}  // namespace detail

/// Parses a JSON scenario document. Missing keys take the default table values; unknown keys are
/// rejected by name. `seed_override` replaces the document seed before any per-UE sampling.
inline SystemConfig load_config(const std::string& document, std::optional<std::uint64_t> seed_override = {}) {
  using detail::json;
  json doc;
  try {
    doc = document.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config document must be an object");
  detail::reject_unknown(doc, "",
                         {"ues", "bs_antennas", "ue_antennas", "ris_elements", "streams", "bandwidth_hz",
                          "noise_comm_mw", "noise_sense_mw", "power_budget_mw", "sinr_threshold", "weights",
                          "pathloss_ref_db", "ref_distance_m", "exponents", "target_two_way", "rician_k",
                          "geometry", "task_bits", "cycles_per_bit", "local_cpu_hz", "edge_cpu_total_hz", "epsilon",
                          "max_iters", "newton_step", "newton_eps", "seed"});

  SystemConfig cfg;
  detail::read_if(doc, "ues", cfg.ues);
  detail::read_if(doc, "bs_antennas", cfg.bs_antennas);
  detail::read_if(doc, "ue_antennas", cfg.ue_antennas);
  detail::read_if(doc, "ris_elements", cfg.ris_elements);
  detail::read_if(doc, "streams", cfg.streams);
  detail::read_if(doc, "bandwidth_hz", cfg.bandwidth_hz);
  detail::read_if(doc, "noise_comm_mw", cfg.noise_comm_mw);
  detail::read_if(doc, "noise_sense_mw", cfg.noise_sense_mw);
  detail::read_if(doc, "pathloss_ref_db", cfg.pathloss_ref_db);
  detail::read_if(doc, "ref_distance_m", cfg.ref_distance_m);
  detail::read_if(doc, "target_two_way", cfg.target_two_way);
  detail::read_if(doc, "rician_k", cfg.rician_k);
  detail::read_if(doc, "edge_cpu_total_hz", cfg.edge_cpu_total_hz);
  detail::read_if(doc, "epsilon", cfg.epsilon);
  detail::read_if(doc, "newton_step", cfg.newton_step);
  detail::read_if(doc, "newton_eps", cfg.newton_eps);
  detail::read_if(doc, "seed", cfg.seed);
  if (seed_override) cfg.seed = *seed_override;
  if (cfg.ues < 1) detail::config_fail("ues", "K must be >= 1");
  const int k = cfg.ues;

  if (doc.contains("sinr_threshold")) cfg.sinr_threshold = detail::read_threshold(doc["sinr_threshold"], "sinr_threshold");

  if (doc.contains("exponents")) {
    const auto& e = doc["exponents"];
    if (!e.is_object()) detail::config_fail("exponents", "expected an object");
    detail::reject_unknown(e, "exponents", {"bu", "r", "ru", "uu", "target"});
    detail::read_if(e, "bu", cfg.exponents.bu, "exponents.");
    detail::read_if(e, "r", cfg.exponents.r, "exponents.");
    detail::read_if(e, "ru", cfg.exponents.ru, "exponents.");
    detail::read_if(e, "uu", cfg.exponents.uu, "exponents.");
    detail::read_if(e, "target", cfg.exponents.target, "exponents.");
  }
  if (doc.contains("max_iters")) {
    const auto& m = doc["max_iters"];
    if (!m.is_object()) detail::config_fail("max_iters", "expected an object");
    detail::reject_unknown(m, "max_iters", {"compute", "fractional", "inner", "bcd", "single_ue", "mm"});
    detail::read_if(m, "compute", cfg.max_iters.compute, "max_iters.");
    detail::read_if(m, "fractional", cfg.max_iters.fractional, "max_iters.");
    detail::read_if(m, "inner", cfg.max_iters.inner, "max_iters.");
    detail::read_if(m, "bcd", cfg.max_iters.bcd, "max_iters.");
    detail::read_if(m, "single_ue", cfg.max_iters.single_ue, "max_iters.");
    detail::read_if(m, "mm", cfg.max_iters.mm, "max_iters.");
  }

  cfg.geometry = detail::default_geometry(k);
  if (doc.contains("geometry")) {
    const auto& g = doc["geometry"];
    if (!g.is_object()) detail::config_fail("geometry", "expected an object");
    detail::reject_unknown(g, "geometry", {"bs", "ris", "ues", "targets"});
    if (g.contains("bs")) cfg.geometry.bs = detail::read_point(g["bs"], "geometry.bs");
    if (g.contains("ris")) cfg.geometry.ris = detail::read_point(g["ris"], "geometry.ris");
    if (g.contains("ues")) cfg.geometry.ues = detail::read_points(g["ues"], "geometry.ues");
    if (g.contains("targets")) cfg.geometry.targets = detail::read_points(g["targets"], "geometry.targets");
  }
  if (cfg.geometry.ues.empty() && k > 2) {
    detail::config_fail("geometry.ues", "no default layout for K > 2; list UE and target coordinates");
  }

  std::mt19937_64 task_rng(derive_seed(cfg.seed, kStreamTasks));
  const auto per_ue = [&](const char* key, const detail::json& fallback, bool integral) {
    return detail::read_per_ue(doc.contains(key) ? doc[key] : fallback, key, k, task_rng, integral);
  };
  cfg.power_budget_mw = per_ue("power_budget_mw", 10.0, false);
  cfg.weights = per_ue("weights", 1.0 / k, false);
  cfg.task_bits = per_ue("task_bits", detail::json{{"min", 200e3}, {"max", 300e3}}, true);
  cfg.cycles_per_bit = per_ue("cycles_per_bit", detail::json{{"min", 500.0}, {"max", 600.0}}, false);
  cfg.local_cpu_hz = per_ue("local_cpu_hz", detail::json{{"min", 1e8}, {"max", 2e8}}, false);

  cfg.validate();
  return cfg;
}

/// Reads a config file; the environment variable RISICSC_SEED, when set, overrides the seed.
inline SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::optional<std::uint64_t> seed;
  if (const char* env = std::getenv("RISICSC_SEED"); env != nullptr && *env != '\0') {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("RISICSC_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return load_config(buf.str(), seed);
}

/// Fully explicit document for `cfg`; load_config(to_json(cfg).dump()) == cfg.
inline nlohmann::json to_json(const SystemConfig& cfg) {
  using nlohmann::json;
  const auto pts = [](const std::vector<Point>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back({p.x, p.y});
    return a;
  };
  return json{
      {"ues", cfg.ues},
      {"bs_antennas", cfg.bs_antennas},
      {"ue_antennas", cfg.ue_antennas},
      {"ris_elements", cfg.ris_elements},
      {"streams", cfg.streams},
      {"bandwidth_hz", cfg.bandwidth_hz},
      {"noise_comm_mw", cfg.noise_comm_mw},
      {"noise_sense_mw", cfg.noise_sense_mw},
      {"power_budget_mw", cfg.power_budget_mw},
      {"sinr_threshold", cfg.sinr_threshold},
      {"weights", cfg.weights},
      {"pathloss_ref_db", cfg.pathloss_ref_db},
      {"ref_distance_m", cfg.ref_distance_m},
      {"exponents",
       {{"bu", cfg.exponents.bu},
        {"r", cfg.exponents.r},
        {"ru", cfg.exponents.ru},
        {"uu", cfg.exponents.uu},
        {"target", cfg.exponents.target}}},
      {"target_two_way", cfg.target_two_way},
      {"rician_k", cfg.rician_k},
      {"geometry",
       {{"bs", {cfg.geometry.bs.x, cfg.geometry.bs.y}},
        {"ris", {cfg.geometry.ris.x, cfg.geometry.ris.y}},
        {"ues", pts(cfg.geometry.ues)},
        {"targets", pts(cfg.geometry.targets)}}},
      {"task_bits", cfg.task_bits},
      {"cycles_per_bit", cfg.cycles_per_bit},
      {"local_cpu_hz", cfg.local_cpu_hz},
      {"edge_cpu_total_hz", cfg.edge_cpu_total_hz},
      {"epsilon", cfg.epsilon},
      {"max_iters",
       {{"compute", cfg.max_iters.compute},
        {"fractional", cfg.max_iters.fractional},
        {"inner", cfg.max_iters.inner},
        {"bcd", cfg.max_iters.bcd},
        {"single_ue", cfg.max_iters.single_ue},
        {"mm", cfg.max_iters.mm}}},
      {"newton_step", cfg.newton_step},
      {"newton_eps", cfg.newton_eps},
      {"seed", cfg.seed},
  };
}

}  // namespace risicsc
