#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "risicsc/channel.hpp"
#include "risicsc/compute_alloc.hpp"
#include "risicsc/config.hpp"
#include "risicsc/driver.hpp"
#include "risicsc/metrics.hpp"
#include "risicsc/single_ue.hpp"

namespace risicsc {

enum class Scheme { kWithRis, kRandPhase, kWithoutRis, kQuant1Bit, kQuant2Bit, kFullOffload };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kWithRis: return "with_ris";
    case Scheme::kRandPhase: return "randphase";
    case Scheme::kWithoutRis: return "without_ris";
    case Scheme::kQuant1Bit: return "quant1bit";
    case Scheme::kQuant2Bit: return "quant2bit";
    case Scheme::kFullOffload: return "full_offload";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::kWithRis, Scheme::kRandPhase, Scheme::kWithoutRis, Scheme::kQuant1Bit, Scheme::kQuant2Bit,
                   Scheme::kFullOffload}) {
    if (name == scheme_name(s)) return s;
  }
  throw ConfigError("unknown scheme '" + name + "'");
}

/// Nearest point of {2 pi m / 2^bits}, wrapped into (0, 2 pi].
inline RVector quantize_phases(const RVector& theta, int bits) {
  const double step = kTwoPi / static_cast<double>(1 << bits);
  return theta.unaryExpr([step](double t) { return wrap_phase(std::round(t / step) * step); });
}

struct SchemeResult {
  Scheme scheme = Scheme::kWithRis;
  BeamformingState state;
  ComputeState compute;
  LatencyReport report;
  std::vector<TraceRecord> trace;
  int iterations = 0;
};

inline bool single_ue_path(const SystemConfig& cfg) { return cfg.ues == 1 && cfg.streams == 1; }

/// Runs one scheme on one realization. The closed-form single-UE loop is used whenever the
/// scenario has one UE and one stream, except for full offloading, which fixes the volumes.
inline SchemeResult run_scheme(const SystemConfig& cfg, const ChannelSet& ch, Scheme scheme, int restart = 0) {
  SchemeResult out;
  out.scheme = scheme;
  SolverOptions sopt;
  sopt.restart = restart;
  sopt.optimize_ris = scheme != Scheme::kRandPhase;
  const ChannelSet blocked = scheme == Scheme::kWithoutRis ? without_ris(ch) : ChannelSet{};
  const ChannelSet& use = scheme == Scheme::kWithoutRis ? blocked : ch;

  if (single_ue_path(cfg) && scheme != Scheme::kFullOffload) {
    auto r = algorithm5(cfg, use, sopt);
    out.state = std::move(r.state);
    out.compute = std::move(r.compute);
    out.report = std::move(r.report);
    out.iterations = r.iterations;
    for (std::size_t i = 1; i < r.trace.size(); ++i) out.trace.push_back({static_cast<int>(i), r.trace[i], {r.trace[i] / cfg.weights[0]}});
  } else {
    DriverOptions dopt;
    dopt.solver = sopt;
    if (scheme == Scheme::kFullOffload) dopt.fixed_compute = full_offload_compute(cfg);
    auto r = algorithm4(cfg, use, dopt);
    out.state = std::move(r.state);
    out.compute = std::move(r.compute);
    out.report = std::move(r.report);
    out.iterations = r.iterations;
    out.trace = std::move(r.trace);
  }

  if (scheme == Scheme::kQuant1Bit || scheme == Scheme::kQuant2Bit) {
    const int bits = scheme == Scheme::kQuant1Bit ? 1 : 2;
    out.state.theta = quantize_phases(out.state.theta, bits);
    const auto h = effective_channels(ch, out.state.theta);
    refresh_receivers(cfg, h, out.state);
    refresh_radar(cfg, ch, out.state);
    const auto rates = mmse_rates(cfg, ch, out.state.f_c, out.state.theta);
    out.compute = alternate_compute(rates, cfg, out.compute.f_e).state;
    out.report = latency(rates, out.compute, cfg);
    out.trace.push_back({out.iterations + 1, out.report.weighted_total, out.report.t_ue});
  }
  return out;
}

enum class SweepParameter { kRisElements, kExponentRis, kEdgeCpuTotal, kSinrThresholdDb, kAntennas };

inline const char* parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kRisElements: return "ris_elements";
    case SweepParameter::kExponentRis: return "exponent_ris";
    case SweepParameter::kEdgeCpuTotal: return "edge_cpu_total";
    case SweepParameter::kSinrThresholdDb: return "sinr_threshold_db";
    case SweepParameter::kAntennas: return "antennas";
  }
  return "?";
}

/// A sweep value: a scalar, or an (M, N) pair for the antenna sweep.
struct SweepValue {
  double x = 0.0;
  int m = 0;
  int n = 0;

  std::string label(SweepParameter p) const {
    if (p == SweepParameter::kAntennas) return std::to_string(m) + "x" + std::to_string(n);
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
  }
};

struct SweepSpec {
  SweepParameter parameter = SweepParameter::kRisElements;
  std::vector<SweepValue> values;
  std::vector<std::uint64_t> seeds;
  std::vector<Scheme> schemes;
  int restarts = 1;
};

inline SweepSpec parse_sweep(const std::string& document) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sweep parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("sweep document must be an object");
  detail::reject_unknown(doc, "", {"parameter", "values", "seeds", "seed_count", "schemes", "restarts"});
  SweepSpec spec;
  if (!doc.contains("parameter") || !doc["parameter"].is_string()) throw ConfigError("sweep: 'parameter' is required");
  const auto pname = doc["parameter"].get<std::string>();
  bool found = false;
  for (auto p : {SweepParameter::kRisElements, SweepParameter::kExponentRis, SweepParameter::kEdgeCpuTotal,
                 SweepParameter::kSinrThresholdDb, SweepParameter::kAntennas}) {
    if (pname == parameter_name(p)) {
      spec.parameter = p;
      found = true;
    }
  }
  if (!found) throw ConfigError("sweep: unknown parameter '" + pname + "'");
  if (!doc.contains("values") || !doc["values"].is_array() || doc["values"].empty()) {
    throw ConfigError("sweep: 'values' must be a non-empty list");
  }
  for (const auto& v : doc["values"]) {
    SweepValue sv;
    if (spec.parameter == SweepParameter::kAntennas) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        throw ConfigError("sweep: antenna values are [M, N] integer pairs");
      }
      sv.m = v[0].get<int>();
      sv.n = v[1].get<int>();
    } else {
      if (!v.is_number()) throw ConfigError("sweep: values must be numbers");
      sv.x = v.get<double>();
    }
    spec.values.push_back(sv);
  }
  if (doc.contains("seeds")) {
    for (const auto& s : doc["seeds"]) spec.seeds.push_back(s.get<std::uint64_t>());
  } else {
    const int count = doc.value("seed_count", 20);
    for (int i = 1; i <= count; ++i) spec.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (spec.seeds.empty()) throw ConfigError("sweep: no seeds");
  if (doc.contains("schemes")) {
    for (const auto& s : doc["schemes"]) spec.schemes.push_back(parse_scheme(s.get<std::string>()));
  } else {
    spec.schemes = {Scheme::kWithRis};
  }
  if (spec.schemes.empty()) throw ConfigError("sweep: no schemes");
  spec.restarts = doc.value("restarts", 1);
  if (spec.restarts < 1) throw ConfigError("sweep: restarts must be >= 1");
  return spec;
}

/// Config for one sweep point: the document is reloaded with the row seed (per-UE task draws depend
/// on it) and the swept field is overridden.
inline SystemConfig sweep_config(const std::string& document, SweepParameter p, const SweepValue& v,
                                 std::uint64_t seed) {
  SystemConfig cfg = load_config(document, seed);
  switch (p) {
    case SweepParameter::kRisElements: cfg.ris_elements = static_cast<int>(std::lround(v.x)); break;
    case SweepParameter::kExponentRis:
      cfg.exponents.r = v.x;
      cfg.exponents.ru = v.x;
      break;
    case SweepParameter::kEdgeCpuTotal: cfg.edge_cpu_total_hz = v.x; break;
    case SweepParameter::kSinrThresholdDb: cfg.sinr_threshold = db_to_linear(v.x); break;
    case SweepParameter::kAntennas:
      cfg.bs_antennas = v.m;
      cfg.ue_antennas = v.n;
      cfg.streams = std::min({cfg.streams, v.m, v.n});
      break;
  }
  cfg.validate();
  return cfg;
}

struct SweepRow {
  std::string kind = "run";  // "run" or "aggregate"
  Scheme scheme = Scheme::kWithRis;
  std::string value;
  std::size_t value_index = 0;
  std::uint64_t seed = 0;
  double weighted_latency = std::numeric_limits<double>::quiet_NaN();
  double latency_min = std::numeric_limits<double>::quiet_NaN();
  double latency_max = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> t_ue;
  double iterations = 0.0;
  std::string status = "ok";
  std::vector<TraceRecord> trace;
};

struct SweepTable {
  SweepParameter parameter = SweepParameter::kRisElements;
  int ues = 0;
  std::vector<SweepRow> rows;  // run rows ordered by (value, seed, scheme), then aggregates
};

/// Every (value, seed, scheme) point on a pool of `jobs` threads. Failures are recorded in the row
/// status and the sweep continues. With restarts > 1 the row keeps the best restart and the spread.
inline SweepTable run_sweep(const SweepSpec& spec, const std::string& document, int jobs = 1) {
  const std::size_t nv = spec.values.size();
  const std::size_t ns = spec.seeds.size();
  const std::size_t nm = spec.schemes.size();
  SweepTable table;
  table.parameter = spec.parameter;
  table.ues = load_config(document, spec.seeds.front()).ues;
  std::vector<SweepRow> rows(nv * ns * nm);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t idx = next++; idx < rows.size(); idx = next++) {
      const std::size_t vi = idx / (ns * nm);
      const std::size_t si = (idx / nm) % ns;
      const std::size_t mi = idx % nm;
      SweepRow& row = rows[idx];
      row.scheme = spec.schemes[mi];
      row.value = spec.values[vi].label(spec.parameter);
      row.value_index = vi;
      row.seed = spec.seeds[si];
      try {
        const SystemConfig cfg = sweep_config(document, spec.parameter, spec.values[vi], spec.seeds[si]);
        const ChannelSet ch = realize_scenario(cfg);
        double best = std::numeric_limits<double>::infinity();
        double worst = -best;
        int iters = 0;
        for (int r = 0; r < spec.restarts; ++r) {
          auto res = run_scheme(cfg, ch, row.scheme, r);
          iters += res.iterations;
          worst = std::max(worst, res.report.weighted_total);
          if (res.report.weighted_total < best) {
            best = res.report.weighted_total;
            row.t_ue = res.report.t_ue;
            row.trace = std::move(res.trace);
          }
        }
        row.weighted_latency = best;
        row.latency_min = best;
        row.latency_max = worst;
        row.iterations = static_cast<double>(iters) / spec.restarts;
      } catch (const InfeasibleError& e) {
        row.status = std::string("infeasible: ") + e.what();
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
    }
  };
  const int n_threads = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  table.rows = rows;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    for (std::size_t mi = 0; mi < nm; ++mi) {
      SweepRow agg;
      agg.kind = "aggregate";
      agg.scheme = spec.schemes[mi];
      agg.value = spec.values[vi].label(spec.parameter);
      agg.value_index = vi;
      agg.t_ue.assign(table.ues, 0.0);
      int n = 0;
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t si = 0; si < ns; ++si) {
        const auto& r = rows[(vi * ns + si) * nm + mi];
        if (r.status != "ok") continue;
        ++n;
        sum += r.weighted_latency;
        lo = std::min(lo, r.weighted_latency);
        hi = std::max(hi, r.weighted_latency);
        agg.iterations += r.iterations;
        for (int k = 0; k < table.ues; ++k) agg.t_ue[k] += r.t_ue[k];
      }
      if (n > 0) {
        agg.weighted_latency = sum / n;
        agg.latency_min = lo;
        agg.latency_max = hi;
        agg.iterations /= n;
        for (auto& t : agg.t_ue) t /= n;
      }
      agg.status = "n=" + std::to_string(n);
      table.rows.push_back(std::move(agg));
    }
  }
  return table;
}

/// Mean weighted latency of the ok rows for one value and scheme.
inline std::optional<double> sweep_mean(const SweepTable& t, std::size_t value_index, Scheme s) {
  for (const auto& r : t.rows) {
    if (r.kind == "aggregate" && r.value_index == value_index && r.scheme == s && r.status != "n=0") {
      return r.weighted_latency;
    }
  }
  return std::nullopt;
}

inline void write_csv(std::ostream& os, const SweepTable& t) {
  os << "kind,scheme,parameter,value,seed,weighted_latency_s,latency_min_s,latency_max_s";
  for (int k = 0; k < t.ues; ++k) os << ",t_ue_" << k;
  os << ",iterations,status\n";
  os.precision(12);
  for (const auto& r : t.rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    os << r.kind << ',' << scheme_name(r.scheme) << ',' << parameter_name(t.parameter) << ',' << r.value << ',';
    if (r.kind == "run") os << r.seed;
    os << ',' << r.weighted_latency << ',' << r.latency_min << ',' << r.latency_max;
    for (int k = 0; k < t.ues; ++k) {
      os << ',';
      if (k < static_cast<int>(r.t_ue.size())) os << r.t_ue[k];
    }
    os << ',' << r.iterations << ',' << status << '\n';
  }
}

/// One JSON object per run row with its outer-iteration trace.
inline void write_traces(std::ostream& os, const SweepTable& t) {
  for (const auto& r : t.rows) {
    if (r.kind != "run") continue;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& rec : r.trace) {
      trace.push_back({{"iteration", rec.iteration}, {"weighted_latency_s", rec.weighted_latency}, {"t_ue_s", rec.t_ue}});
    }
    nlohmann::json line{{"scheme", scheme_name(r.scheme)}, {"parameter", parameter_name(t.parameter)},
                        {"value", r.value},                {"seed", r.seed},
                        {"status", r.status},              {"trace", trace}};
    os << line.dump() << '\n';
  }
}

}  // namespace risicsc
