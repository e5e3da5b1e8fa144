// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// `risicsc_acceptance --only 9` runs a single criterion.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "helpers.hpp"

using namespace risicsc;
using namespace testing_helpers;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

std::string config_dir() {
  return (std::filesystem::path(__FILE__).parent_path().parent_path() / "configs").string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string single_ue_doc(const std::string& extra = "") {
  auto doc = nlohmann::json::parse(read_file(config_dir() + "/single_ue.json"));
  if (!extra.empty()) doc.merge_patch(nlohmann::json::parse(extra));
  return doc.dump();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. integer offloading against exhaustive search; continuous optimum balances both branches.
Outcome offload_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> vol(0, 10000);
  std::uniform_real_distribution<double> logu(-2.0, 3.0);
  int mismatches = 0;
  double worst_balance = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double V = vol(rng);
    const double c = std::pow(10.0, logu(rng)), fl = std::pow(10.0, logu(rng)), fe = std::pow(10.0, logu(rng)),
                 R = std::pow(10.0, logu(rng));
    std::int64_t best = 0;
    double best_t = task_latency(V, c, fl, fe, R, 0.0);
    for (std::int64_t v = 1; v <= static_cast<std::int64_t>(V); ++v) {
      const double lat = task_latency(V, c, fl, fe, R, static_cast<double>(v));
      if (lat < best_t) {
        best_t = lat;
        best = v;
      }
    }
    if (integer_offload(V, c, fl, fe, R) != best) ++mismatches;
    const double v = optimal_offload_fraction(V, c, fl, fe, R);
    if (v > 0.0 && v < V) {
      const double tl = (V - v) * c / fl, tc = v / R + v * c / fe;
      worst_balance = std::max(worst_balance, std::abs(tl - tc) / std::max(tl, tc));
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && worst_balance <= 1e-9 && secs < 5.0,
          "mismatches=" + std::to_string(mismatches) + " worst |Tl-Tc|/max=" + fmt(worst_balance) +
              " time=" + fmt(secs, 3) + "s"};
}

// 2. edge CPU split against a grid over f_1 with step f_total / 1e4.
Outcome edge_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_gap = 0.0, worst_sum = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<ComputeTask> tasks;
    for (int k = 0; k < 2; ++k) {
      tasks.push_back({0.2 + u(rng), 1e5 + 3e5 * u(rng), 300 + 500 * u(rng), 5e7 + 2e8 * u(rng),
                       std::pow(10.0, 5 + 2 * u(rng))});
    }
    const double total = std::pow(10.0, 9 + 2 * u(rng));
    const auto a = edge_allocation(tasks, total);
    double grid = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 10000; ++i) {
      const double f1 = total * i / 10000.0;
      grid = std::min(grid, relaxed_compute_objective(tasks, {f1, total - f1}));
    }
    const double obj = relaxed_compute_objective(tasks, a.f_e);
    worst_gap = std::max(worst_gap, std::abs(obj - grid) / grid);
    worst_sum = std::max(worst_sum, std::abs(a.f_e[0] + a.f_e[1] - total) / total);
  }
  const double secs = seconds_since(t0);
  return {worst_gap <= 1e-6 && worst_sum <= 1e-9 && secs < 30.0,
          "worst rel gap=" + fmt(worst_gap) + " worst |sum-f|/f=" + fmt(worst_sum) + " time=" + fmt(secs, 3) + "s"};
}

// 3. rate through the MMSE decoder equals the log-det of the MMSE error.
Outcome rate_consistency() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::vector<CMatrix> h = {random_matrix(4, 2, rng), random_matrix(4, 2, rng)};
    const std::vector<CMatrix> f = {random_matrix(2, 2, rng), random_matrix(2, 2, rng)};
    const double noise = std::pow(10.0, std::uniform_real_distribution<double>(-2, 1)(rng));
    for (int k = 0; k < 2; ++k) {
      const double a = offload_rate(h, f, update_decoder(h, f, k, noise), k, noise, 1e6);
      const double b = mmse_rate(h, f, k, noise, 1e6);
      worst = std::max(worst, std::abs(a - b) / b);
    }
  }
  return {worst <= 1e-9, "worst rel diff=" + fmt(worst)};
}

// 4. MVDR filter against random probes and a generalized-eigenvalue oracle.
Outcome mvdr_optimality() {
  std::mt19937_64 rng(104);
  int beaten = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto cfg = toy_config(2, 2, 4, 2, 2);
    const auto ch = toy_channels(cfg, rng);
    const auto f = random_precoders(cfg, rng);
    const int k = t % 2;
    const CVector w = update_radar_rx(ch, f, k, 0.5);
    const double got = radar_sinr(ch, f, w, k, 0.5);
    for (int p = 0; p < 10000; ++p) {
      if (radar_sinr(ch, f, random_vector(4, rng), k, 0.5) > got) ++beaten;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> oracle(echo_covariance(ch, f, k),
                                                             sensing_interference(ch, f, k, 0.5));
    worst = std::max(worst, std::abs(got / oracle.eigenvalues().maxCoeff() - 1.0));
  }
  return {beaten == 0 && worst <= 1e-8, "probes above=" + std::to_string(beaten) + " worst rel gap=" + fmt(worst)};
}

// 5. RIS majorization: surrogate upper bound, descent, unit modulus.
Outcome mm_correctness() {
  std::mt19937_64 rng(105);
  std::uniform_int_distribution<int> lsize(1, 16);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  double worst_slack = 0.0, worst_rise = 0.0, worst_mod = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int l = lsize(rng);
    const auto cfg = toy_config(2, 3, 2, l, 1 + t % 2);
    const auto ch = toy_channels(cfg, rng);
    BeamformingState s;
    s.f_c = random_precoders(cfg, rng);
    s.theta = RVector(l);
    for (int i = 0; i < l; ++i) s.theta(i) = wrap_phase(ang(rng));
    s.w_c.resize(2);
    s.d_weight.resize(2);
    refresh_receivers(cfg, effective_channels(ch, s.theta), s);
    const auto form = ris_quadratic_form(cfg, ch, s, {0.5 + ang(rng), 0.5 + ang(rng)});
    RVector theta = s.theta;
    double g = ris_objective(form, unit_modulus(theta));
    const double scale = std::max(1.0, std::abs(g));
    for (int it = 0; it < 20; ++it) {
      const CVector phi_t = unit_modulus(theta);
      for (int p = 0; p < 100; ++p) {
        RVector r(l);
        for (int i = 0; i < l; ++i) r(i) = ang(rng);
        const CVector phi = unit_modulus(r);
        worst_slack = std::min(worst_slack, (ris_surrogate(form, phi, phi_t) - ris_objective(form, phi)) / scale);
      }
      theta = ris_mm_step(form, phi_t);
      const CVector next_phi = unit_modulus(theta);
      for (int i = 0; i < l; ++i) worst_mod = std::max(worst_mod, std::abs(std::abs(next_phi(i)) - 1.0));
      const double next = ris_objective(form, next_phi);
      worst_rise = std::max(worst_rise, (next - g) / scale);
      g = next;
    }
  }
  return {worst_slack >= -1e-9 && worst_rise <= 1e-12 && worst_mod <= 1e-15,
          "min slack=" + fmt(worst_slack) + " max rise=" + fmt(worst_rise) + " max ||phi|-1|=" + fmt(worst_mod)};
}

// 6. fractional loop exits at its fixed point on the default scenario.
Outcome newton_fixed_point() {
  double worst_res = 0.0, worst_gap = 0.0;
  int unconverged = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cfg = load_config("{}", seed);
    const auto ch = realize_scenario(cfg);
    const auto s0 = initial_state(cfg, ch);
    const auto comp = alternate_compute(mmse_rates(cfg, ch, s0.f_c, s0.theta), cfg).state;
    const auto fr = outer_loop(cfg, ch, s0, comp);
    if (!fr.converged) ++unconverged;
    const auto rates = mmse_rates(cfg, ch, fr.state.f_c, fr.state.theta);
    const auto volumes = as_real(comp.v);
    // residual measured by the loop itself before it exits, not after the final snap
    worst_res = std::max(worst_res, fr.residual_trace.empty() ? 1.0 : fr.residual_trace.back());
    double lam = 0.0;
    for (double x : fr.state.frac_lambda) lam += x;
    const double offload = ratio_sum(rates, cfg.weights, volumes);
    worst_gap = std::max(worst_gap, std::abs(lam - offload) / offload);
  }
  return {worst_res < 1e-6 && worst_gap <= 1e-9 && unconverged == 0,
          "max residual=" + fmt(worst_res) + " worst |sum lambda - offload|/offload=" + fmt(worst_gap) +
              " unconverged=" + std::to_string(unconverged)};
}

// 7. closed-form single-UE precoder against a 1e4-point grid of the feasible set.
Outcome two_ray_oracle() {
  std::mt19937_64 rng(107);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int case3_errors = 0, infeasible_cases = 0;
  double worst_power = 0.0, worst_eta = 0.0, worst_gap = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int n = dim(rng);
    const CVector h = random_vector(n, rng), g = random_vector(n, rng);
    const double p = 0.1 + 2.0 * u(rng);
    const double eta = 1.2 * u(rng) * p * g.squaredNorm();
    const bool expect_infeasible = eta > p * g.squaredNorm();
    bool threw = false;
    TwoRayPrecoder r;
    try {
      r = two_ray_precoder(h, g, p, eta);
    } catch (const InfeasibleError&) {
      threw = true;
    }
    if (threw != expect_infeasible) ++case3_errors;
    if (threw) {
      ++infeasible_cases;
      continue;
    }
    worst_power = std::max(worst_power, std::abs(r.f.squaredNorm() / p - 1.0));
    worst_eta = std::max(worst_eta, (eta - std::norm(g.dot(r.f))) / std::max(eta, 1e-300));
    const double got = std::norm(h.dot(r.f));
    const double grid = two_ray_grid_best(h, g, p, eta);
    worst_gap = std::max(worst_gap, std::abs(got - grid) / got);
  }
  return {case3_errors == 0 && worst_power <= 1e-9 && worst_eta <= 1e-9 && worst_gap <= 0.01,
          "case-3 errors=" + std::to_string(case3_errors) + " (of " + std::to_string(infeasible_cases) +
              " infeasible) max |P-|f|^2|/P=" + fmt(worst_power) + " max eta shortfall=" + fmt(worst_eta) +
              " max gap to grid=" + fmt(worst_gap)};
}

// 8. outer alternation: monotone trace, converged within 10 passes.
Outcome bcd_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  int rises = 0, slow = 0, max_iter = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto cfg = load_config("{}", seed);
    const auto r = algorithm4(cfg, realize_scenario(cfg));
    std::vector<double> seq = {r.initial_latency};
    for (const auto& rec : r.trace) seq.push_back(rec.weighted_latency);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (seq[i] > seq[i - 1] * (1 + 1e-9)) ++rises;
    }
    const double last = std::abs(seq[seq.size() - 2] - seq.back()) / seq[seq.size() - 2];
    max_iter = std::max(max_iter, r.iterations);
    if (r.iterations > 10 || last >= 1e-3) ++slow;
  }
  const double secs = seconds_since(t0);
  return {rises == 0 && slow == 0 && secs < 300.0,
          "rises=" + std::to_string(rises) + " runs not settled within 10=" + std::to_string(slow) +
              " max iterations=" + std::to_string(max_iter) + " time=" + fmt(secs, 3) + "s"};
}

// 9. trend suite over 20 seeds.
Outcome trends() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> fails;
  std::ostringstream info;
  const auto mean = [](const SweepTable& t, std::size_t vi, Scheme s) {
    return sweep_mean(t, vi, s).value_or(std::numeric_limits<double>::quiet_NaN());
  };

  // (a) (b) (c) (e): RIS size with every scheme
  const auto l_spec = parse_sweep(
      R"({"parameter": "ris_elements", "values": [10, 30, 50], "seed_count": 20,
          "schemes": ["with_ris", "randphase", "without_ris", "quant1bit", "quant2bit", "full_offload"]})");
  const auto l_tab = run_sweep(l_spec, "{}");
  const double w10 = mean(l_tab, 0, Scheme::kWithRis), w30 = mean(l_tab, 1, Scheme::kWithRis),
               w50 = mean(l_tab, 2, Scheme::kWithRis);
  info << "with_ris L=10/30/50: " << fmt(w10) << "/" << fmt(w30) << "/" << fmt(w50);
  if (!(w50 < w30 && w30 < w10)) fails.push_back("a");
  for (std::size_t vi = 0; vi < 3; ++vi) {
    const double w = mean(l_tab, vi, Scheme::kWithRis), rp = mean(l_tab, vi, Scheme::kRandPhase),
                 wo = mean(l_tab, vi, Scheme::kWithoutRis), q1 = mean(l_tab, vi, Scheme::kQuant1Bit),
                 q2 = mean(l_tab, vi, Scheme::kQuant2Bit), fo = mean(l_tab, vi, Scheme::kFullOffload);
    info << "; L=" << l_tab.rows[vi * 20 * 6].value << " rand/without/q1/q2/full: " << fmt(rp) << "/" << fmt(wo)
         << "/" << fmt(q1) << "/" << fmt(q2) << "/" << fmt(fo);
    if (!(w <= rp && rp <= wo)) fails.push_back("b@" + std::to_string(vi));
    if (!(w <= q2 && q2 <= q1)) fails.push_back("c@" + std::to_string(vi));
    if (!(fo >= w)) fails.push_back("e@" + std::to_string(vi));
  }
  for (const auto& r : l_tab.rows) {
    if (r.kind == "run" && r.status != "ok") fails.push_back("run failed: " + r.status);
  }

  // (d) edge CPU
  const auto e_tab = run_sweep(
      parse_sweep(R"({"parameter": "edge_cpu_total", "values": [1e9, 1e10, 5e10, 1e11], "seed_count": 20})"), "{}");
  std::vector<double> e(4);
  for (std::size_t vi = 0; vi < 4; ++vi) e[vi] = mean(e_tab, vi, Scheme::kWithRis);
  info << "; f_edge 1e9/1e10/5e10/1e11: " << fmt(e[0]) << "/" << fmt(e[1]) << "/" << fmt(e[2]) << "/" << fmt(e[3]);
  if (!(e[1] <= e[0] && e[2] <= e[1] && e[3] <= e[2])) fails.push_back("d:not non-increasing");
  if (!(e[2] - e[3] < e[0] - e[1])) fails.push_back("d:no flattening");

  // (f) radar threshold, multi-UE. Latency is undefined where no point meets the requirement, so
  // the means are taken over the first 20 seeds that are feasible at every threshold.
  const auto s_tab = run_sweep(
      parse_sweep(R"({"parameter": "sinr_threshold_db", "values": [0, 5, 10, 15], "seed_count": 40})"), "{}");
  const std::size_t n_seeds = 40;
  std::vector<double> m(4, 0.0);
  int used = 0, skipped = 0;
  for (std::size_t si = 0; si < n_seeds && used < 20; ++si) {
    bool ok = true;
    for (std::size_t vi = 0; vi < 4; ++vi) ok = ok && s_tab.rows[vi * n_seeds + si].status == "ok";
    if (!ok) {
      ++skipped;
      continue;
    }
    ++used;
    for (std::size_t vi = 0; vi < 4; ++vi) m[vi] += s_tab.rows[vi * n_seeds + si].weighted_latency;
  }
  for (auto& x : m) x /= std::max(used, 1);
  info << "; multi-UE eta 0/5/10/15 dB: " << std::setprecision(10) << m[0] << "/" << m[1] << "/" << m[2] << "/"
       << m[3] << " (" << used << " seeds, " << skipped << " infeasible skipped)";
  if (used < 20) fails.push_back("f:fewer than 20 feasible seeds");
  // same 1e-9 relative slack as the BCD trace check
  double worst_drop = 0.0;
  for (std::size_t vi = 1; vi < 4; ++vi) {
    const double drop = (m[vi - 1] - m[vi]) / m[vi - 1];
    worst_drop = std::max(worst_drop, drop);
    if (drop > 1e-9) fails.push_back("f:multi-UE decreases at " + std::to_string(vi));
  }
  info << " (max rel drop " << std::setprecision(3) << worst_drop << ")";

  // (f) radar threshold, single UE: flat while every iteration stays in the communication-only case
  const double etas_db[] = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0};
  std::vector<double> su_mean;
  for (double db : etas_db) {
    double sum = 0.0;
    bool comm_only = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto cfg = load_config(single_ue_doc(R"({"sinr_threshold": ")" + fmt(db) + R"( dB"})"), seed);
      const auto r = algorithm5(cfg, realize_scenario(cfg));
      sum += r.report.weighted_total;
      for (auto c : r.cases) comm_only = comm_only && c == PrecoderCase::kCommOnly;
    }
    if (!comm_only) break;
    su_mean.push_back(sum / 20.0);
  }
  double spread = 0.0;
  for (double v : su_mean) spread = std::max(spread, std::abs(v / su_mean.front() - 1.0));
  info << "; single-UE comm-only thresholds=" << su_mean.size() << " spread=" << fmt(spread);
  if (su_mean.size() < 2 || spread > 1e-9) fails.push_back("f:single-UE");

  const double secs = seconds_since(t0);
  if (secs >= 1800.0) fails.push_back("time");
  std::string detail = info.str() + " time=" + fmt(secs, 4) + "s";
  if (!fails.empty()) {
    detail += " failed:";
    for (const auto& f : fails) detail += " " + f;
  }
  return {fails.empty(), detail};
}

// 10. spread of 100 restarts per realization.
Outcome restart_spread() {
  const auto t0 = std::chrono::steady_clock::now();
  double su_worst = 0.0, mu_worst = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cfg = load_config(single_ue_doc(), seed);
    const auto ch = realize_scenario(cfg);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int r = 0; r < 100; ++r) {
      SolverOptions opt;
      opt.restart = r;
      const double v = algorithm5(cfg, ch, opt).report.weighted_total;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    su_worst = std::max(su_worst, hi / lo - 1.0);
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cfg = load_config("{}", seed);
    const auto ch = realize_scenario(cfg);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int r = 0; r < 100; ++r) {
      DriverOptions opt;
      opt.solver.restart = r;
      const double v = algorithm4(cfg, ch, opt).report.weighted_total;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mu_worst = std::max(mu_worst, hi / lo - 1.0);
    per_seed += (seed > 1 ? "/" : "") + fmt(hi / lo - 1.0, 2);
  }
  return {su_worst <= 0.01 && mu_worst <= 0.10, "single-UE max/min-1=" + fmt(su_worst) +
                                                    " multi-UE max/min-1=" + fmt(mu_worst) + " (seeds 1..10: " + per_seed + ")" +
                                                    " time=" + fmt(seconds_since(t0), 4) + "s"};
}

// 11. closed-form single-UE loop against the general solver.
Outcome single_ue_crosscheck() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto cfg = load_config(single_ue_doc(), seed);
    const auto ch = realize_scenario(cfg);
    const double a5 = algorithm5(cfg, ch).report.weighted_total;
    const double a4 = algorithm4(cfg, ch).report.weighted_total;
    worst = std::max(worst, std::abs(a5 - a4) / a4);
  }
  return {worst <= 0.05, "worst |alg5-alg4|/alg4=" + fmt(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-11)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"offloading closed form vs exhaustive search", offload_oracle},
      {"edge CPU split vs grid", edge_oracle},
      {"decoder rate vs MMSE log-det rate", rate_consistency},
      {"MVDR radar filter optimality", mvdr_optimality},
      {"RIS majorization-minimization", mm_correctness},
      {"fractional loop fixed point", newton_fixed_point},
      {"single-UE two-ray precoder vs grid", two_ray_oracle},
      {"outer alternation convergence", bcd_convergence},
      {"trend suite", trends},
      {"restart robustness", restart_spread},
      {"single-UE closed form vs general solver", single_ue_crosscheck},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
