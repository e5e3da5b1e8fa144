#include <gtest/gtest.h>

#include "risicsc/risicsc.hpp"

using namespace risicsc;

TEST(Algorithm4, MonotoneTraceAndFastExit) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto cfg = load_config("{}", seed);
    const auto ch = realize_scenario(cfg);
    const auto r = algorithm4(cfg, ch);
    ASSERT_FALSE(r.trace.empty());
    EXPECT_LE(r.iterations, 10) << "seed " << seed;
    EXPECT_LE(r.trace.front().weighted_latency, r.initial_latency * (1 + 1e-9));
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      EXPECT_LE(r.trace[i].weighted_latency, r.trace[i - 1].weighted_latency * (1 + 1e-9));
      EXPECT_EQ(r.trace[i].iteration, r.trace[i - 1].iteration + 1);
    }
    EXPECT_NEAR(r.report.weighted_total, r.trace.back().weighted_latency, 1e-12 * r.report.weighted_total);
  }
}

TEST(Algorithm4, FeasibleAtExit) {
  const auto cfg = load_config("{}", 4);
  const auto ch = realize_scenario(cfg);
  const auto r = algorithm4(cfg, ch);
  EXPECT_TRUE(power_feasible(r.state, cfg));
  double fe = 0.0;
  for (int k = 0; k < cfg.ues; ++k) {
    EXPECT_GE(radar_sinr(cfg, ch, r.state, k), cfg.sinr_threshold * (1 - 1e-6));
    EXPECT_GE(r.compute.v[k], 0);
    EXPECT_LE(r.compute.v[k], static_cast<std::int64_t>(cfg.task_bits[k]));
    fe += r.compute.f_e[k];
  }
  EXPECT_LE(fe, cfg.edge_cpu_total_hz * (1 + 1e-9));
  const auto rates = mmse_rates(cfg, ch, r.state.f_c, r.state.theta);
  EXPECT_NEAR(latency(rates, r.compute, cfg).weighted_total / r.report.weighted_total, 1.0, 1e-12);
}

TEST(Algorithm4, Deterministic) {
  const auto cfg = load_config("{}", 5);
  const auto ch = realize_scenario(cfg);
  const auto a = algorithm4(cfg, ch);
  const auto b = algorithm4(cfg, ch);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].weighted_latency, b.trace[i].weighted_latency);
}

TEST(Algorithm4, IdleTasks) {
  const auto cfg = load_config(R"({"task_bits": 0})");
  const auto r = algorithm4(cfg, realize_scenario(cfg));
  EXPECT_EQ(r.report.weighted_total, 0.0);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Algorithm4, FixedComputeAndPhases) {
  const auto cfg = load_config("{}", 6);
  const auto ch = realize_scenario(cfg);
  DriverOptions opt;
  opt.fixed_compute = full_offload_compute(cfg);
  opt.solver.optimize_ris = false;
  opt.initial_theta = RVector::Constant(cfg.ris_elements, 1.0);
  const auto r = algorithm4(cfg, ch, opt);
  EXPECT_EQ(r.compute.v, opt.fixed_compute->v);
  EXPECT_EQ(r.compute.f_e, opt.fixed_compute->f_e);
  EXPECT_EQ(r.state.theta, *opt.initial_theta);
}

TEST(Algorithm4, RestartsDifferButStayClose) {
  const auto cfg = load_config("{}", 7);
  const auto ch = realize_scenario(cfg);
  DriverOptions opt;
  const double base = algorithm4(cfg, ch, opt).report.weighted_total;
  opt.solver.restart = 3;
  const double other = algorithm4(cfg, ch, opt).report.weighted_total;
  EXPECT_LE(std::abs(other - base) / std::min(other, base), 0.2);
}
