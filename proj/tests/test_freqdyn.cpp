#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mgsched/freqdyn.hpp"

using namespace mgsched::freqdyn;

namespace {

// Operating point of the islanding study: D = 0.5% of 162.7 MW.
FrequencyScene point_a() { return FrequencyScene::aggregate(86.0, 0.8135, 50.1, 10.0, 37.0); }
// Second operating point: D = 0.5% of 199.6 MW.
FrequencyScene point_b() { return FrequencyScene::aggregate(48.7, 0.998, 57.0, 10.0, 30.2); }

}  // namespace

TEST(Freqdyn, RocofAtOperatingPoints) {
  EXPECT_NEAR(rocof_max(point_a()), -0.21511627906976744, 1e-12);
  EXPECT_NEAR(rocof_max(point_b()), -0.31006160164271047, 1e-12);
  EXPECT_GT(rocof_max(point_b()), -0.5);
  auto s = point_a();
  s.dp_l = 0.0;
  EXPECT_EQ(rocof_max(s), 0.0);
}

TEST(Freqdyn, RocofNeedsInertia) {
  auto s = point_a();
  s.h_c = 0.0;
  EXPECT_THROW(rocof_max(s), FrequencyError);
}

TEST(Freqdyn, NadirTimeAtOperatingPoint) {
  const auto tn = nadir_time(point_a());
  EXPECT_NEAR(tn.t, 7.259175095917517, 1e-9);
  EXPECT_TRUE(tn.valid);
}

TEST(Freqdyn, NadirTimeVanishesWithDisturbance) {
  auto s = point_a();
  double prev = nadir_time(s).t;
  for (double p : {1.0, 1e-2, 1e-4, 1e-6}) {
    s.dp_l = p;
    const double t = nadir_time(s).t;
    EXPECT_LT(t, prev);
    prev = t;
  }
  EXPECT_LT(prev, 1e-5);
  s.dp_l = 0.0;
  EXPECT_EQ(nadir_time(s).t, 0.0);
}

TEST(Freqdyn, NadirTimeFlagBeyondDelivery) {
  // Bisect R until t_n crosses T_d; just below the crossing the flag is set.
  auto s = point_a();
  double lo = 1.0;
  double hi = 50.1;
  ASSERT_FALSE(nadir_time(FrequencyScene::aggregate(86.0, 0.8135, lo, 10.0, 37.0)).valid);
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    s.r = mid;
    (nadir_time(s).valid ? hi : lo) = mid;
  }
  s.r = lo;
  const auto below = nadir_time(s);
  EXPECT_FALSE(below.valid);
  EXPECT_GT(below.t, 10.0);
  EXPECT_THROW(nadir(s), FrequencyError);
  s.r = hi;
  EXPECT_TRUE(nadir_time(s).valid);
}

TEST(Freqdyn, NadirNeedsPfr) {
  auto s = point_a();
  s.r = 0.0;
  EXPECT_THROW(nadir_time(s), FrequencyError);
}

TEST(Freqdyn, NadirAtOperatingPoints) {
  EXPECT_NEAR(nadir(point_a()), -0.7763156354680236, 1e-9);
  EXPECT_NEAR(nadir(point_a()), -0.77, 0.02);
  const double b = nadir(point_b());
  EXPECT_NEAR(b, -0.7928235800895300, 1e-9);
  EXPECT_GE(b, -0.80);
  EXPECT_LE(b, -0.77);
  auto s = point_a();
  s.dp_l = 0.0;
  EXPECT_EQ(nadir(s), 0.0);
}

TEST(Freqdyn, SteadyState) {
  auto s = FrequencyScene::aggregate(86.0, 0.8135, 32.0, 10.0, 37.0, 5.0);
  EXPECT_NEAR(steady_state(s), 0.0, 1e-12);
  EXPECT_NEAR(steady_state(point_a()), 16.103257529194839, 1e-9);
  s = FrequencyScene::aggregate(86.0, 0.8135, 25.0, 10.0, 37.0, 5.0);
  EXPECT_NEAR(steady_state(s), -8.6047940995697603, 1e-9);
}

TEST(Freqdyn, WindSiReducesDamping) {
  FrequencyScene s = point_a();
  s.h_wind = {10.0};
  s.gamma = {0.001};
  EXPECT_NEAR(s.damping(), 0.8135 - 0.1, 1e-12);
  EXPECT_NEAR(s.inertia(), 96.0, 1e-12);
  s.gamma = {0.01};
  EXPECT_THROW(steady_state(s), FrequencyError);
}

TEST(Freqdyn, AnalyticTrajectoryEndpoints) {
  const auto s = point_a();
  const double tn = nadir_time(s).t;
  const auto tr = analytic_trajectory(s, {0.0, 2.0, tn});
  EXPECT_EQ(tr.df[0], 0.0);
  EXPECT_NEAR(tr.dfdt[0], rocof_max(s), 1e-12);
  EXPECT_NEAR(tr.df[2], nadir(s), 1e-9);
  EXPECT_NEAR(tr.dfdt[2], 0.0, 1e-9);
  EXPECT_THROW(analytic_trajectory(s, {tn + 0.1}), FrequencyError);
  EXPECT_THROW(analytic_trajectory(s, {1.0, 1.0}), FrequencyError);
}

TEST(Freqdyn, AnalyticMatchesSimulatorAtTwoSeconds) {
  const auto s = point_a();
  const auto tr = analytic_trajectory(s, {2.0});
  const auto sim = simulate_swing(s, 0.001, 60.0);
  EXPECT_NEAR(sim.trace.time[2000], 2.0, 1e-12);
  EXPECT_NEAR(sim.trace.df[2000], tr.df[0], 1e-3);
}

TEST(Freqdyn, AnalyticDerivativeMatchesFiniteDifference) {
  const auto s = point_b();
  const double tn = nadir_time(s).t;
  for (double step : {1e-2, 5e-3}) {
    double worst = 0.0;
    for (double t = 0.5; t + step < tn; t += 0.5) {
      const auto tr = analytic_trajectory(s, {t - step, t, t + step});
      const double fd = (tr.df[2] - tr.df[0]) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - tr.dfdt[1]));
    }
    EXPECT_LT(worst, 1e-3 * step * step / 1e-4) << step;
  }
}

TEST(Freqdyn, SimulatorNadirMatchesClosedForm) {
  const auto s = point_a();
  const auto sim = simulate_swing(s, 0.001, 60.0);
  ASSERT_TRUE(sim.nadir_found);
  EXPECT_NEAR(sim.nadir, nadir(s), 0.01);
  EXPECT_NEAR(sim.nadir_time, nadir_time(s).t, 2 * 0.001);
  EXPECT_NEAR(sim.trace.dfdt[0], rocof_max(s), 1e-6 * s.dp_l / (2.0 * s.inertia()));
}

TEST(Freqdyn, SimulatorZeroDisturbanceIsFlat) {
  auto s = point_a();
  s.dp_l = 0.0;
  const auto sim = simulate_swing(s, 0.01, 30.0);
  for (std::size_t i = 0; i < sim.trace.size(); ++i) {
    EXPECT_EQ(sim.trace.df[i], 0.0);
    EXPECT_EQ(sim.trace.p_pfr[i], 0.0);
  }
  EXPECT_FALSE(sim.nadir_found);
}

TEST(Freqdyn, SimulatorSettlesAtSteadyState) {
  // Small H/D so 60 time constants stay short.
  auto s = FrequencyScene::aggregate(5.0, 5.0, 8.0, 10.0, 20.0, 6.0);
  const double horizon = 60.0 * 2.0 * s.inertia() / s.damping();
  const auto sim = simulate_swing(s, 0.005, horizon, {1000});
  ASSERT_TRUE(sim.nadir_found);
  EXPECT_NEAR(sim.final_df, steady_state(s), 1e-3);
  EXPECT_GT(sim.trace.p_c.back(), 0.0);
}

TEST(Freqdyn, SimulatorReleasesConstantPowerAfterHold) {
  auto s = FrequencyScene::aggregate(5.0, 5.0, 8.0, 10.0, 20.0, 6.0);
  s.t_s = 5.0;
  const auto sim = simulate_swing(s, 0.005, 120.0);
  EXPECT_NEAR(sim.final_df, (8.0 - 20.0) / 5.0, 1e-3);
  EXPECT_EQ(sim.trace.p_c.back(), 0.0);
}

TEST(Freqdyn, SimulatorRejectsCoarseStep) {
  const auto s = FrequencyScene::aggregate(5.0, 5.0, 8.0, 10.0, 20.0);
  EXPECT_THROW(simulate_swing(s, 0.2, 60.0), FrequencyError);
  EXPECT_THROW(simulate_swing(s, 0.0, 60.0), FrequencyError);
  EXPECT_THROW(simulate_swing(s, 0.01, 5.0), FrequencyError);
}

TEST(Freqdyn, NadirMonotone) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const double h = 30.0 + 120.0 * u(rng);
    const double r = 20.0 + 60.0 * u(rng);
    const double d = 0.5 + 1.0 * u(rng);
    const double p = 5.0 + 40.0 * u(rng);
    const auto base = FrequencyScene::aggregate(h, d, r, 10.0, p);
    if (!nadir_time(base).valid) continue;
    const double n0 = nadir(base);
    auto more_h = base;
    more_h.h_c *= 1.05;
    auto more_r = base;
    more_r.r *= 1.05;
    auto more_p = base;
    more_p.dp_l *= 1.05;
    EXPECT_GE(nadir(more_h), n0 - 1e-12);
    if (nadir_time(more_r).valid) {
      EXPECT_GE(nadir(more_r), n0 - 1e-12);
    }
    if (nadir_time(more_p).valid) {
      EXPECT_LE(nadir(more_p), n0 + 1e-12);
    }
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Freqdyn, TraceCsvHeader) {
  const auto sim = simulate_swing(point_b(), 0.01, 20.0, {100});
  std::ostringstream os;
  write_trace_csv(os, sim.trace);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "time_s,df_hz,dfdt_hzps,p_pfr_mw,p_si_mw,p_mpe_mw,p_c_mw");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(sim.trace.size() + 1));
}
