#include <gtest/gtest.h>

#include <sstream>

#include "mgsched/certify.hpp"
#include "mgsched/drcc.hpp"
#include "support/toy.hpp"

using namespace mgsched;
using certify::DisturbanceRule;
using sched::CaseMode;

namespace {

sched::ScheduleSolution one_entry(double import_p, double shed_mu) {
  sched::ScheduleSolution sol;
  sol.mode = "caseII";
  sol.periods = 1;
  sol.scenarios = 1;
  sol.frequency_blocks = true;
  sol.eta = 0.9;
  sol.alpha = 0.2;
  sol.scenario_names = {"s1"};
  sol.probability = {1.0};
  sched::PeriodScenario e;
  e.import_p = import_p;
  e.shed_mu = shed_mu;
  e.demand = 162.7;
  e.inertia_sg = 86.0;
  e.inertia = 86.0;
  e.pfr = 50.1;
  e.pfr_available = 50.1;
  sol.at = {{e}};
  return sol;
}

netdata::NetworkCase one_bus() {
  return netdata::load_case(fixtures::data_path("toy1.json"));
}

}  // namespace

TEST(Certify, DisturbanceRules) {
  sched::PeriodScenario e;
  e.import_p = 40.0;
  e.shed_mu = 10.0;
  EXPECT_NEAR(certify::disturbance(e, 0.9, 0.2, DisturbanceRule::robust), 40.0 - (1.0 - 0.6) * 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(certify::disturbance(e, 0.9, 0.2, DisturbanceRule::mean), 30.0);
  EXPECT_DOUBLE_EQ(certify::disturbance(e, 0.9, 0.2, DisturbanceRule::no_shedding), 40.0);
}

TEST(Certify, OperatingPointPasses) {
  const auto sc = freqdyn::FrequencyScene::aggregate(86.0, 0.8135, 50.1, 10.0, 37.0);
  const auto e = certify::evaluate(sc, netdata::FrequencyLimits{}, {});
  EXPECT_TRUE(e.pass());
  EXPECT_NEAR(e.nadir_closed, -0.776316, 1e-6);
  EXPECT_NEAR(e.nadir_sim, e.nadir_closed, 0.01);
  EXPECT_NEAR(e.rocof, -0.215116, 1e-6);
  EXPECT_TRUE(e.over_response);
  EXPECT_GT(e.ss_closed, 0.0);
}

TEST(Certify, NadirViolationFlagged) {
  const auto sc = freqdyn::FrequencyScene::aggregate(40.0, 0.8135, 30.0, 10.0, 37.0);
  const auto e = certify::evaluate(sc, netdata::FrequencyLimits{}, {});
  EXPECT_FALSE(e.nadir_ok);
  EXPECT_LT(e.nadir_margin, -0.02);
  EXPECT_FALSE(e.pass());
}

TEST(Certify, ZeroImportIsVacuous) {
  const auto rep = certify::certify(one_entry(0.0, 0.0), one_bus());
  ASSERT_EQ(rep.entries.size(), 1u);
  EXPECT_TRUE(rep.entries[0].vacuous);
  EXPECT_TRUE(rep.all_pass());
  EXPECT_FALSE(rep.worst().has_value());
}

TEST(Certify, EmptyHorizon) {
  auto sol = one_entry(0.0, 0.0);
  sol.periods = 0;
  sol.at.clear();
  const auto rep = certify::certify(sol, one_bus());
  EXPECT_TRUE(rep.entries.empty());
  EXPECT_TRUE(rep.all_pass());
  std::ostringstream os;
  certify::write_csv(os, rep);
  EXPECT_EQ(os.str(),
            "period,scenario,dp_l_mw,rocof_hzps,nadir_closed_hz,closed_valid,nadir_sim_hz,ss_closed_hz,ss_sim_hz,"
            "over_response,nadir_ok,rocof_ok,ss_ok\n");
}

TEST(Certify, RuleChangesScene) {
  const auto sol = one_entry(40.0, 10.0);
  const auto c = one_bus();
  const auto robust = certify::scene_of(sol, c, 0, 0, DisturbanceRule::robust);
  const auto mean = certify::scene_of(sol, c, 0, 0, DisturbanceRule::mean);
  EXPECT_NEAR(robust.dp_l, 36.0, 1e-12);
  EXPECT_NEAR(mean.dp_l, 30.0, 1e-12);
  EXPECT_NEAR(robust.d0, 0.005 * 162.7, 1e-12);
}

TEST(Certify, CaseIIScheduleCertifies) {
  const auto& run = fixtures::toy2(CaseMode::case_ii);
  const auto rep = certify::certify(run.solution, run.network);
  EXPECT_EQ(rep.entries.size(), 6u);
  for (const auto& e : rep.entries) {
    EXPECT_TRUE(e.pass()) << e.period << "," << e.scenario_name << " " << e.error;
    if (!e.vacuous) {
      EXPECT_GE(e.nadir_sim, -run.network.frequency.df_lim - 0.02);
    }
  }
  const auto j = certify::to_json(rep);
  EXPECT_EQ(j["entries"].size(), 6u);
}

TEST(Certify, BaseScheduleIsFlagged) {
  const auto& run = fixtures::toy2(CaseMode::base);
  const auto rep = certify::certify(run.solution, run.network);
  EXPECT_GT(rep.failures(), 0u);
  const auto w = rep.worst();
  ASSERT_TRUE(w.has_value());
  EXPECT_FALSE(rep.entries[*w].pass());
}
