#include <gtest/gtest.h>

#include <cmath>

#include "mgsched/conic/text_io.hpp"
#include "mgsched/drcc.hpp"
#include "mgsched/sched.hpp"
#include "mgsched/sched_io.hpp"
#include "support/toy.hpp"

using namespace mgsched;
using fixtures::solve_toy;
using fixtures::toy2;
using sched::CaseMode;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Sched, ToyDispatchCost) {
  // 80 MW of load, 60 MW from the PCC, 20 MW from G1 at 30 $/MWh.
  const auto run = solve_toy("toy1.json", "toy1.csv", CaseMode::base);
  ASSERT_EQ(run.point.status, conic::SolveStatus::optimal);
  EXPECT_NEAR(run.solution.objective, 600.0, 1e-4);
  EXPECT_NEAR(run.solution.at[0][0].import_p, 60.0, 1e-4);
  EXPECT_NEAR(run.solution.at[0][0].p[0], 20.0, 1e-4);
  EXPECT_EQ(run.solution.mode, "base");
  EXPECT_FALSE(run.solution.frequency_blocks);
}

TEST(Sched, ForcedImportIsDiagnosed) {
  const auto c = netdata::load_case(fixtures::data_path("toy1-forced.json"));
  const auto sc = netdata::load_scenarios(fixtures::data_path("toy1.csv"), c);
  const auto diags = sched::presolve_diagnostics(c, sc, sched::BuildOptions::for_mode(CaseMode::case_ii));
  EXPECT_EQ(diags.size(), 3u);
  for (const auto& d : diags) EXPECT_EQ(d.period, 1);
  EXPECT_TRUE(sched::presolve_diagnostics(c, sc, sched::BuildOptions::for_mode(CaseMode::base)).empty());
  const auto run = solve_toy(c, sc, sched::BuildOptions::for_mode(CaseMode::case_ii));
  EXPECT_EQ(run.point.status, conic::SolveStatus::infeasible);
}

TEST(Sched, ModeOrdering) {
  const double base = toy2(CaseMode::base).solution.objective;
  const double case_i = toy2(CaseMode::case_i).solution.objective;
  const double case_ii = toy2(CaseMode::case_ii).solution.objective;
  EXPECT_LE(base, case_ii * (1.0 + 1e-6));
  EXPECT_LE(case_ii, case_i * (1.0 + 1e-6));
  EXPECT_LT(base, case_i);
}

TEST(Sched, CostBreakdownSumsToObjective) {
  for (auto mode : {CaseMode::base, CaseMode::case_i, CaseMode::case_ii}) {
    const auto& run = toy2(mode);
    ASSERT_EQ(run.point.status, conic::SolveStatus::optimal);
    const auto cb = sched::cost_breakdown(run.solution, run.network);
    EXPECT_LT(rel(cb.total(), run.point.objective), 1e-6) << sched::to_string(mode);
    EXPECT_LT(rel(run.solution.cost.total(), run.point.objective), 1e-6);
  }
}

TEST(Sched, StorageRecursionAndWindow) {
  const auto& run = toy2(CaseMode::case_ii);
  const auto& sol = run.solution;
  const auto& b = run.network.storage[0];
  const double two_rocof = 2.0 * run.network.frequency.rocof_lim;
  for (int s = 0; s < sol.scenarios; ++s) {
    double prev = b.soc_init;
    for (int t = 0; t < sol.periods; ++t) {
      const auto& e = sol.at[t][s];
      EXPECT_NEAR(e.soc[0] * b.e_cap, prev * b.e_cap - b.eta * e.p_b[0] * sol.dt_h, 1e-5);
      EXPECT_GE(e.soc[0], b.soc_min - 1e-7);
      EXPECT_LE(e.soc[0], b.soc_max + 1e-7);
      EXPECT_LE(e.p_b[0] + two_rocof * e.h_b[0], b.p_dch + 1e-6);
      EXPECT_GE(e.p_b[0] + two_rocof * e.h_b[0], b.p_ch - 1e-6);
      EXPECT_LE(e.p_b[0] + e.pc_b[0], b.p_dch + 1e-6);
      EXPECT_LE(e.pc_b[0] * b.t_s / 3600.0, e.soc[0] * b.e_cap + 1e-6);
      EXPECT_LE(e.pc_b[0] * b.t_s / 3600.0, prev * b.e_cap + 1e-6);
      prev = e.soc[0];
    }
    EXPECT_NEAR(prev, b.soc_init, 1e-6);
  }
}

TEST(Sched, SlowUnitsAreNonAnticipative) {
  const auto& run = toy2(CaseMode::case_ii);
  for (std::size_t g = 0; g < run.network.generators.size(); ++g) {
    if (run.network.generators[g].cls != netdata::GenClass::slow) continue;
    for (int t = 0; t < run.solution.periods; ++t) {
      EXPECT_EQ(run.solution.at[t][0].y[g], run.solution.at[t][1].y[g]);
    }
  }
}

TEST(Sched, FrequencyBlocksHoldAtOptimum) {
  const auto& run = toy2(CaseMode::case_ii);
  const auto& sol = run.solution;
  const auto& lim = run.network.frequency;
  ASSERT_TRUE(sol.frequency_blocks);
  const double xi = drcc::xi(sol.eta);
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) {
      const auto& e = sol.at[t][s];
      const double dp = e.import_p - (1.0 - xi * sol.alpha) * e.shed_mu;
      const double d = std::sqrt(lim.df_lim) * e.d0;
      double gh2 = 0.0;
      for (std::size_t w = 0; w < e.h_w.size(); ++w) gh2 += run.network.wind[w].gamma * e.h_w[w] * e.h_w[w];
      const auto chk = drcc::deterministic_nadir_check(e.inertia, e.pfr, e.d0, gh2, lim.t_d, lim.df_lim, dp);
      EXPECT_GE(chk.margin, -1e-4 * std::max(1.0, e.inertia * e.pfr)) << t << "," << s;
      EXPECT_GE(e.x1 * e.x1, e.x2 * (e.x2 - d) - 1e-5) << t << "," << s;
      EXPECT_GE(2.0 * e.inertia * lim.rocof_lim, dp - 1e-5);
      EXPECT_GE(e.pfr + e.constant_power + e.d0 * lim.df_ss_lim - dp, lim.df_ss_lim * gh2 - 1e-5);
      EXPECT_LE(e.shed_mu, e.import_p + 1e-6);
    }
  }
}

TEST(Sched, ZeroPccRatingMakesBlocksVacuous) {
  auto c = netdata::load_case(fixtures::data_path("toy2.json"));
  c.pcc.s_max = 0.0;
  const auto sc = netdata::load_scenarios(fixtures::data_path("toy2.csv"), c);
  const auto base = solve_toy(c, sc, sched::BuildOptions::for_mode(CaseMode::base));
  const auto case_i = solve_toy(c, sc, sched::BuildOptions::for_mode(CaseMode::case_i));
  EXPECT_FALSE(case_i.model.map.frequency_blocks);
  EXPECT_EQ(case_i.model.program.num_binaries(), base.model.program.num_binaries());
  ASSERT_EQ(case_i.point.status, conic::SolveStatus::optimal);
  EXPECT_LT(rel(case_i.solution.objective, base.solution.objective), 1e-6);
}

TEST(Sched, ExportIsDeterministic) {
  const auto c = netdata::load_case(fixtures::data_path("toy2.json"));
  const auto sc = netdata::load_scenarios(fixtures::data_path("toy2.csv"), c);
  const auto o = sched::BuildOptions::for_mode(CaseMode::case_ii);
  const auto a = conic::export_text(sched::build_model(c, sc, o).program);
  const auto b = conic::export_text(sched::build_model(c, sc, o).program);
  EXPECT_EQ(a, b);
  EXPECT_EQ(conic::export_text(conic::parse_text(a)), a);
}

TEST(Sched, ModelSizeMatchesUnits) {
  const auto c = netdata::load_case(fixtures::data_path("toy2.json"));
  const auto sc = netdata::load_scenarios(fixtures::data_path("toy2.csv"), c);
  auto o = sched::BuildOptions::for_mode(CaseMode::case_ii);
  const auto m = sched::build_model(c, sc, o);
  const std::size_t ts = 6;
  const std::size_t per_block = static_cast<std::size_t>(3 * o.drcc.segments - 2);
  EXPECT_EQ(m.program.num_binaries(), ts * (2 * c.generators.size() + per_block));
  EXPECT_EQ(m.map.nadir.size(), ts);
  const auto b = sched::build_model(c, sc, sched::BuildOptions::for_mode(CaseMode::base));
  EXPECT_EQ(b.program.num_binaries(), ts * 2 * c.generators.size());
}

TEST(Sched, SolutionDocumentRoundTrip) {
  const auto& run = toy2(CaseMode::case_ii);
  const auto j = sched::to_json(run.solution, run.network);
  const auto back = sched::solution_from_json(j);
  EXPECT_EQ(sched::to_json(back, run.network).dump(), j.dump());
  EXPECT_EQ(back.mode, "caseII");
}
