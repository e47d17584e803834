#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mgsched/solver/bnb.hpp"
#include "mgsched/solver/external.hpp"
#include "mgsched/solver/oracle.hpp"
#include "support/random_misocp.hpp"

using namespace mgsched;
using conic::AffineExpr;
using conic::Program;
using conic::Sense;
using conic::SolveStatus;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Propagate, FixesBinaryFromRow) {
  Program p;
  auto x = p.add_continuous("x", 0.0, 1.0);
  auto y = p.add_binary("y");
  p.add_row("r", 5.0 * AffineExpr(y) - x, Sense::less_equal, 2.0);
  auto b = solver::Bounds::of(p);
  auto r = solver::propagate(p, b);
  EXPECT_FALSE(r.infeasible);
  EXPECT_EQ(r.fixings, 1);
  EXPECT_EQ(b.ub[y.index], 0.0);
}

TEST(Propagate, DetectsContradiction) {
  Program p;
  auto y = p.add_binary("y");
  auto z = p.add_binary("z");
  p.add_row("a", y + z, Sense::greater_equal, 2.0);
  p.add_row("b", y - z, Sense::greater_equal, 1.0);
  auto b = solver::Bounds::of(p);
  EXPECT_TRUE(solver::propagate(p, b).infeasible);
}

TEST(Misocp, AllBinariesFixedEqualsRelaxation) {
  Program p;
  auto x = p.add_continuous("x", -2.0, 4.0);
  auto y = p.add_variable("y", conic::VarKind::binary, 1.0, 1.0);
  p.add_row("r", x - 3.0 * AffineExpr(y), Sense::greater_equal, -1.0);
  p.set_objective(x + y);
  auto relax = solver::solve_relaxation(p);
  auto mip = solver::solve_misocp(p);
  ASSERT_EQ(mip.point.status, SolveStatus::optimal);
  EXPECT_NEAR(mip.point.objective, relax.objective, 1e-7);
  EXPECT_EQ(mip.stats.nodes, 1u);
}

TEST(Misocp, NodeLimitOnFractionalRoot) {
  // Knapsack-like: root relaxation is fractional and rounding is poor.
  Program p;
  std::vector<conic::Var> y;
  AffineExpr weight, value;
  const double w[] = {3.0, 4.0, 5.0, 6.0};
  const double v[] = {4.0, 5.0, 7.0, 8.0};
  for (int k = 0; k < 4; ++k) {
    y.push_back(p.add_binary("y" + std::to_string(k)));
    weight.add(y[k], w[k]);
    value.add(y[k], -v[k]);
  }
  p.add_row("cap", weight, Sense::less_equal, 10.0);
  p.set_objective(value);
  solver::SolveOptions opt;
  opt.node_limit = 1;
  opt.root_rounding = false;
  auto r = solver::solve_misocp(p, opt);
  EXPECT_EQ(r.point.status, SolveStatus::limit);
  opt.node_limit = 1'000;
  auto full = solver::solve_misocp(p, opt);
  ASSERT_EQ(full.point.status, SolveStatus::optimal);
  EXPECT_NEAR(full.point.objective, -13.0, 1e-6);
}

TEST(Misocp, InfeasibleProgram) {
  Program p;
  auto y = p.add_binary("y");
  auto x = p.add_continuous("x", 0.0, 1.0);
  p.add_row("a", x + 2.0 * AffineExpr(y), Sense::greater_equal, 1.5);
  p.add_row("b", x + 2.0 * AffineExpr(y), Sense::less_equal, 1.2);
  p.add_row("c", x, Sense::less_equal, 0.1);
  EXPECT_EQ(solver::solve_misocp(p).point.status, SolveStatus::infeasible);
}

TEST(Oracle, NoBinariesEqualsRelaxation) {
  Program p;
  auto H = p.add_continuous("H", 0.0, 10.0);
  auto R = p.add_continuous("R", 0.0, 10.0);
  p.add_rotated_cone("hr", H, R, {AffineExpr(std::sqrt(2.0))});
  p.set_objective(H + R);
  EXPECT_NEAR(solver::enumerate_oracle(p).objective, solver::solve_relaxation(p).objective, 1e-9);
}

TEST(Oracle, PicksCheaperBigMBranch) {
  Program p;
  auto x = p.add_continuous("x", 0.0, 10.0);
  auto y = p.add_binary("y");
  // y = 1 allows x down to 1 at a fixed cost of 2; otherwise x >= 6.
  p.add_row("bigm", x + 5.0 * AffineExpr(y), Sense::greater_equal, 6.0);
  p.set_objective(x + 2.0 * AffineExpr(y));
  auto r = solver::enumerate_oracle(p);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r[y], 1.0, 1e-9);
  EXPECT_NEAR(r.objective, 3.0, 1e-6);
}

TEST(Oracle, TooManyBinaries) {
  Program p;
  for (int k = 0; k < 13; ++k) p.add_binary("y" + std::to_string(k));
  EXPECT_THROW(solver::enumerate_oracle(p), conic::ModelError);
}

TEST(Misocp, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(20240611);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = mgsched::fixtures::random_misocp(rng, {.min_binaries = 6, .max_binaries = 6});
    const auto oracle = solver::enumerate_oracle(p);
    solver::SolveOptions opt;
    opt.rel_gap = 1e-8;
    const auto mip = solver::solve_misocp(p, opt);
    ASSERT_EQ(mip.point.status, oracle.status) << "trial " << trial;
    if (oracle.status != SolveStatus::optimal) continue;
    ++compared;
    EXPECT_LE(rel_err(mip.point.objective, oracle.objective), 1e-6) << "trial " << trial;
    EXPECT_TRUE(conic::check_point(p, mip.point).clean(1e-6)) << "trial " << trial;
  }
  EXPECT_GT(compared, 30);
}

TEST(Misocp, BoundTraceIsMonotone) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = mgsched::fixtures::random_misocp(rng);
    const auto r = solver::solve_misocp(p);
    for (std::size_t i = 1; i < r.stats.trace.size(); ++i) {
      EXPECT_GE(r.stats.trace[i].bound, r.stats.trace[i - 1].bound) << "trial " << trial;
      EXPECT_LE(r.stats.trace[i].incumbent, r.stats.trace[i - 1].incumbent);
    }
  }
}

TEST(Misocp, DeterministicAcrossRuns) {
  std::mt19937_64 rng(99);
  const auto p = mgsched::fixtures::random_misocp(rng, {.min_binaries = 8, .max_binaries = 8});
  const auto a = solver::solve_misocp(p);
  const auto b = solver::solve_misocp(p);
  EXPECT_EQ(a.point.values, b.point.values);
  EXPECT_EQ(a.stats.nodes, b.stats.nodes);
}

TEST(External, SolutionFileRoundTrip) {
  Program p;
  auto x = p.add_continuous("x", 3.0, conic::kInf);
  auto y = p.add_binary("y");
  p.set_objective(x + y);
  conic::SolutionPoint pt;
  pt.status = SolveStatus::optimal;
  pt.values = {3.0, 0.0};
  pt.objective = 3.0;
  const auto dir = std::filesystem::temp_directory_path() / "mgsched_ext_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "sol.txt").string();
  solver::write_solution_file(p, pt, path);
  const auto back = solver::read_solution_file(p, path);
  EXPECT_EQ(back.status, SolveStatus::optimal);
  EXPECT_EQ(back.values, pt.values);
}

TEST(External, MissingStatusIsAnError) {
  Program p;
  p.add_continuous("x");
  const auto path = (std::filesystem::temp_directory_path() / "mgsched_bad_sol.txt").string();
  std::ofstream(path) << "x,1\n";
  EXPECT_THROW(solver::read_solution_file(p, path), solver::ExternalSolverError);
}
