#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mgsched/conic/check.hpp"
#include "mgsched/drcc.hpp"
#include "mgsched/solver/bnb.hpp"

using namespace mgsched;
using conic::AffineExpr;
using conic::Program;
using conic::Sense;
using conic::SolveStatus;

namespace {

struct Fixture {
  Program prog;
  drcc::FrequencyVars v;
  drcc::Setting st;
  drcc::DrccParams p;

  explicit Fixture(double d0 = 0.8135, double dp_max = 60.0) {
    v.h = prog.add_continuous("H", 0.0, 500.0);
    v.r = prog.add_continuous("R", 0.0, 200.0);
    v.dp_dmu = prog.add_continuous("dPDmu", 0.0, 0.0);
    v.dp_l0 = prog.add_continuous("dPL0", 0.0, dp_max);
    v.dp_c = AffineExpr();
    st.d0 = d0;
    st.dp_l_max = dp_max;
  }

  void add_wind(double gamma, double h_max) {
    v.h_wind.push_back(prog.add_continuous("Hw" + std::to_string(v.h_wind.size()), 0.0, h_max));
    v.gamma.push_back(gamma);
  }
};

}  // namespace

TEST(Drcc, XiValues) {
  EXPECT_NEAR(drcc::xi(0.95), std::sqrt(19.0), 1e-12);
  EXPECT_NEAR(drcc::xi(0.95), 4.3589, 1e-4);
  EXPECT_DOUBLE_EQ(drcc::xi(0.5), 1.0);
  EXPECT_NEAR(drcc::xi(0.90), 3.0, 1e-12);
  EXPECT_THROW(drcc::xi(0.0), std::domain_error);
  EXPECT_THROW(drcc::xi(1.0), std::domain_error);
}

TEST(Drcc, XiMonotoneAndReciprocal) {
  double prev = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double eta = i / 200.0;
    const double x = drcc::xi(eta);
    EXPECT_GT(x, prev);
    EXPECT_NEAR(x * drcc::xi(1.0 - eta), 1.0, 1e-12);
    prev = x;
  }
}

TEST(Drcc, SegmentCoefficients) {
  const auto segs = drcc::pwl_coefficients(6, 10.0);
  ASSERT_EQ(segs.size(), 6u);
  EXPECT_NEAR(segs[0].a, 5.0 / (2.0 * std::sqrt(6.0)), 1e-12);
  EXPECT_NEAR(segs[0].b, -3.0 / (2.0 * std::sqrt(6.0)), 1e-12);
  EXPECT_NEAR(segs[0].a, 1.02062, 1e-5);
  EXPECT_NEAR(segs[0].b, -0.61237, 1e-5);
  EXPECT_EQ(segs.back().a, 1.0);
  EXPECT_EQ(segs.back().b, -0.5);
  EXPECT_EQ(segs.back().lo, 11.0);
  EXPECT_DOUBLE_EQ(segs[1].lo, 3.0);
  EXPECT_DOUBLE_EQ(segs[1].hi, 5.0);
  EXPECT_THROW(drcc::pwl_coefficients(1, 10.0), std::invalid_argument);
  EXPECT_THROW(drcc::pwl_coefficients(6, 0.0), std::invalid_argument);
}

TEST(Drcc, TangentAtRightEndpoint) {
  for (auto [n_seg, range] : {std::pair{6, 10.0}, std::pair{8, 12.0}, std::pair{3, 2.5}}) {
    const auto segs = drcc::pwl_coefficients(n_seg, range);
    const double d = 0.7276;
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
      const double x2 = segs[i].hi * d;
      EXPECT_NEAR(segs[i].a * x2 + segs[i].b * d, std::sqrt(x2 * (x2 - d)), 1e-9);
    }
  }
}

TEST(Drcc, LinearizationIsConservative) {
  const double d = 0.7276;
  const int n_seg = 8;
  const double range = 12.0;
  const auto segs = drcc::pwl_coefficients(n_seg, range);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(d, (range + 5.0) * d);
  for (int i = 0; i < 10'000; ++i) {
    const double x2 = u(rng);
    const double exact = std::sqrt(x2 * x2 - d * x2);
    EXPECT_GE(drcc::pwl_value(segs, x2, d), exact - 1e-12);
    for (const auto& s : segs) EXPECT_GE(s.a * x2 + s.b * d, exact - 1e-12);
  }
}

TEST(Drcc, ActiveSegmentIntervals) {
  const auto segs = drcc::pwl_coefficients(6, 10.0);
  EXPECT_EQ(drcc::active_segment(segs, 1.0), 0u);
  EXPECT_EQ(drcc::active_segment(segs, 2.999), 0u);
  EXPECT_EQ(drcc::active_segment(segs, 3.0), 1u);
  EXPECT_EQ(drcc::active_segment(segs, 11.0), 5u);
  EXPECT_EQ(drcc::active_segment(segs, 1e6), 5u);
}

TEST(Drcc, FixedX2SelectsSecondSegment) {
  Fixture f;
  f.p.segments = 6;
  f.p.range = 10.0;
  auto nb = drcc::build_nadir_block(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(nb.x2, 3.0 * nb.d, 3.0 * nb.d);
  f.prog.set_objective(AffineExpr(f.v.h) + AffineExpr(f.v.r));
  const auto res = solver::solve_misocp(f.prog);
  ASSERT_EQ(res.point.status, SolveStatus::optimal);
  double ones = 0.0;
  for (std::size_t n = 0; n < nb.z.size(); ++n) {
    ones += res.point[nb.z[n]];
    EXPECT_NEAR(res.point[nb.z[n]], n == 1 ? 1.0 : 0.0, 1e-6) << n;
  }
  EXPECT_NEAR(ones, 1.0, 1e-6);
  EXPECT_TRUE(conic::check_point(f.prog, res.point).clean(1e-6));
}

TEST(Drcc, OneHotAtRandomX2) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    Fixture f;
    f.p.segments = 4;
    f.p.range = 6.0;
    auto nb = drcc::build_nadir_block(f.prog, f.v, f.p, f.st, "t");
    std::uniform_real_distribution<double> u(1.0, 9.0);
    const double ratio = u(rng);
    f.prog.set_bounds(nb.x2, ratio * nb.d, ratio * nb.d);
    f.prog.set_objective(AffineExpr(nb.x1));
    const auto res = solver::solve_misocp(f.prog);
    ASSERT_EQ(res.point.status, SolveStatus::optimal);
    const auto want = drcc::active_segment(nb.segments, ratio);
    for (std::size_t n = 0; n < nb.z.size(); ++n) {
      EXPECT_NEAR(res.point[nb.z[n]], n == want ? 1.0 : 0.0, 1e-6) << ratio;
    }
    EXPECT_NEAR(res.point[nb.x1], drcc::pwl_value(nb.segments, ratio * nb.d, nb.d), 1e-5);
  }
}

TEST(Drcc, X1FloorAtX2EqualD) {
  Fixture f;
  f.p.segments = 6;
  f.p.range = 10.0;
  auto nb = drcc::build_nadir_block(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(nb.x2, nb.d, nb.d);
  f.prog.set_objective(AffineExpr(nb.x1));
  const auto res = solver::solve_misocp(f.prog);
  ASSERT_EQ(res.point.status, SolveStatus::optimal);
  // The exact square root vanishes; the first tangent sits on or above it.
  EXPECT_GE(res.point[nb.x1], -1e-7);
  EXPECT_NEAR(res.point[nb.x1], (nb.segments[0].a + nb.segments[0].b) * nb.d, 1e-6);
}

TEST(Drcc, NadirBlockAtOperatingPoint) {
  Fixture f;
  f.p.alpha = 0.0;
  auto nb = drcc::build_nadir_block(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(f.v.dp_l0, 37.0, 37.0);
  f.prog.set_bounds(f.v.h, 86.0, 86.0);
  f.prog.set_objective(AffineExpr(f.v.r));
  solver::SolveOptions opt;
  opt.rel_gap = 1e-9;
  const auto res = solver::solve_misocp(f.prog, opt);
  ASSERT_EQ(res.point.status, SolveStatus::optimal);
  const double x2 = 37.0 / std::sqrt(0.8);
  EXPECT_NEAR(x2, 41.367, 1e-3);
  EXPECT_NEAR(res.point[nb.x2], x2, 1e-5);
  // The linearized block is never weaker than the exact product condition.
  const double need = 10.0 / 4.0 * x2 * (x2 - nb.d);
  EXPECT_GE(86.0 * res.point[f.v.r], need - 1e-4);
  EXPECT_LE(res.point[f.v.r], 50.1);
  EXPECT_GE(res.point[f.v.r], 37.0 - 1e-6);
}

TEST(Drcc, BigMBelowCertifiedRejected) {
  Fixture f;
  f.p.big_m = 1.0;
  EXPECT_THROW(drcc::build_nadir_block(f.prog, f.v, f.p, f.st, "t"), conic::ModelError);
  Fixture g;
  g.p.big_m_prime = 1e-3;
  EXPECT_THROW(drcc::build_nadir_block(g.prog, g.v, g.p, g.st, "t"), conic::ModelError);
}

TEST(Drcc, CertifiedBigMCoversRange) {
  const auto segs = drcc::pwl_coefficients(8, 12.0);
  const double d = 0.7276;
  const auto bm = drcc::certified_big_m(segs, 60.0, drcc::xi(0.95), 0.1, 0.8, d);
  EXPECT_NEAR(bm.x2_max, 60.0 * (1.0 + std::sqrt(19.0) * 0.1) / std::sqrt(0.8), 1e-9);
  EXPECT_NEAR(bm.m, bm.x2_max + 13.0 * d, 1e-9);
  EXPECT_NEAR(bm.m_prime, segs[0].a * bm.x2_max + std::abs(segs[0].b) * d, 1e-9);
  for (const auto& s : segs) EXPECT_GE(bm.m_prime, s.a * bm.x2_max + s.b * d);
}

TEST(Drcc, RocofRequiresInertia) {
  Fixture f;
  drcc::build_rocof_constraint(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(f.v.dp_l0, 37.0, 37.0);
  f.prog.set_objective(AffineExpr(f.v.h));
  auto pt = solver::solve_relaxation(f.prog);
  ASSERT_EQ(pt.status, SolveStatus::optimal);
  EXPECT_NEAR(pt.objective, 37.0, 1e-6);

  f.prog.set_bounds(f.v.dp_l0, 0.0, 0.0);
  pt = solver::solve_relaxation(f.prog);
  EXPECT_NEAR(pt.objective, 0.0, 1e-6);

  f.prog.set_bounds(f.v.dp_l0, 30.2, 30.2);
  f.prog.set_bounds(f.v.h, 48.7, 48.7);
  EXPECT_EQ(solver::solve_relaxation(f.prog).status, SolveStatus::optimal);
}

TEST(Drcc, RocofUsesShiftedDisturbance) {
  Fixture f;
  f.p.alpha = 0.2;
  f.p.eta = 0.9;
  drcc::build_rocof_constraint(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(f.v.dp_l0, 40.0, 40.0);
  f.prog.set_bounds(f.v.dp_dmu, 10.0, 10.0);
  f.prog.set_objective(AffineExpr(f.v.h));
  const auto pt = solver::solve_relaxation(f.prog);
  // 40 - 10 + 3 * 0.2 * 10 = 36 MW at 0.5 Hz/s.
  EXPECT_NEAR(pt.objective, 36.0, 1e-6);
}

TEST(Drcc, SteadyStateBoundary) {
  Fixture f(0.998);
  drcc::build_ss_constraint(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(f.v.dp_l0, 30.2, 30.2);
  f.prog.set_objective(AffineExpr(f.v.r));
  const auto pt = solver::solve_relaxation(f.prog);
  ASSERT_EQ(pt.status, SolveStatus::optimal);
  EXPECT_NEAR(pt.objective, 30.2 - 0.998 * 0.5, 1e-6);
  EXPECT_NEAR(57.0 - pt.objective, 27.299, 1e-6);
}

TEST(Drcc, SteadyStateWindTerm) {
  Fixture f(0.998);
  f.add_wind(0.01, 10.0);
  drcc::build_ss_constraint(f.prog, f.v, f.p, f.st, "t");
  f.prog.set_bounds(f.v.dp_l0, 30.2, 30.2);
  f.prog.set_bounds(f.v.h_wind[0], 10.0, 10.0);
  f.prog.set_objective(AffineExpr(f.v.r));
  const auto pt = solver::solve_relaxation(f.prog);
  ASSERT_EQ(pt.status, SolveStatus::optimal);
  EXPECT_NEAR(pt.objective, 30.2 - 0.998 * 0.5 + 0.5, 1e-6);
}

TEST(Drcc, DeterministicCheck) {
  const auto at_point = drcc::deterministic_nadir_check(86.0, 50.1, 0.8135, 0.0, 10.0, 0.8, 37.0);
  EXPECT_TRUE(at_point.ok);
  EXPECT_NEAR(at_point.margin, 105.72375, 1e-6);
  const auto none = drcc::deterministic_nadir_check(86.0, 50.1, 0.8135, 0.0, 10.0, 0.8, 0.0);
  EXPECT_TRUE(none.ok);
  EXPECT_DOUBLE_EQ(none.margin, 86.0 * 50.1);
  const double need = 86.0 * 50.1 - at_point.margin;
  const auto short_by_one = drcc::deterministic_nadir_check(1.0, need - 1.0, 0.8135, 0.0, 10.0, 0.8, 37.0);
  EXPECT_FALSE(short_by_one.ok);
  EXPECT_NEAR(short_by_one.margin, -1.0, 1e-9);
}

TEST(Drcc, ConstantWindTermIsConservative) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double dp_max = 60.0;
    const double dp = dp_max * u(rng);
    const double gh2 = 0.01 * u(rng) * 100.0;
    EXPECT_GE(dp_max * 10.0 / 4.0 * gh2, dp * 10.0 / 4.0 * gh2);
  }
}

TEST(Drcc, GaussianCoverage) {
  const auto c = drcc::empirical_coverage(37.0, 3.0, 0.95, drcc::gaussian_sampler(37.0, 3.0), 100'000);
  EXPECT_TRUE(c.holds());
  EXPECT_GT(c.probability, 0.9999);
}

TEST(Drcc, UniformCoverage) {
  const auto c = drcc::empirical_coverage(37.0, 3.0, 0.9, drcc::uniform_sampler(37.0, 3.0), 100'000);
  EXPECT_TRUE(c.holds());
  EXPECT_EQ(c.probability, 1.0);
}

TEST(Drcc, TwoPointCoverageIsTight) {
  for (double eta : {0.8, 0.9, 0.95}) {
    const auto c = drcc::empirical_coverage(37.0, 3.0, eta, drcc::cantelli_two_point_sampler(37.0, 3.0, eta),
                                            100'000);
    EXPECT_TRUE(c.holds()) << eta;
    EXPECT_NEAR(c.probability, eta, 1e-4) << eta;
  }
}

TEST(Drcc, DegenerateCoverage) {
  const auto c = drcc::empirical_coverage(37.0, 0.0, 0.95, drcc::gaussian_sampler(37.0, 0.0), 10'000);
  EXPECT_EQ(c.probability, 1.0);
}

TEST(Drcc, CoverageRejectsBadSampler) {
  EXPECT_THROW(drcc::empirical_coverage(37.0, 3.0, 0.95, drcc::gaussian_sampler(37.0, 6.0), 20'000),
               std::runtime_error);
  EXPECT_THROW(drcc::empirical_coverage(37.0, 3.0, 0.95, drcc::gaussian_sampler(37.0, 3.0), 100),
               std::invalid_argument);
}
