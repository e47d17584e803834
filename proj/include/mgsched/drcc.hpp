#pragma once

// Distributionally robust frequency constraints for one islanding scenario:
// the rotated-cone nadir condition with an indicator-selected tangent-line
// under-estimator of x1, plus the linear RoCoF and conic steady-state rows.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgsched/conic/program.hpp"
#include "mgsched/netdata.hpp"

namespace mgsched::drcc {

using conic::AffineExpr;
using conic::Program;
using conic::Sense;
using conic::Var;

inline double xi(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::domain_error("confidence level must lie in (0, 1)");
  return std::sqrt(eta / (1.0 - eta));
}

struct DrccParams {
  double eta = 0.95;
  double alpha = 0.1;
  std::optional<double> dp_l_max;  // MW; the PCC rating when unset
  int segments = 8;                // N
  double range = 12.0;             // K
  std::optional<double> big_m;
  std::optional<double> big_m_prime;
  double epsilon_rel = 1e-6;  // strict-inequality gap, relative to d
  bool chord_cut = true;
  bool nadir_before_td = true;  // R >= effective disturbance
};

struct Segment {
  int n = 0;
  double a = 0.0;
  double b = 0.0;   // multiplies d
  double lo = 0.0;  // interval of x2/d, [lo, hi)
  double hi = 0.0;
};

inline std::vector<Segment> pwl_coefficients(int segments, double range) {
  if (segments < 2) throw std::invalid_argument("at least two segments are required");
  if (!(range > 0.0)) throw std::invalid_argument("range multiplier must be positive");
  const double k = range / (segments - 1);
  std::vector<Segment> out;
  for (int n = 1; n < segments; ++n) {
    const double nk = n * k;
    const double root = std::sqrt(nk * nk + nk);
    out.push_back({n, (2.0 * nk + 1.0) / (2.0 * root), (-nk - 1.0) / (2.0 * root),
                   k * (n - 1) + 1.0, nk + 1.0});
  }
  out.push_back({segments, 1.0, -0.5, range + 1.0, std::numeric_limits<double>::infinity()});
  return out;
}

// Index of the segment whose interval holds x2/d (x2 >= d).
inline std::size_t active_segment(const std::vector<Segment>& segs, double ratio) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (ratio < segs[i].hi) return i;
  }
  return segs.size() - 1;
}

inline double pwl_value(const std::vector<Segment>& segs, double x2, double d) {
  const auto& s = segs[active_segment(segs, x2 / d)];
  return s.a * x2 + s.b * d;
}

struct BigM {
  double x2_max = 0.0;
  double m = 0.0;        // interval rows
  double m_prime = 0.0;  // segment rows
};

inline BigM certified_big_m(const std::vector<Segment>& segs, double dp_l_max, double xi_v,
                            double alpha, double df_lim, double d) {
  BigM bm;
  bm.x2_max = std::max(d, dp_l_max * (1.0 + xi_v * alpha) / std::sqrt(df_lim));
  bm.m = bm.x2_max + (segs.back().lo) * d;
  bm.m_prime = segs.front().a * bm.x2_max + std::abs(segs.front().b) * d;
  return bm;
}

struct FrequencyVars {
  Var h;                  // total inertia, MWs/Hz
  Var r;                  // PFR, MW
  Var dp_dmu;             // mean noncritical shedding, MW
  Var dp_l0;              // interchange lost at islanding, MW
  std::vector<Var> h_wind;
  std::vector<double> gamma;
  AffineExpr dp_c;        // post-nadir storage injection, MW
};

struct Setting {
  netdata::FrequencyLimits limits;
  double d0 = 0.0;        // MW/Hz
  double dp_l_max = 0.0;  // MW
};

// dp_l0 - dp_dmu + xi * alpha * dp_dmu
inline AffineExpr effective_disturbance(const FrequencyVars& v, const DrccParams& p) {
  AffineExpr e(v.dp_l0);
  e.add(v.dp_dmu, -(1.0 - xi(p.eta) * p.alpha));
  return e;
}

struct NadirBlock {
  Var x1, x2;
  double d = 0.0;
  std::vector<Segment> segments;
  std::vector<Var> z;      // one per segment, last is the asymptote
  std::vector<Var> above;  // x2 >= lo_n, n < N
  std::vector<Var> below;  // x2 < hi_n, n < N
  conic::ConeId cone;
  conic::RowId x2_floor;   // x2 >= d
  BigM big_m;
};

inline NadirBlock build_nadir_block(Program& prog, const FrequencyVars& v, const DrccParams& p,
                                    const Setting& st, const std::string& tag) {
  const auto& lim = st.limits;
  NadirBlock nb;
  nb.d = std::sqrt(lim.df_lim) * st.d0;
  if (!(nb.d > 0.0)) throw conic::ModelError(tag + ": nadir block needs d > 0");
  const double xi_v = xi(p.eta);
  nb.segments = pwl_coefficients(p.segments, p.range);
  nb.big_m = certified_big_m(nb.segments, st.dp_l_max, xi_v, p.alpha, lim.df_lim, nb.d);
  if (p.big_m) {
    if (*p.big_m < nb.big_m.m) {
      throw conic::ModelError(tag + ": M = " + std::to_string(*p.big_m) +
                              " is below the certified bound " + std::to_string(nb.big_m.m));
    }
    nb.big_m.m = *p.big_m;
  }
  if (p.big_m_prime) {
    if (*p.big_m_prime < nb.big_m.m_prime) {
      throw conic::ModelError(tag + ": M' = " + std::to_string(*p.big_m_prime) +
                              " is below the certified bound " + std::to_string(nb.big_m.m_prime));
    }
    nb.big_m.m_prime = *p.big_m_prime;
  }
  const double d = nb.d;
  const double m = nb.big_m.m;
  const double mp = nb.big_m.m_prime;
  const double eps = p.epsilon_rel * d;

  nb.x1 = prog.add_continuous("x1_" + tag, 0.0, conic::kInf);
  nb.x2 = prog.add_continuous("x2_" + tag, 0.0, nb.big_m.x2_max);
  prog.add_row("x2def_" + tag,
               std::sqrt(lim.df_lim) * AffineExpr(nb.x2) - effective_disturbance(v, p),
               Sense::greater_equal, 0.0);
  nb.x2_floor = prog.add_row("x2floor_" + tag, AffineExpr(nb.x2), Sense::greater_equal, d);

  // 2 H R >= (T_d/2) x1^2 + sum_w (dP_max T_d gamma_w / 2) H_w^2
  std::vector<AffineExpr> u{std::sqrt(lim.t_d / 2.0) * nb.x1};
  for (std::size_t w = 0; w < v.h_wind.size(); ++w) {
    const double c = std::sqrt(st.dp_l_max * lim.t_d * v.gamma[w] / 2.0);
    if (c > 0.0) u.push_back(c * v.h_wind[w]);
  }
  nb.cone = prog.add_rotated_cone("nadir_" + tag, AffineExpr(v.h), AffineExpr(v.r), u);

  AffineExpr one_hot;
  for (const auto& s : nb.segments) {
    const std::string sn = tag + "_" + std::to_string(s.n);
    const Var z = prog.add_binary("z_" + sn);
    nb.z.push_back(z);
    one_hot.add(z, 1.0);
    if (s.n < p.segments) {
      const Var up = prog.add_binary("zlo_" + sn);
      const Var dn = prog.add_binary("zhi_" + sn);
      nb.above.push_back(up);
      nb.below.push_back(dn);
      const double lo = s.lo * d;
      const double hi = s.hi * d;
      prog.add_row("ilo0_" + sn, nb.x2 - m * up, Sense::less_equal, lo - eps);
      prog.add_row("ilo1_" + sn, nb.x2 - m * up, Sense::greater_equal, lo - m);
      prog.add_row("ihi1_" + sn, nb.x2 + m * dn, Sense::less_equal, hi - eps + m);
      prog.add_row("ihi0_" + sn, nb.x2 + m * dn, Sense::greater_equal, hi);
      prog.add_row("ione_" + sn, z - up - dn, Sense::equal, -1.0);
    } else {
      const double lo = s.lo * d;
      prog.add_row("ilo0_" + sn, nb.x2 - m * z, Sense::less_equal, lo - eps);
      prog.add_row("ilo1_" + sn, nb.x2 - m * z, Sense::greater_equal, lo - m);
    }
    // x1 >= a x2 + b d + (z - 1) M'
    prog.add_row("seg_" + sn, nb.x1 - s.a * nb.x2 - mp * z, Sense::greater_equal, s.b * d - mp);
  }
  prog.add_row("onehot_" + tag, one_hot, Sense::equal, 1.0);

  if (p.chord_cut && nb.big_m.x2_max > d) {
    const double x2m = nb.big_m.x2_max;
    const double slope = std::sqrt(x2m * (x2m - d)) / (x2m - d);
    prog.add_row("chord_" + tag, nb.x1 - slope * nb.x2, Sense::greater_equal, -slope * d);
  }
  if (p.nadir_before_td) {
    prog.add_row("pfrcover_" + tag, AffineExpr(v.r) - effective_disturbance(v, p),
                 Sense::greater_equal, 0.0);
  }
  return nb;
}

// 2 H rocof_lim >= effective disturbance
inline conic::RowId build_rocof_constraint(Program& prog, const FrequencyVars& v,
                                           const DrccParams& p, const Setting& st,
                                           const std::string& tag) {
  return prog.add_row("rocof_" + tag,
                      2.0 * st.limits.rocof_lim * AffineExpr(v.h) - effective_disturbance(v, p),
                      Sense::greater_equal, 0.0);
}

// R + dPc + D0 df_ss - effective disturbance >= df_ss sum_w gamma_w H_w^2,
// as 2 * p * (1/2) >= sum_w (sqrt(df_ss gamma_w) H_w)^2.
inline conic::ConeId build_ss_constraint(Program& prog, const FrequencyVars& v,
                                         const DrccParams& p, const Setting& st,
                                         const std::string& tag) {
  const double dfss = st.limits.df_ss_lim;
  AffineExpr lhs = AffineExpr(v.r) + v.dp_c - effective_disturbance(v, p);
  lhs.add_constant(st.d0 * dfss);
  std::vector<AffineExpr> u;
  for (std::size_t w = 0; w < v.h_wind.size(); ++w) {
    const double c = std::sqrt(dfss * v.gamma[w]);
    if (c > 0.0) u.push_back(c * v.h_wind[w]);
  }
  return prog.add_rotated_cone("steady_" + tag, lhs, AffineExpr(0.5), u);
}

struct NadirCheck {
  bool ok = false;
  double margin = 0.0;  // H R minus the required product
};

// H R >= dP^2 T_d / (4 df_lim) - dP T_d D0 / 4 + dP T_d (sum gamma H_w^2) / 4
inline NadirCheck deterministic_nadir_check(double h, double r, double d0, double gamma_h2,
                                            double t_d, double df_lim, double dp) {
  const double need = dp * dp * t_d / (4.0 * df_lim) - dp * t_d * d0 / 4.0 + dp * t_d * gamma_h2 / 4.0;
  const double margin = h * r - need;
  return {margin >= 0.0, margin};
}

// Batch sampler: fills n draws using the supplied engine.
using Sampler = std::function<std::vector<double>(std::size_t, std::mt19937_64&)>;

inline Sampler gaussian_sampler(double mu, double sigma) {
  return [=](std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(mu, sigma);
    std::vector<double> out(n);
    for (auto& x : out) x = sigma > 0.0 ? dist(rng) : mu;
    return out;
  };
}

inline Sampler uniform_sampler(double mu, double sigma) {
  const double half = std::sqrt(3.0) * sigma;
  return [=](std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(mu - half, mu + half);
    std::vector<double> out(n);
    for (auto& x : out) x = sigma > 0.0 ? dist(rng) : mu;
    return out;
  };
}

// Two-point law that makes the one-sided Chebyshev bound tight: mass eta below
// the mean, mass 1 - eta at mu + xi sigma. The upper atom is nudged just past
// the threshold so that it counts as a miss. Counts are exact and shuffled.
inline Sampler cantelli_two_point_sampler(double mu, double sigma, double eta) {
  const double lo = mu - sigma * std::sqrt((1.0 - eta) / eta);
  const double hi = mu + sigma * xi(eta) * (1.0 + 1e-6);
  return [=](std::size_t n, std::mt19937_64& rng) {
    const auto n_lo = static_cast<std::size_t>(std::llround(eta * static_cast<double>(n)));
    std::vector<double> out(n, hi);
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(std::min(n_lo, n)), lo);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  };
}

struct Coverage {
  double probability = 0.0;  // fraction of draws <= mu + xi sigma
  double floor = 0.0;        // eta - 3 binomial standard errors
  double sample_mean = 0.0;
  double sample_std = 0.0;
  [[nodiscard]] bool holds() const { return probability >= floor; }
};

inline Coverage empirical_coverage(double mu, double sigma, double eta, const Sampler& sampler,
                                   std::size_t n_samples, std::uint64_t seed = 1) {
  if (n_samples < 10'000) throw std::invalid_argument("at least 10^4 samples are required");
  std::mt19937_64 rng(seed);
  const auto xs = sampler(n_samples, rng);
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  const double mtol = 0.01 * std::max(std::abs(mu), sigma) + 1e-12 * (1.0 + std::abs(mu));
  const double stol = 0.01 * sigma + 1e-12 * (1.0 + std::abs(mu));
  if (std::abs(mean - mu) > mtol || std::abs(sd - sigma) > stol) {
    throw std::runtime_error("sampler moments (" + std::to_string(mean) + ", " + std::to_string(sd) +
                             ") deviate from (" + std::to_string(mu) + ", " +
                             std::to_string(sigma) + ") by more than 1%");
  }
  const double threshold = mu + xi(eta) * sigma;
  const auto hits = std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= threshold; });
  Coverage c;
  c.probability = static_cast<double>(hits) / n;
  c.floor = eta - 3.0 * std::sqrt(eta * (1.0 - eta) / n);
  c.sample_mean = mean;
  c.sample_std = sd;
  return c;
}

}  // namespace mgsched::drcc
