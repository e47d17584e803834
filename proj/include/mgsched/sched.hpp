#pragma once

// Two-stage stochastic, frequency-constrained microgrid scheduling model.
//
// Units: generator, storage, renewable, load and frequency quantities are in
// MW / MVAr / MWs/Hz; the network block (W matrix, flows, shunts) is in per
// unit on the case base. Storage power is an injection (discharge > 0).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mgsched/conic/check.hpp"
#include "mgsched/conic/program.hpp"
#include "mgsched/drcc.hpp"
#include "mgsched/netdata.hpp"

namespace mgsched::sched {

using conic::AffineExpr;
using conic::Program;
using conic::Sense;
using conic::Var;
using netdata::NetworkCase;
using netdata::ScenarioSet;

enum class CaseMode { base, case_i, case_ii };

inline const char* to_string(CaseMode m) {
  switch (m) {
    case CaseMode::base: return "base";
    case CaseMode::case_i: return "caseI";
    case CaseMode::case_ii: return "caseII";
  }
  return "unknown";
}

inline std::optional<CaseMode> parse_mode(const std::string& s) {
  if (s == "base") return CaseMode::base;
  if (s == "caseI" || s == "case_i" || s == "case1") return CaseMode::case_i;
  if (s == "caseII" || s == "case_ii" || s == "case2") return CaseMode::case_ii;
  return std::nullopt;
}

struct BuildOptions {
  bool frequency = true;          // nadir, RoCoF and steady-state blocks
  bool synthetic_inertia = true;  // storage and wind SI allowed
  bool constant_power = true;     // post-nadir storage injection allowed
  drcc::DrccParams drcc;

  static BuildOptions for_mode(CaseMode m) {
    BuildOptions o;
    o.frequency = m != CaseMode::base;
    o.synthetic_inertia = m == CaseMode::case_ii;
    return o;
  }
};

// Per-(t,s) variable handles, flattened as [(t * S + s) * n + unit].
struct ModelMap {
  int periods = 0;
  int scenarios = 0;
  BuildOptions options;
  bool frequency_blocks = false;  // options.frequency and a nonzero PCC rating

  std::vector<Var> gen_y, gen_z, gen_p, gen_q, gen_r;
  std::vector<Var> imp_p, imp_q;
  std::vector<Var> sto_p, sto_soc, sto_h, sto_c;
  std::vector<Var> wind_p, wind_h;
  std::vector<Var> pv_p;
  std::vector<Var> shed_p, shed_q, shed_q2;
  std::vector<Var> w_diag;            // per bus
  std::vector<Var> w_re, w_im;        // per branch
  std::vector<Var> inertia, pfr, shed_mu;  // per (t,s) when frequency blocks exist
  std::vector<drcc::NadirBlock> nadir;     // per (t,s)
  std::vector<double> d0;                  // per (t,s)
  double dp_l_max = 0.0;

  [[nodiscard]] std::size_t ts(int t, int s) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(scenarios) + static_cast<std::size_t>(s);
  }
  [[nodiscard]] std::size_t at(int t, int s, std::size_t n, std::size_t unit) const {
    return ts(t, s) * n + unit;
  }
};

struct Model {
  Program program;
  ModelMap map;
};

struct Diagnostic {
  int period = 0;    // 1-based, 0 when not period specific
  int scenario = -1;
  std::string message;
};

inline std::string tag_of(const ScenarioSet& sc, int t, int s) {
  return "t" + std::to_string(t + 1) + "_" + sc.names[static_cast<std::size_t>(s)];
}

inline double dp_l_max_of(const NetworkCase& c, const BuildOptions& o) {
  return o.drcc.dp_l_max.value_or(c.pcc.s_max);
}

// Interval checks that prove infeasibility before any solve.
inline std::vector<Diagnostic> presolve_diagnostics(const NetworkCase& c, const ScenarioSet& sc,
                                                    const BuildOptions& o) {
  std::vector<Diagnostic> out;
  if (!o.frequency || c.pcc.s_max <= 0.0) return out;
  const auto& lim = c.frequency;
  const auto segs = drcc::pwl_coefficients(o.drcc.segments, o.drcc.range);
  const double keep = std::max(0.0, 1.0 - drcc::xi(o.drcc.eta) * o.drcc.alpha);
  double h_sg = 0.0;
  double r_max = 0.0;
  for (const auto& g : c.generators) {
    h_sg += g.h * g.p_max / lim.f0;
    r_max += std::min(g.pfr_max, g.p_max);
  }
  double pc_max = 0.0;
  if (o.constant_power) {
    for (const auto& b : c.storage) pc_max += std::max(0.0, b.p_dch - b.p_ch);
  }
  for (int s = 0; s < sc.scenarios(); ++s) {
    for (int t = 0; t < sc.periods; ++t) {
      double h_max = h_sg;
      if (o.synthetic_inertia) {
        for (const auto& b : c.storage) h_max += std::max(0.0, (b.p_dch - b.p_ch) / (2.0 * lim.rocof_lim));
        for (double v : sc.si_max[s][t]) h_max += v;
      }
      double rho_cap = 0.0;
      for (std::size_t l = 0; l < c.loads.size(); ++l) rho_cap += c.loads[l].rho * sc.load_p[s][t][l];
      // Smallest effective disturbance the import floor allows.
      const double dp_min = c.pcc.p_min - keep * std::min(c.pcc.p_min, rho_cap);
      const double d0 = lim.d0(sc.total_demand(s, t));
      const double d = std::sqrt(lim.df_lim) * d0;
      const double x2_min = std::max(d, dp_min / std::sqrt(lim.df_lim));
      const double x1_min = std::max((segs.front().a + segs.front().b) * d, std::sqrt(x2_min * (x2_min - d)));
      const double need = lim.t_d / 4.0 * x1_min * x1_min;
      if (h_max * r_max < need) {
        out.push_back({t + 1, s,
                       "nadir block infeasible: max H*R = " + std::to_string(h_max * r_max) +
                           " below the minimum " + std::to_string(need)});
      }
      if (2.0 * h_max * lim.rocof_lim < dp_min) {
        out.push_back({t + 1, s,
                       "RoCoF row infeasible: max 2*H*rocof_lim = " + std::to_string(2.0 * h_max * lim.rocof_lim) +
                           " MW below the forced disturbance " + std::to_string(dp_min) + " MW"});
      }
      if (r_max + pc_max + d0 * lim.df_ss_lim < dp_min) {
        out.push_back({t + 1, s,
                       "steady-state cone infeasible: max R + dP_C + D0*df_ss_lim = " +
                           std::to_string(r_max + pc_max + d0 * lim.df_ss_lim) + " MW below the forced disturbance " +
                           std::to_string(dp_min) + " MW"});
      }
    }
  }
  return out;
}

inline Model build_model(const NetworkCase& c, const ScenarioSet& sc, const BuildOptions& o) {
  Model model;
  Program& P = model.program;
  ModelMap& m = model.map;
  const int T = sc.periods;
  const int S = sc.scenarios();
  m.periods = T;
  m.scenarios = S;
  m.options = o;
  m.frequency_blocks = o.frequency && c.pcc.s_max > 0.0;
  m.dp_l_max = dp_l_max_of(c, o);
  const auto& lim = c.frequency;
  const double base = c.base_mva;
  const double dt = sc.dt_h;
  const std::size_t G = c.generators.size();
  const std::size_t B = c.storage.size();
  const std::size_t W = c.wind.size();
  const std::size_t M = c.pv.size();
  const std::size_t L = c.loads.size();
  const std::size_t NB = c.buses.size();
  const std::size_t NR = c.branches.size();
  const std::size_t TS = static_cast<std::size_t>(T) * static_cast<std::size_t>(S);

  auto resize = [&](std::vector<Var>& v, std::size_t n) { v.resize(TS * n); };
  resize(m.gen_y, G), resize(m.gen_z, G), resize(m.gen_p, G), resize(m.gen_q, G);
  resize(m.imp_p, 1), resize(m.imp_q, 1);
  resize(m.sto_p, B), resize(m.sto_soc, B);
  resize(m.wind_p, W), resize(m.pv_p, M);
  resize(m.shed_p, L), resize(m.shed_q, L), resize(m.shed_q2, L);
  resize(m.w_diag, NB), resize(m.w_re, NR), resize(m.w_im, NR);
  if (m.frequency_blocks) {
    resize(m.gen_r, G), resize(m.sto_h, B), resize(m.sto_c, B), resize(m.wind_h, W);
    resize(m.inertia, 1), resize(m.pfr, 1), resize(m.shed_mu, 1);
    m.nadir.resize(TS);
  }
  m.d0.resize(TS);

  AffineExpr objective;

  // Variables, grouped per (t, s) in a fixed order.
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const std::string tag = tag_of(sc, t, s);
      const std::size_t k = m.ts(t, s);
      const double pi = sc.probability[static_cast<std::size_t>(s)];
      m.d0[k] = lim.d0(sc.total_demand(s, t));
      for (std::size_t g = 0; g < G; ++g) {
        const auto& u = c.generators[g];
        const std::string n = u.id + "_" + tag;
        const std::size_t i = m.at(t, s, G, g);
        m.gen_y[i] = P.add_binary("y_" + n);
        m.gen_z[i] = P.add_binary("z_" + n);
        m.gen_p[i] = P.add_continuous("p_" + n, 0.0, u.p_max);
        m.gen_q[i] = P.add_continuous("q_" + n, std::min(0.0, u.q_min), std::max(0.0, u.q_max));
        objective.add(m.gen_z[i], pi * u.c_su);
        if (u.cls == netdata::GenClass::fast) {
          objective.add(m.gen_y[i], pi * dt * u.c_r1);
        } else {
          objective.add(m.gen_p[i], pi * dt * u.c_r2);
        }
      }
      const double smax = c.pcc.s_max;
      m.imp_p[k] = P.add_continuous("pim_" + tag, c.pcc.p_min, smax);
      m.imp_q[k] = P.add_continuous("qim_" + tag, -smax, smax);
      for (std::size_t b = 0; b < B; ++b) {
        const auto& u = c.storage[b];
        const std::size_t i = m.at(t, s, B, b);
        m.sto_p[i] = P.add_continuous("pb_" + u.id + "_" + tag, u.p_ch, u.p_dch);
        m.sto_soc[i] = P.add_continuous("soc_" + u.id + "_" + tag, u.soc_min, u.soc_max);
      }
      for (std::size_t w = 0; w < W; ++w) {
        m.wind_p[m.at(t, s, W, w)] =
            P.add_continuous("pw_" + c.wind[w].id + "_" + tag, 0.0, sc.wind_mw[s][t][w]);
      }
      for (std::size_t j = 0; j < M; ++j) {
        m.pv_p[m.at(t, s, M, j)] =
            P.add_continuous("pm_" + c.pv[j].id + "_" + tag, 0.0, sc.pv_mw[s][t][j]);
      }
      for (std::size_t l = 0; l < L; ++l) {
        const auto& u = c.loads[l];
        const std::size_t i = m.at(t, s, L, l);
        const double pl = sc.load_p[s][t][l];
        const double ql = sc.load_q[s][t][l];
        m.shed_p[i] = P.add_continuous("pc_" + u.id + "_" + tag, 0.0, pl);
        m.shed_q[i] = P.add_continuous("qc_" + u.id + "_" + tag, std::min(0.0, ql), std::max(0.0, ql));
        m.shed_q2[i] = P.add_continuous("qc2_" + u.id + "_" + tag, 0.0, conic::kInf);
        objective.add(m.shed_p[i], pi * dt * u.voll);
        objective.add(m.shed_q2[i], pi * dt * u.voll);
        P.add_rotated_cone("qsq_" + u.id + "_" + tag, AffineExpr(m.shed_q2[i]), AffineExpr(0.5),
                           {AffineExpr(m.shed_q[i])});
      }
      for (std::size_t i = 0; i < NB; ++i) {
        const auto& bus = c.buses[i];
        m.w_diag[m.at(t, s, NB, i)] = P.add_continuous(
            "wd_" + std::to_string(bus.id) + "_" + tag, bus.v_min * bus.v_min, bus.v_max * bus.v_max);
      }
      for (std::size_t r = 0; r < NR; ++r) {
        const auto& br = c.branches[r];
        const auto& bf = c.buses[*c.bus_index(br.from)];
        const auto& bt = c.buses[*c.bus_index(br.to)];
        const double vmax = bf.v_max * bt.v_max;
        m.w_re[m.at(t, s, NR, r)] = P.add_continuous("wr_" + br.id + "_" + tag, 0.0, vmax);
        m.w_im[m.at(t, s, NR, r)] = P.add_continuous("wi_" + br.id + "_" + tag, -vmax, vmax);
      }
      if (m.frequency_blocks) {
        const bool si = o.synthetic_inertia;
        for (std::size_t g = 0; g < G; ++g) {
          const auto& u = c.generators[g];
          m.gen_r[m.at(t, s, G, g)] =
              P.add_continuous("r_" + u.id + "_" + tag, 0.0, std::min(u.pfr_max, u.p_max));
        }
        for (std::size_t b = 0; b < B; ++b) {
          const auto& u = c.storage[b];
          const std::size_t i = m.at(t, s, B, b);
          const double hmax = si ? (u.p_dch - u.p_ch) / (2.0 * lim.rocof_lim) : 0.0;
          m.sto_h[i] = P.add_continuous("hb_" + u.id + "_" + tag, 0.0, hmax);
          m.sto_c[i] = P.add_continuous("dpc_" + u.id + "_" + tag, 0.0,
                                        o.constant_power ? u.p_dch - u.p_ch : 0.0);
        }
        for (std::size_t w = 0; w < W; ++w) {
          m.wind_h[m.at(t, s, W, w)] = P.add_continuous("hw_" + c.wind[w].id + "_" + tag, 0.0,
                                                        si ? sc.si_max[s][t][w] : 0.0);
        }
        double rho_cap = 0.0;
        for (std::size_t l = 0; l < L; ++l) rho_cap += c.loads[l].rho * sc.load_p[s][t][l];
        m.inertia[k] = P.add_continuous("h_" + tag, 0.0, conic::kInf);
        m.pfr[k] = P.add_continuous("r_" + tag, 0.0, conic::kInf);
        m.shed_mu[k] = P.add_continuous("dpd_" + tag, 0.0, rho_cap);
      }
    }
  }
  P.set_objective(objective);

  // Unit commitment.
  for (int s = 0; s < S; ++s) {
    for (std::size_t g = 0; g < G; ++g) {
      const auto& u = c.generators[g];
      auto y_at = [&](int t) -> AffineExpr {
        if (t < 0) return AffineExpr(u.initial_on ? 1.0 : 0.0);
        return AffineExpr(m.gen_y[m.at(t, s, G, g)]);
      };
      for (int t = 0; t < T; ++t) {
        const std::string n = u.id + "_" + tag_of(sc, t, s);
        const std::size_t i = m.at(t, s, G, g);
        const Var y = m.gen_y[i];
        P.add_row("su_" + n, AffineExpr(m.gen_z[i]) - y_at(t) + y_at(t - 1), Sense::greater_equal, 0.0);
        AffineExpr up;
        for (int tau = std::max(0, t - u.min_up + 1); tau <= t; ++tau) up.add(m.gen_z[m.at(tau, s, G, g)], 1.0);
        P.add_row("mup_" + n, up - y, Sense::less_equal, 0.0);
        AffineExpr down;
        for (int tau = std::max(0, t - u.min_down + 1); tau <= t; ++tau) {
          down.add(m.gen_z[m.at(tau, s, G, g)], 1.0);
        }
        P.add_row("mdn_" + n, down + y_at(t - u.min_down), Sense::less_equal, 1.0);
        P.add_row("pmin_" + n, m.gen_p[i] - u.p_min * y, Sense::greater_equal, 0.0);
        P.add_row("pmax_" + n, m.gen_p[i] - u.p_max * y, Sense::less_equal, 0.0);
        P.add_row("qmin_" + n, m.gen_q[i] - u.q_min * y, Sense::greater_equal, 0.0);
        P.add_row("qmax_" + n, m.gen_q[i] - u.q_max * y, Sense::less_equal, 0.0);
        if (m.frequency_blocks) {
          const Var r = m.gen_r[i];
          P.add_row("rcap_" + n, r - u.pfr_max * y, Sense::less_equal, 0.0);
          P.add_row("rhead_" + n, r + m.gen_p[i] - u.p_max * y, Sense::less_equal, 0.0);
        }
        if (u.cls == netdata::GenClass::slow && s > 0) {
          const std::size_t i0 = m.at(t, 0, G, g);
          P.add_row("nay_" + n, m.gen_y[i] - m.gen_y[i0], Sense::equal, 0.0);
          P.add_row("naz_" + n, m.gen_z[i] - m.gen_z[i0], Sense::equal, 0.0);
        }
      }
    }
  }

  // Storage energy and headroom.
  for (int s = 0; s < S; ++s) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto& u = c.storage[b];
      for (int t = 0; t < T; ++t) {
        const std::string n = u.id + "_" + tag_of(sc, t, s);
        const std::size_t i = m.at(t, s, B, b);
        // SoC_t E = SoC_{t-1} E - eta p dt
        AffineExpr bal = u.e_cap * AffineExpr(m.sto_soc[i]) + u.eta * dt * AffineExpr(m.sto_p[i]);
        if (t == 0) {
          P.add_row("soc_" + n, bal, Sense::equal, u.soc_init * u.e_cap);
        } else {
          P.add_row("soc_" + n, bal - u.e_cap * AffineExpr(m.sto_soc[m.at(t - 1, s, B, b)]),
                    Sense::equal, 0.0);
        }
        if (m.frequency_blocks) {
          const Var h = m.sto_h[i];
          const Var pc = m.sto_c[i];
          const double two_rocof = 2.0 * lim.rocof_lim;
          P.add_row("sih_" + n, m.sto_p[i] + two_rocof * h, Sense::less_equal, u.p_dch);
          P.add_row("sil_" + n, m.sto_p[i] + two_rocof * h, Sense::greater_equal, u.p_ch);
          P.add_row("pch_" + n, m.sto_p[i] + pc, Sense::less_equal, u.p_dch);
          P.add_row("pcl_" + n, m.sto_p[i] + pc, Sense::greater_equal, u.p_ch);
          const double hours = u.t_s / 3600.0;
          P.add_row("pce_" + n, hours * AffineExpr(pc) - u.e_cap * AffineExpr(m.sto_soc[i]),
                    Sense::less_equal, 0.0);
          if (t == 0) {
            P.add_row("pcs_" + n, hours * AffineExpr(pc), Sense::less_equal, u.soc_init * u.e_cap);
          } else {
            P.add_row("pcs_" + n,
                      hours * AffineExpr(pc) - u.e_cap * AffineExpr(m.sto_soc[m.at(t - 1, s, B, b)]),
                      Sense::less_equal, 0.0);
          }
        }
      }
      P.add_row("socend_" + u.id + "_" + sc.names[static_cast<std::size_t>(s)],
                AffineExpr(m.sto_soc[m.at(T - 1, s, B, b)]), Sense::equal, u.soc_init);
    }
  }

  // Network: bus balance in per unit, W-matrix cones, flows and ratings.
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const std::string tag = tag_of(sc, t, s);
      std::vector<AffineExpr> pbal(NB), qbal(NB);  // injections minus withdrawals
      auto bus_of = [&](int id) { return *c.bus_index(id); };
      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t i = m.at(t, s, G, g);
        const std::size_t bi = bus_of(c.generators[g].bus);
        pbal[bi].add(m.gen_p[i], 1.0 / base);
        qbal[bi].add(m.gen_q[i], 1.0 / base);
      }
      {
        const std::size_t bi = bus_of(c.pcc.bus);
        pbal[bi].add(m.imp_p[m.ts(t, s)], 1.0 / base);
        qbal[bi].add(m.imp_q[m.ts(t, s)], 1.0 / base);
      }
      for (std::size_t b = 0; b < B; ++b) {
        pbal[bus_of(c.storage[b].bus)].add(m.sto_p[m.at(t, s, B, b)], 1.0 / base);
      }
      for (std::size_t w = 0; w < W; ++w) pbal[bus_of(c.wind[w].bus)].add(m.wind_p[m.at(t, s, W, w)], 1.0 / base);
      for (std::size_t j = 0; j < M; ++j) pbal[bus_of(c.pv[j].bus)].add(m.pv_p[m.at(t, s, M, j)], 1.0 / base);
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t bi = bus_of(c.loads[l].bus);
        const std::size_t i = m.at(t, s, L, l);
        pbal[bi].add(m.shed_p[i], 1.0 / base);
        pbal[bi].add_constant(-sc.load_p[s][t][l] / base);
        qbal[bi].add(m.shed_q[i], 1.0 / base);
        qbal[bi].add_constant(-sc.load_q[s][t][l] / base);
      }
      for (std::size_t i = 0; i < NB; ++i) {
        const Var wd = m.w_diag[m.at(t, s, NB, i)];
        pbal[i].add(wd, -c.buses[i].g_sh);
        qbal[i].add(wd, c.buses[i].b_sh);
      }
      for (std::size_t r = 0; r < NR; ++r) {
        const auto& br = c.branches[r];
        const std::size_t fi = bus_of(br.from);
        const std::size_t ti = bus_of(br.to);
        const Var wi = m.w_diag[m.at(t, s, NB, fi)];
        const Var wj = m.w_diag[m.at(t, s, NB, ti)];
        const Var cr = m.w_re[m.at(t, s, NR, r)];
        const Var si = m.w_im[m.at(t, s, NR, r)];
        const double g = br.g();
        const double bb = br.b();
        const double hc = br.b_charge / 2.0;
        AffineExpr p_ij = g * AffineExpr(wi) - g * AffineExpr(cr) - bb * AffineExpr(si);
        AffineExpr q_ij = (-bb - hc) * AffineExpr(wi) + bb * AffineExpr(cr) - g * AffineExpr(si);
        AffineExpr p_ji = g * AffineExpr(wj) - g * AffineExpr(cr) + bb * AffineExpr(si);
        AffineExpr q_ji = (-bb - hc) * AffineExpr(wj) + bb * AffineExpr(cr) + g * AffineExpr(si);
        pbal[fi] -= p_ij;
        qbal[fi] -= q_ij;
        pbal[ti] -= p_ji;
        qbal[ti] -= q_ji;
        const std::string n = br.id + "_" + tag;
        P.add_rotated_cone("wcone_" + n, AffineExpr(wi), 0.5 * AffineExpr(wj),
                           {AffineExpr(cr), AffineExpr(si)});
        const double smax = br.s_max / base;
        P.add_second_order_cone("sij_" + n, AffineExpr(smax), {p_ij, q_ij});
        P.add_second_order_cone("sji_" + n, AffineExpr(smax), {p_ji, q_ji});
      }
      for (std::size_t i = 0; i < NB; ++i) {
        const std::string n = std::to_string(c.buses[i].id) + "_" + tag;
        P.add_row("pbal_" + n, pbal[i], Sense::equal, 0.0);
        P.add_row("qbal_" + n, qbal[i], Sense::equal, 0.0);
      }
      const std::size_t k = m.ts(t, s);
      P.add_second_order_cone("pcc_" + tag, AffineExpr(c.pcc.s_max),
                              {AffineExpr(m.imp_p[k]), AffineExpr(m.imp_q[k])});
    }
  }

  // Frequency security per (t, s).
  if (m.frequency_blocks) {
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        const std::string tag = tag_of(sc, t, s);
        const std::size_t k = m.ts(t, s);
        AffineExpr hdef(m.inertia[k]);
        AffineExpr rdef(m.pfr[k]);
        for (std::size_t g = 0; g < G; ++g) {
          const auto& u = c.generators[g];
          hdef.add(m.gen_y[m.at(t, s, G, g)], -u.h * u.p_max / lim.f0);
          rdef.add(m.gen_r[m.at(t, s, G, g)], -1.0);
        }
        drcc::FrequencyVars fv;
        for (std::size_t b = 0; b < B; ++b) {
          hdef.add(m.sto_h[m.at(t, s, B, b)], -1.0);
          fv.dp_c.add(m.sto_c[m.at(t, s, B, b)], 1.0);
        }
        for (std::size_t w = 0; w < W; ++w) {
          hdef.add(m.wind_h[m.at(t, s, W, w)], -1.0);
          fv.h_wind.push_back(m.wind_h[m.at(t, s, W, w)]);
          fv.gamma.push_back(c.wind[w].gamma);
        }
        P.add_row("hdef_" + tag, hdef, Sense::equal, 0.0);
        P.add_row("rdef_" + tag, rdef, Sense::equal, 0.0);
        fv.h = m.inertia[k];
        fv.r = m.pfr[k];
        fv.dp_dmu = m.shed_mu[k];
        fv.dp_l0 = m.imp_p[k];
        P.add_row("dpdcap_" + tag, m.shed_mu[k] - m.imp_p[k], Sense::less_equal, 0.0);
        const drcc::Setting st{lim, m.d0[k], m.dp_l_max};
        m.nadir[k] = drcc::build_nadir_block(P, fv, o.drcc, st, tag);
        drcc::build_rocof_constraint(P, fv, o.drcc, st, tag);
        drcc::build_ss_constraint(P, fv, o.drcc, st, tag);
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Solutions

struct CostBreakdown {
  double start_up = 0.0;
  double fixed_running = 0.0;
  double flexible_running = 0.0;
  double shed_active = 0.0;
  double shed_reactive = 0.0;
  [[nodiscard]] double total() const {
    return start_up + fixed_running + flexible_running + shed_active + shed_reactive;
  }
};

struct PeriodScenario {
  double import_p = 0.0, import_q = 0.0;
  double demand = 0.0;
  double d0 = 0.0;
  double inertia_sg = 0.0;   // from commitments
  double inertia = 0.0;      // including synthetic inertia
  double pfr = 0.0;          // scheduled PFR (zero without frequency blocks)
  double pfr_available = 0.0;
  double shed_mu = 0.0;
  double constant_power = 0.0;
  double x1 = 0.0, x2 = 0.0;
  int segment = 0;           // active nadir segment, 0 when absent
  std::vector<int> y, z;
  std::vector<double> p, q, r;
  std::vector<double> p_b, soc, h_b, pc_b;
  std::vector<double> p_w, h_w;
  std::vector<double> p_m;
  std::vector<double> p_c, q_c;
  std::vector<double> w_gap;  // W_ii W_jj - |W_ij|^2 per branch, p.u.^2
};

struct ScheduleSolution {
  std::string mode;
  std::string status;
  int periods = 0;
  int scenarios = 0;
  double dt_h = 1.0;
  bool frequency_blocks = false;
  double eta = 0.95;
  double alpha = 0.0;
  std::vector<std::string> scenario_names;
  std::vector<double> probability;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  CostBreakdown cost;
  std::vector<std::vector<PeriodScenario>> at;  // [t][s]
};

class SolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline CostBreakdown cost_breakdown(const ScheduleSolution& sol, const NetworkCase& c) {
  CostBreakdown cb;
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) {
      const double pi = sol.probability[static_cast<std::size_t>(s)];
      const auto& x = sol.at[t][s];
      for (std::size_t g = 0; g < c.generators.size(); ++g) {
        const auto& u = c.generators[g];
        cb.start_up += pi * u.c_su * x.z[g];
        if (u.cls == netdata::GenClass::fast) {
          cb.fixed_running += pi * sol.dt_h * u.c_r1 * x.y[g];
        } else {
          cb.flexible_running += pi * sol.dt_h * u.c_r2 * x.p[g];
        }
      }
      for (std::size_t l = 0; l < c.loads.size(); ++l) {
        cb.shed_active += pi * sol.dt_h * c.loads[l].voll * x.p_c[l];
        cb.shed_reactive += pi * sol.dt_h * c.loads[l].voll * x.q_c[l] * x.q_c[l];
      }
    }
  }
  return cb;
}

inline ScheduleSolution extract_solution(const Model& model, const NetworkCase& c, const ScenarioSet& sc,
                                         const conic::SolutionPoint& pt, double int_tol = 1e-6) {
  if (!pt.has_values()) {
    throw SolutionError(std::string("no solution values (status ") + conic::to_string(pt.status) + ")");
  }
  const auto& m = model.map;
  const auto& x = pt.values;
  const auto rep = conic::check_point(model.program, pt);
  if (rep.integrality > int_tol) {
    throw SolutionError("integrality residual " + std::to_string(rep.integrality) + " exceeds tolerance");
  }
  auto val = [&](Var v) { return x[v.index]; };
  const std::size_t G = c.generators.size(), B = c.storage.size(), W = c.wind.size();
  const std::size_t M = c.pv.size(), L = c.loads.size(), NB = c.buses.size(), NR = c.branches.size();

  ScheduleSolution sol;
  sol.mode = !m.options.frequency ? "base" : m.options.synthetic_inertia ? "caseII" : "caseI";
  sol.status = conic::to_string(pt.status);
  sol.periods = m.periods;
  sol.scenarios = m.scenarios;
  sol.dt_h = sc.dt_h;
  sol.frequency_blocks = m.frequency_blocks;
  sol.eta = m.options.drcc.eta;
  sol.alpha = m.options.drcc.alpha;
  sol.scenario_names = sc.names;
  sol.probability = sc.probability;
  sol.objective = pt.objective;
  sol.bound = pt.bound;
  sol.at.assign(static_cast<std::size_t>(m.periods), std::vector<PeriodScenario>(static_cast<std::size_t>(m.scenarios)));
  const auto& lim = c.frequency;
  for (int t = 0; t < m.periods; ++t) {
    for (int s = 0; s < m.scenarios; ++s) {
      auto& e = sol.at[t][s];
      const std::size_t k = m.ts(t, s);
      e.import_p = val(m.imp_p[k]);
      e.import_q = val(m.imp_q[k]);
      e.demand = sc.total_demand(s, t);
      e.d0 = m.d0[k];
      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t i = m.at(t, s, G, g);
        const auto& u = c.generators[g];
        const int y = static_cast<int>(std::lround(val(m.gen_y[i])));
        e.y.push_back(y);
        e.z.push_back(static_cast<int>(std::lround(val(m.gen_z[i]))));
        e.p.push_back(val(m.gen_p[i]));
        e.q.push_back(val(m.gen_q[i]));
        e.r.push_back(m.frequency_blocks ? val(m.gen_r[i]) : 0.0);
        e.inertia_sg += u.h * u.p_max * y / lim.f0;
        e.pfr_available += y * std::max(0.0, std::min(u.pfr_max, u.p_max - e.p.back()));
      }
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t i = m.at(t, s, B, b);
        e.p_b.push_back(val(m.sto_p[i]));
        e.soc.push_back(val(m.sto_soc[i]));
        e.h_b.push_back(m.frequency_blocks ? val(m.sto_h[i]) : 0.0);
        e.pc_b.push_back(m.frequency_blocks ? val(m.sto_c[i]) : 0.0);
      }
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = m.at(t, s, W, w);
        e.p_w.push_back(val(m.wind_p[i]));
        e.h_w.push_back(m.frequency_blocks ? val(m.wind_h[i]) : 0.0);
      }
      for (std::size_t j = 0; j < M; ++j) e.p_m.push_back(val(m.pv_p[m.at(t, s, M, j)]));
      for (std::size_t l = 0; l < L; ++l) {
        e.p_c.push_back(val(m.shed_p[m.at(t, s, L, l)]));
        e.q_c.push_back(val(m.shed_q[m.at(t, s, L, l)]));
      }
      for (std::size_t r = 0; r < NR; ++r) {
        const auto& br = c.branches[r];
        const double wi = val(m.w_diag[m.at(t, s, NB, *c.bus_index(br.from))]);
        const double wj = val(m.w_diag[m.at(t, s, NB, *c.bus_index(br.to))]);
        const double cr = val(m.w_re[m.at(t, s, NR, r)]);
        const double si = val(m.w_im[m.at(t, s, NR, r)]);
        e.w_gap.push_back(wi * wj - cr * cr - si * si);
      }
      e.inertia = e.inertia_sg;
      for (double h : e.h_b) e.inertia += h;
      for (double h : e.h_w) e.inertia += h;
      for (double pc : e.pc_b) e.constant_power += pc;
      if (m.frequency_blocks) {
        e.pfr = val(m.pfr[k]);
        e.shed_mu = val(m.shed_mu[k]);
        const auto& nb = m.nadir[k];
        e.x1 = val(nb.x1);
        e.x2 = val(nb.x2);
        for (std::size_t n = 0; n < nb.z.size(); ++n) {
          if (val(nb.z[n]) > 0.5) e.segment = static_cast<int>(n + 1);
        }
      }
    }
  }
  sol.cost = cost_breakdown(sol, c);
  sol.gap = std::max(0.0, sol.objective - sol.bound) / std::max(1.0, std::abs(sol.objective));

  // Consistency: SoC recursion and non-anticipativity.
  for (int s = 0; s < m.scenarios; ++s) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto& u = c.storage[b];
      double prev = u.soc_init;
      for (int t = 0; t < m.periods; ++t) {
        const auto& e = sol.at[t][s];
        const double res = std::abs(e.soc[b] * u.e_cap - (prev * u.e_cap - u.eta * e.p_b[b] * sc.dt_h));
        if (res > 1e-6 * std::max(1.0, u.e_cap)) {
          throw SolutionError("SoC recursion residual " + std::to_string(res) + " for " + u.id);
        }
        prev = e.soc[b];
      }
    }
  }
  for (int t = 0; t < m.periods; ++t) {
    for (int s = 1; s < m.scenarios; ++s) {
      for (std::size_t g = 0; g < G; ++g) {
        if (c.generators[g].cls != netdata::GenClass::slow) continue;
        if (sol.at[t][s].y[g] != sol.at[t][0].y[g] || sol.at[t][s].z[g] != sol.at[t][0].z[g]) {
          throw SolutionError("non-anticipativity violated for " + c.generators[g].id);
        }
      }
    }
  }
  return sol;
}

}  // namespace mgsched::sched
