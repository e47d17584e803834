#pragma once

// Post-solve frequency certification: rebuilds the islanding scene of every
// (period, scenario) from a schedule and checks it with the closed form and
// the swing-equation simulator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mgsched/drcc.hpp"
#include "mgsched/freqdyn.hpp"
#include "mgsched/netdata.hpp"
#include "mgsched/sched.hpp"

namespace mgsched::certify {

using freqdyn::FrequencyScene;
using netdata::NetworkCase;
using sched::ScheduleSolution;

enum class DisturbanceRule {
  robust,       // mean plus xi sigma of the shedding uncertainty
  mean,         // expected shedding
  no_shedding,  // full import lost, nothing shed
};

inline const char* to_string(DisturbanceRule r) {
  switch (r) {
    case DisturbanceRule::robust: return "robust";
    case DisturbanceRule::mean: return "mean";
    case DisturbanceRule::no_shedding: return "no_shedding";
  }
  return "unknown";
}

inline std::optional<DisturbanceRule> parse_rule(const std::string& s) {
  if (s == "robust") return DisturbanceRule::robust;
  if (s == "mean") return DisturbanceRule::mean;
  if (s == "no_shedding") return DisturbanceRule::no_shedding;
  return std::nullopt;
}

struct CertifyOptions {
  DisturbanceRule rule = DisturbanceRule::robust;
  double nadir_tolerance = 0.02;  // Hz below -df_lim still accepted
  double max_dt = 0.01;           // s
  double min_horizon = 60.0;      // s
  double max_horizon = 3600.0;    // s
  unsigned threads = 0;           // 0: hardware concurrency
};

struct Entry {
  int period = 0;  // 1-based
  int scenario = 0;
  std::string scenario_name;
  FrequencyScene scene;
  bool vacuous = false;  // no disturbance
  double rocof = 0.0;
  double nadir_closed = 0.0;
  bool closed_valid = true;  // nadir time within t_d
  double nadir_time_closed = 0.0;
  double nadir_sim = 0.0;
  double nadir_time_sim = 0.0;
  double ss_closed = 0.0;
  double ss_sim = 0.0;  // deviation at the end of the constant-power window
  bool over_response = false;  // R + dP_C exceeds the disturbance, ss_closed > 0
  double nadir_margin = 0.0;  // nadir_sim + df_lim, Hz
  double rocof_margin = 0.0;  // rocof_lim - |rocof|, Hz/s
  double ss_margin = 0.0;     // ss_closed + df_ss_lim, Hz
  bool nadir_ok = true;
  bool rocof_ok = true;
  bool ss_ok = true;
  std::string error;  // scene could not be evaluated

  [[nodiscard]] bool pass() const { return error.empty() && nadir_ok && rocof_ok && ss_ok; }
};

struct Report {
  DisturbanceRule rule = DisturbanceRule::robust;
  std::vector<Entry> entries;  // ordered by (period, scenario)

  [[nodiscard]] bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const Entry& e) { return e.pass(); });
  }
  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const Entry& e) { return !e.pass(); }));
  }
  // Entry with the lowest simulated nadir among non-vacuous entries.
  [[nodiscard]] std::optional<std::size_t> worst() const {
    std::optional<std::size_t> w;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].vacuous || !entries[i].error.empty()) continue;
      if (!w || entries[i].nadir_sim < entries[*w].nadir_sim) w = i;
    }
    return w;
  }
};

inline double disturbance(const sched::PeriodScenario& e, double eta, double alpha, DisturbanceRule rule) {
  switch (rule) {
    case DisturbanceRule::robust:
      return e.import_p - (1.0 - drcc::xi(eta) * alpha) * e.shed_mu;
    case DisturbanceRule::mean:
      return e.import_p - e.shed_mu;
    case DisturbanceRule::no_shedding:
      return e.import_p;
  }
  return e.import_p;
}

inline FrequencyScene scene_of(const ScheduleSolution& sol, const NetworkCase& c, int t, int s,
                               DisturbanceRule rule) {
  const auto& e = sol.at[t][s];
  const auto& lim = c.frequency;
  FrequencyScene sc;
  sc.h_c = e.inertia_sg;
  sc.h_storage = e.h_b;
  sc.h_wind = e.h_w;
  for (const auto& w : c.wind) sc.gamma.push_back(w.gamma);
  sc.d0 = lim.d0(e.demand);
  sc.r = sol.frequency_blocks ? e.pfr : e.pfr_available;
  sc.t_d = lim.t_d;
  sc.dp_l = disturbance(e, sol.eta, sol.alpha, rule);
  sc.dp_c = e.constant_power;
  double hold = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < c.storage.size(); ++b) {
    if (b < e.pc_b.size() && e.pc_b[b] > 1e-9) hold = std::min(hold, c.storage[b].t_s);
  }
  sc.t_s = hold;
  return sc;
}

inline Entry evaluate(const FrequencyScene& sc, const netdata::FrequencyLimits& lim, const CertifyOptions& o) {
  Entry e;
  e.scene = sc;
  if (sc.dp_l <= 0.0) {
    e.vacuous = true;
    e.rocof_margin = lim.rocof_lim;
    e.nadir_margin = lim.df_lim;
    e.ss_margin = lim.df_ss_lim;
    return e;
  }
  try {
    const double h = sc.inertia();
    const double d = sc.damping();
    e.rocof = freqdyn::rocof_max(sc);
    if (sc.r > 0.0) {
      const auto tn = freqdyn::nadir_time(sc);
      e.nadir_time_closed = tn.t;
      e.closed_valid = tn.valid;
      if (tn.valid) e.nadir_closed = freqdyn::nadir(sc);
    } else {
      e.closed_valid = false;
    }
    e.ss_closed = freqdyn::steady_state(sc);
    e.over_response = e.ss_closed > 0.0;
    const double dt = std::min(o.max_dt, h / d / 20.0);
    const double horizon = std::max({o.min_horizon, sc.t_d, std::min(o.max_horizon, 15.0 * 2.0 * h / d)});
    freqdyn::SimulateOptions so;
    so.record_every = std::numeric_limits<std::size_t>::max();
    const auto sim = freqdyn::simulate_swing(sc, dt, horizon, so);
    e.nadir_sim = sim.nadir_found ? sim.nadir : sim.min_df;
    e.nadir_time_sim = sim.nadir_time;
    e.ss_sim = sim.final_df;
    if (std::isfinite(sc.t_s) && sim.nadir_found) {
      // Value at the end of the constant-power window.
      const double t_end = std::min(horizon, sim.nadir_time + sc.t_s);
      const auto win = freqdyn::simulate_swing(sc, dt, std::max(t_end, sc.t_d), so);
      e.ss_sim = win.final_df;
    }
    e.nadir_margin = e.nadir_sim + lim.df_lim;
    e.rocof_margin = lim.rocof_lim - std::abs(e.rocof);
    e.ss_margin = e.ss_closed + lim.df_ss_lim;
    e.nadir_ok = e.nadir_margin >= -o.nadir_tolerance;
    e.rocof_ok = e.rocof_margin >= -1e-9;
    e.ss_ok = e.ss_margin >= -1e-9 && e.ss_sim + lim.df_ss_lim >= -o.nadir_tolerance;
  } catch (const std::exception& ex) {
    e.error = ex.what();
    e.nadir_ok = e.rocof_ok = e.ss_ok = false;
  }
  return e;
}

inline Report certify(const ScheduleSolution& sol, const NetworkCase& c, const CertifyOptions& o = {}) {
  Report rep;
  rep.rule = o.rule;
  const std::size_t n = static_cast<std::size_t>(sol.periods) * static_cast<std::size_t>(sol.scenarios);
  rep.entries.resize(n);
  auto work = [&](std::size_t i) {
    const int t = static_cast<int>(i / static_cast<std::size_t>(sol.scenarios));
    const int s = static_cast<int>(i % static_cast<std::size_t>(sol.scenarios));
    Entry e = evaluate(scene_of(sol, c, t, s, o.rule), c.frequency, o);
    e.period = t + 1;
    e.scenario = s;
    e.scenario_name = sol.scenario_names[static_cast<std::size_t>(s)];
    rep.entries[i] = std::move(e);
  };
  unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return rep;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) work(i);
    });
  }
  for (auto& th : pool) th.join();
  return rep;
}

inline nlohmann::json to_json(const Report& rep) {
  nlohmann::json j;
  j["schema"] = "mgsched-certificate/1";
  j["rule"] = to_string(rep.rule);
  j["all_pass"] = rep.all_pass();
  j["failures"] = rep.failures();
  auto rows = nlohmann::json::array();
  for (const auto& e : rep.entries) {
    nlohmann::json r = {{"period", e.period},
                        {"scenario", e.scenario_name},
                        {"pass", e.pass()},
                        {"vacuous", e.vacuous},
                        {"dp_l", e.scene.dp_l},
                        {"inertia", e.scene.inertia()},
                        {"damping", e.scene.damping()},
                        {"pfr", e.scene.r},
                        {"rocof", e.rocof},
                        {"nadir_closed", e.nadir_closed},
                        {"closed_valid", e.closed_valid},
                        {"nadir_sim", e.nadir_sim},
                        {"nadir_time_sim", e.nadir_time_sim},
                        {"ss_closed", e.ss_closed},
                        {"ss_sim", e.ss_sim},
                        {"over_response", e.over_response},
                        {"nadir_margin", e.nadir_margin},
                        {"rocof_margin", e.rocof_margin},
                        {"ss_margin", e.ss_margin}};
    if (!e.error.empty()) r["error"] = e.error;
    rows.push_back(r);
  }
  j["entries"] = rows;
  if (const auto w = rep.worst()) {
    j["worst"] = {{"period", rep.entries[*w].period}, {"scenario", rep.entries[*w].scenario_name},
                  {"nadir_sim", rep.entries[*w].nadir_sim}};
  }
  return j;
}

// certificate.csv: one row per (period, scenario).
inline void write_csv(std::ostream& os, const Report& rep) {
  os << "period,scenario,dp_l_mw,rocof_hzps,nadir_closed_hz,closed_valid,nadir_sim_hz,ss_closed_hz,"
        "ss_sim_hz,over_response,nadir_ok,rocof_ok,ss_ok\n";
  char buf[320];
  for (const auto& e : rep.entries) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f,%d,%.6f,%.6f,%.6f,%d,%d,%d,%d\n", e.period,
                  e.scenario_name.c_str(), e.scene.dp_l, e.rocof, e.nadir_closed, e.closed_valid ? 1 : 0,
                  e.nadir_sim, e.ss_closed, e.ss_sim, e.over_response ? 1 : 0, e.nadir_ok ? 1 : 0, e.rocof_ok ? 1 : 0,
                  e.ss_ok ? 1 : 0);
    os << buf;
  }
}

// nadir_histogram.csv: bin edges over the simulated nadirs of non-vacuous entries.
inline void write_histogram_csv(std::ostream& os, const Report& rep, double width = 0.005) {
  os << "bin_low_hz,bin_high_hz,count\n";
  std::vector<double> v;
  for (const auto& e : rep.entries) {
    if (!e.vacuous && e.error.empty()) v.push_back(e.nadir_sim);
  }
  if (v.empty()) return;
  const double lo = std::floor(*std::min_element(v.begin(), v.end()) / width) * width;
  const double hi = *std::max_element(v.begin(), v.end());
  const auto bins = static_cast<std::size_t>(std::floor((hi - lo) / width)) + 1;
  std::vector<int> count(bins, 0);
  for (double x : v) {
    count[std::min(bins - 1, static_cast<std::size_t>(std::floor((x - lo) / width)))]++;
  }
  char buf[96];
  for (std::size_t b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%d\n", lo + width * b, lo + width * (b + 1), count[b]);
    os << buf;
  }
}

}  // namespace mgsched::certify
