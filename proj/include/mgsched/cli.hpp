#pragma once

// Command implementations behind the mgsched executable: run configuration,
// solve / certify / freq / sweep / validate, and their artifacts.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mgsched/certify.hpp"
#include "mgsched/conic/text_io.hpp"
#include "mgsched/drcc.hpp"
#include "mgsched/freqdyn.hpp"
#include "mgsched/netdata.hpp"
#include "mgsched/sched.hpp"
#include "mgsched/sched_io.hpp"
#include "mgsched/solver/bnb.hpp"
#include "mgsched/solver/external.hpp"

namespace mgsched::cli {

namespace fs = std::filesystem;

inline constexpr const char* kRunSchema = "mgsched-run/1";

enum ExitCode : int {
  kOk = 0,
  kCertificationFailed = 1,
  kParseError = 2,
  kInfeasible = 3,
  kLimitNoIncumbent = 4,
  kInternal = 10,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReportToggles {
  bool program = true;  // program.mgc
  bool tables = true;   // frequency / generator / storage CSVs
  bool certify = false; // certify right after solving
};

struct RunConfig {
  fs::path case_path;
  fs::path scenarios_path;
  fs::path output_dir = "out";
  sched::CaseMode mode = sched::CaseMode::case_ii;
  std::optional<bool> frequency;
  std::optional<bool> synthetic_inertia;
  bool constant_power = true;
  std::optional<int> periods;  // keep only the first n periods
  double ibg_scale = 1.0;      // wind, PV and storage ratings
  drcc::DrccParams drcc;
  solver::SolveOptions solve;
  std::string external_solver;  // empty: built-in branch and bound
  certify::CertifyOptions certify;
  ReportToggles report;

  RunConfig() {
    solve.rel_gap = 0.01;
    solve.time_limit_s = 600.0;
  }
};

namespace detail {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v);
  out = v;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : (base / q).lexically_normal();
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

template <class F>
void write_with(const fs::path& p, F&& f) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  f(out);
}

}  // namespace detail

// Paths inside the document are resolved against base_dir.
inline RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  const auto schema = j.value("schema", std::string());
  if (schema != kRunSchema) {
    throw ConfigError("run configuration has schema '" + schema + "', expected " + kRunSchema);
  }
  RunConfig rc;
  std::string s;
  if (j.contains("case")) rc.case_path = detail::resolve(base_dir, j.at("case").get<std::string>());
  if (j.contains("scenarios")) {
    rc.scenarios_path = detail::resolve(base_dir, j.at("scenarios").get<std::string>());
  }
  if (j.contains("output")) rc.output_dir = detail::resolve(base_dir, j.at("output").get<std::string>());
  if (j.contains("mode")) {
    const auto m = sched::parse_mode(j.at("mode").get<std::string>());
    if (!m) throw ConfigError("unknown mode '" + j.at("mode").get<std::string>() + "'");
    rc.mode = *m;
  }
  detail::read(j, "periods", rc.periods);
  detail::read(j, "ibg_scale", rc.ibg_scale);
  if (j.contains("build")) {
    const auto& b = j.at("build");
    detail::read(b, "frequency", rc.frequency);
    detail::read(b, "synthetic_inertia", rc.synthetic_inertia);
    detail::read(b, "constant_power", rc.constant_power);
  }
  if (j.contains("drcc")) {
    const auto& d = j.at("drcc");
    detail::read(d, "eta", rc.drcc.eta);
    detail::read(d, "alpha", rc.drcc.alpha);
    detail::read(d, "dp_l_max", rc.drcc.dp_l_max);
    detail::read(d, "segments", rc.drcc.segments);
    detail::read(d, "range", rc.drcc.range);
    detail::read(d, "big_m", rc.drcc.big_m);
    detail::read(d, "big_m_prime", rc.drcc.big_m_prime);
    detail::read(d, "epsilon_rel", rc.drcc.epsilon_rel);
    detail::read(d, "chord_cut", rc.drcc.chord_cut);
  }
  if (j.contains("solver")) {
    const auto& v = j.at("solver");
    detail::read(v, "rel_gap", rc.solve.rel_gap);
    detail::read(v, "abs_gap", rc.solve.abs_gap);
    detail::read(v, "time_limit_s", rc.solve.time_limit_s);
    detail::read(v, "node_limit", rc.solve.node_limit);
    detail::read(v, "deterministic", rc.solve.deterministic);
    detail::read(v, "external", rc.external_solver);
    if (v.contains("branching")) {
      s = v.at("branching").get<std::string>();
      if (s == "reliability") {
        rc.solve.branching = solver::Branching::reliability;
      } else if (s == "most_fractional") {
        rc.solve.branching = solver::Branching::most_fractional;
      } else if (s == "first_fractional") {
        rc.solve.branching = solver::Branching::first_fractional;
      } else {
        throw ConfigError("unknown branching rule '" + s + "'");
      }
    }
  }
  if (j.contains("certify")) {
    const auto& c = j.at("certify");
    if (c.contains("rule")) {
      const auto r = certify::parse_rule(c.at("rule").get<std::string>());
      if (!r) throw ConfigError("unknown disturbance rule '" + c.at("rule").get<std::string>() + "'");
      rc.certify.rule = *r;
    }
    detail::read(c, "nadir_tolerance", rc.certify.nadir_tolerance);
    detail::read(c, "threads", rc.certify.threads);
  }
  if (j.contains("report")) {
    const auto& r = j.at("report");
    detail::read(r, "program", rc.report.program);
    detail::read(r, "tables", rc.report.tables);
    detail::read(r, "certify", rc.report.certify);
  }
  if (!(rc.ibg_scale >= 0.0)) throw ConfigError("ibg_scale must be nonnegative");
  if (rc.periods && *rc.periods < 0) throw ConfigError("periods must be nonnegative");
  return rc;
}

inline RunConfig load_run_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("run configuration is not JSON: " + std::string(e.what()));
  }
  try {
    return parse_run_config(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run configuration: ") + e.what());
  }
}

inline sched::BuildOptions build_options(const RunConfig& rc) {
  auto o = sched::BuildOptions::for_mode(rc.mode);
  if (rc.frequency) o.frequency = *rc.frequency;
  if (rc.synthetic_inertia) o.synthetic_inertia = *rc.synthetic_inertia;
  o.constant_power = rc.constant_power;
  o.drcc = rc.drcc;
  return o;
}

// Scales every inverter-based rating and profile by k.
inline void scale_ibg(netdata::NetworkCase& c, netdata::ScenarioSet& sc, double k) {
  for (auto& w : c.wind) {
    w.capacity *= k;
    w.h_max *= k;
  }
  for (auto& p : c.pv) p.capacity *= k;
  for (auto& b : c.storage) {
    b.p_ch *= k;
    b.p_dch *= k;
    b.e_cap *= k;
  }
  for (auto* grid : {&sc.wind_mw, &sc.pv_mw, &sc.si_max}) {
    for (auto& per_s : *grid) {
      for (auto& per_t : per_s) {
        for (auto& v : per_t) v *= k;
      }
    }
  }
}

struct Inputs {
  netdata::NetworkCase network;
  netdata::ScenarioSet scenarios;
};

inline Inputs load_inputs(const RunConfig& rc) {
  if (rc.case_path.empty()) throw ConfigError("no case file given");
  if (rc.scenarios_path.empty()) throw ConfigError("no scenario file given");
  Inputs in;
  in.network = netdata::load_case(rc.case_path.string());
  in.scenarios = netdata::load_scenarios(rc.scenarios_path.string(), in.network);
  if (rc.periods) in.scenarios = netdata::restrict(in.scenarios, *rc.periods);
  if (rc.ibg_scale != 1.0) scale_ibg(in.network, in.scenarios, rc.ibg_scale);
  return in;
}

inline int exit_code_for(conic::SolveStatus st, bool has_values) {
  using conic::SolveStatus;
  if (has_values && (st == SolveStatus::optimal || st == SolveStatus::feasible || st == SolveStatus::limit)) {
    return kOk;
  }
  switch (st) {
    case SolveStatus::infeasible: return kInfeasible;
    case SolveStatus::limit: return kLimitNoIncumbent;
    default: return kInternal;
  }
}

struct SolveOutcome {
  int code = kInternal;
  std::string message;
  std::vector<std::string> diagnostics;
  std::optional<sched::ScheduleSolution> solution;
  solver::SearchStats stats;
};

// Builds and solves one run. The log receives human-readable progress; it is
// the only place timings appear.
inline SolveOutcome run_solve(const RunConfig& rc, const Inputs& in, std::ostream& log,
                              conic::Program* program_out = nullptr) {
  SolveOutcome out;
  const auto opts = build_options(rc);
  for (const auto& d : netdata::validate_case(in.network)) {
    out.diagnostics.push_back(d.entity + ": " + d.rule);
  }
  if (!out.diagnostics.empty()) {
    out.code = kParseError;
    out.message = "case failed validation";
    return out;
  }
  for (const auto& d : sched::presolve_diagnostics(in.network, in.scenarios, opts)) {
    out.diagnostics.push_back(sched::tag_of(in.scenarios, d.period - 1, d.scenario) + ": " + d.message);
  }
  if (!out.diagnostics.empty()) {
    out.code = kInfeasible;
    out.message = "infeasible before solving";
    return out;
  }
  const auto model = sched::build_model(in.network, in.scenarios, opts);
  log << "model: " << model.program.num_variables() << " variables, " << model.program.num_binaries()
      << " binaries, " << model.program.num_rows() << " rows, " << model.program.num_cones() << " cones\n";
  if (program_out) *program_out = model.program;

  std::string external = solver::external_command_from_env();
  if (external.empty()) external = rc.external_solver;
  conic::SolutionPoint pt;
  const auto t0 = std::chrono::steady_clock::now();
  if (!external.empty()) {
    log << "solver: external '" << external << "'\n";
    pt = solver::solve_external(model.program, external, rc.output_dir / "external");
  } else {
    const auto res = solver::solve_misocp(model.program, rc.solve);
    pt = res.point;
    out.stats = res.stats;
    for (const auto& b : res.stats.trace) {
      log << "  node " << b.node << " bound " << std::setprecision(10) << b.bound << " incumbent "
          << b.incumbent << "\n";
    }
    log << "search: nodes " << res.stats.nodes << ", strong " << res.stats.strong_solves << ", heuristic "
        << res.stats.heuristic_solves << ", ipm iterations " << res.stats.ipm_iterations << ", gap "
        << res.stats.gap << "\n";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log << "status: " << conic::to_string(pt.status) << " after " << std::setprecision(4) << secs << " s\n";
  out.code = exit_code_for(pt.status, pt.has_values());
  if (out.code != kOk) {
    out.message = std::string("solver finished with status ") + conic::to_string(pt.status) +
                  (pt.status == conic::SolveStatus::limit ? " and no incumbent" : "");
    return out;
  }
  out.solution = sched::extract_solution(model, in.network, in.scenarios, pt);
  if (std::isfinite(pt.bound)) out.solution->gap = solver::relative_gap(pt.objective, pt.bound);
  out.message = "objective " + std::to_string(pt.objective);
  return out;
}

struct CertifyArtifacts {
  certify::Report report;
  std::optional<freqdyn::FrequencyTrace> worst_trace;
};

inline CertifyArtifacts run_certify(const sched::ScheduleSolution& sol, const netdata::NetworkCase& c,
                                    const certify::CertifyOptions& o) {
  CertifyArtifacts a;
  a.report = certify::certify(sol, c, o);
  if (const auto w = a.report.worst()) {
    const auto& e = a.report.entries[*w];
    const double h = e.scene.inertia();
    const double d = e.scene.damping();
    const double dt = std::min(o.max_dt, h / d / 20.0);
    const double horizon =
        std::max({o.min_horizon, e.scene.t_d, std::min(o.max_horizon, 15.0 * 2.0 * h / d)});
    freqdyn::SimulateOptions so;
    so.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(0.05 / dt));
    a.worst_trace = freqdyn::simulate_swing(e.scene, dt, horizon, so).trace;
  }
  return a;
}

inline void write_certificate(const fs::path& dir, const CertifyArtifacts& a) {
  fs::create_directories(dir);
  detail::write_text(dir / "certificate.json", certify::to_json(a.report).dump(2) + "\n");
  detail::write_with(dir / "certificate.csv", [&](std::ostream& os) { certify::write_csv(os, a.report); });
  detail::write_with(dir / "nadir_histogram.csv",
                     [&](std::ostream& os) { certify::write_histogram_csv(os, a.report); });
  detail::write_with(dir / "worst_trace.csv", [&](std::ostream& os) {
    if (a.worst_trace) {
      freqdyn::write_trace_csv(os, *a.worst_trace);
    } else {
      freqdyn::write_trace_csv(os, freqdyn::FrequencyTrace{});
    }
  });
}

inline void print_certificate(std::ostream& os, const certify::Report& rep) {
  char buf[200];
  os << "period scenario      dP_L    RoCoF    nadir(sim)  nadir(cf)  ss(cf)   result\n";
  for (const auto& e : rep.entries) {
    std::string verdict = e.pass() ? "pass" : "FAIL";
    if (!e.error.empty()) verdict += " (" + e.error + ")";
    if (e.vacuous) verdict += " (no disturbance)";
    if (e.over_response) verdict += " (over-response)";
    std::snprintf(buf, sizeof buf, "%6d %-10s %8.3f %8.4f %11.4f %10.4f %8.3f   ", e.period,
                  e.scenario_name.c_str(), e.scene.dp_l, e.rocof, e.nadir_sim, e.nadir_closed, e.ss_closed);
    os << buf << verdict << "\n";
    if (!e.pass() && e.error.empty()) {
      std::snprintf(buf, sizeof buf, "       margins: nadir %+.4f Hz, RoCoF %+.4f Hz/s, steady state %+.4f Hz\n",
                    e.nadir_margin, e.rocof_margin, e.ss_margin);
      os << buf;
    }
  }
  os << rep.entries.size() - rep.failures() << " of " << rep.entries.size() << " (period, scenario) pairs pass\n";
}

// solve: artifacts land in rc.output_dir.
inline int cmd_solve(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  Inputs in;
  try {
    in = load_inputs(rc);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  fs::create_directories(rc.output_dir);
  std::ofstream log(rc.output_dir / "solve.log");
  log << "case: " << rc.case_path.string() << "\nscenarios: " << rc.scenarios_path.string()
      << "\nmode: " << sched::to_string(rc.mode) << "\neta: " << rc.drcc.eta << "\nalpha: " << rc.drcc.alpha
      << "\n";
  conic::Program program;
  SolveOutcome o;
  try {
    o = run_solve(rc, in, log, &program);
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << "\n";
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  for (const auto& d : o.diagnostics) {
    err << "diagnostic: " << d << "\n";
    log << "diagnostic: " << d << "\n";
  }
  if (rc.report.program && program.num_variables() > 0) {
    conic::write_text_file(program, (rc.output_dir / "program.mgc").string());
  }
  if (o.code != kOk) {
    err << "error: " << o.message << "\n";
    log << "error: " << o.message << "\n";
    return o.code;
  }
  const auto& sol = *o.solution;
  detail::write_text(rc.output_dir / "solution.json", sched::to_json(sol, in.network).dump(1) + "\n");
  const auto cb = sched::cost_breakdown(sol, in.network);
  detail::write_with(rc.output_dir / "cost.csv", [&](std::ostream& os) { sched::write_cost_csv(os, cb); });
  if (rc.report.tables) {
    detail::write_with(rc.output_dir / "frequency.csv",
                       [&](std::ostream& os) { sched::write_frequency_csv(os, sol); });
    detail::write_with(rc.output_dir / "generators.csv",
                       [&](std::ostream& os) { sched::write_generator_csv(os, sol, in.network); });
    detail::write_with(rc.output_dir / "storage.csv",
                       [&](std::ostream& os) { sched::write_storage_csv(os, sol, in.network); });
  }
  out << sched::to_string(rc.mode) << ": " << sol.status << ", objective " << std::setprecision(10)
      << sol.objective << ", gap " << std::setprecision(4) << sol.gap << "\n";
  if (rc.report.certify) {
    const auto a = run_certify(sol, in.network, rc.certify);
    write_certificate(rc.output_dir, a);
    out << "certification (" << certify::to_string(a.report.rule) << "): "
        << (a.report.all_pass() ? "all pass" : std::to_string(a.report.failures()) + " failures") << "\n";
  }
  return kOk;
}

inline int cmd_certify(const fs::path& solution_path, const fs::path& case_path,
                       const certify::CertifyOptions& o, const fs::path& out_dir, std::ostream& out,
                       std::ostream& err) {
  sched::ScheduleSolution sol;
  netdata::NetworkCase c;
  try {
    if (!fs::exists(solution_path)) {
      err << "error: solution file '" << solution_path.string() << "' does not exist\n";
      return kParseError;
    }
    sol = sched::load_solution(solution_path.string());
    c = netdata::load_case(case_path.string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  CertifyArtifacts a;
  try {
    a = run_certify(sol, c, o);
    write_certificate(out_dir, a);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  print_certificate(out, a.report);
  return a.report.all_pass() ? kOk : kCertificationFailed;
}

struct FreqArgs {
  double h = 0.0;
  double r = 0.0;
  double t_d = 10.0;
  double d = 0.0;
  double dp_l = 0.0;
  double dp_c = 0.0;
  double t_s = std::numeric_limits<double>::infinity();
  std::string trace;  // CSV path, empty: none
  double dt = 0.001;
  double horizon = 60.0;
};

inline int cmd_freq(const FreqArgs& a, std::ostream& out, std::ostream& err) {
  auto sc = freqdyn::FrequencyScene::aggregate(a.h, a.d, a.r, a.t_d, a.dp_l, a.dp_c);
  sc.t_s = a.t_s;
  char buf[160];
  try {
    if (a.dp_l <= 0.0) {
      // No disturbance: nothing moves.
      out << "rocof_hzps 0\nnadir_time_s 0\nnadir_hz 0\nsteady_state_hz 0\nclosed_form_valid 1\n";
    } else {
      const double rocof = freqdyn::rocof_max(sc);
      const auto tn = freqdyn::nadir_time(sc);
      const double ss = freqdyn::steady_state(sc);
      std::snprintf(buf, sizeof buf, "rocof_hzps %.6f\nnadir_time_s %.6f\n", rocof, tn.t);
      out << buf;
      if (tn.valid) {
        std::snprintf(buf, sizeof buf, "nadir_hz %.6f\n", freqdyn::nadir(sc));
      } else {
        std::snprintf(buf, sizeof buf, "nadir_hz nan\n");
      }
      out << buf;
      std::snprintf(buf, sizeof buf, "steady_state_hz %.6f%s\nclosed_form_valid %d\n", ss,
                    ss > 0.0 ? " (over-response)" : "", tn.valid ? 1 : 0);
      out << buf;
      if (!tn.valid) err << "warning: nadir time exceeds the PFR delivery time; closed form not valid\n";
    }
    if (!a.trace.empty()) {
      const auto sim = freqdyn::simulate_swing(sc, a.dt, std::max(a.horizon, a.t_d));
      detail::write_with(a.trace, [&](std::ostream& os) { freqdyn::write_trace_csv(os, sim.trace); });
      std::snprintf(buf, sizeof buf, "simulated_nadir_hz %.6f\nsimulated_nadir_time_s %.6f\n",
                    sim.nadir_found ? sim.nadir : sim.min_df, sim.nadir_time);
      out << buf;
    }
  } catch (const freqdyn::FrequencyError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  return kOk;
}

enum class SweepParam { alpha, eta, ibg };

inline std::optional<SweepParam> parse_sweep_param(const std::string& s) {
  if (s == "alpha") return SweepParam::alpha;
  if (s == "eta") return SweepParam::eta;
  if (s == "ibg" || s == "ibg_scale") return SweepParam::ibg;
  return std::nullopt;
}

inline const char* to_string(SweepParam p) {
  switch (p) {
    case SweepParam::alpha: return "alpha";
    case SweepParam::eta: return "eta";
    case SweepParam::ibg: return "ibg_scale";
  }
  return "unknown";
}

struct SweepPoint {
  std::size_t index = 0;
  double value = 0.0;
  int code = kInternal;
  std::string status;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double avg_import = std::numeric_limits<double>::quiet_NaN();
};

inline RunConfig with_sweep_value(RunConfig rc, SweepParam p, double v) {
  switch (p) {
    case SweepParam::alpha: rc.drcc.alpha = v; break;
    case SweepParam::eta: rc.drcc.eta = v; break;
    case SweepParam::ibg: rc.ibg_scale = v; break;
  }
  return rc;
}

// Probability-weighted mean import over periods.
inline double average_import(const sched::ScheduleSolution& sol) {
  if (sol.periods == 0) return 0.0;
  double sum = 0.0;
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) sum += sol.probability[s] * sol.at[t][s].import_p;
  }
  return sum / sol.periods;
}

inline std::vector<SweepPoint> run_sweep(const RunConfig& base, SweepParam p, const std::vector<double>& values,
                                         unsigned jobs, std::ostream& log) {
  std::vector<SweepPoint> pts(values.size());
  std::mutex log_mu;
  auto work = [&](std::size_t i) {
    SweepPoint& sp = pts[i];
    sp.index = i;
    sp.value = values[i];
    std::ostringstream local;
    try {
      const auto rc = with_sweep_value(base, p, values[i]);
      const auto in = load_inputs(rc);
      auto o = run_solve(rc, in, local);
      sp.code = o.code;
      if (o.solution) {
        sp.status = o.solution->status;
        sp.objective = o.solution->objective;
        sp.gap = o.solution->gap;
        sp.avg_import = average_import(*o.solution);
      } else {
        sp.status = o.message;
      }
    } catch (const std::exception& e) {
      sp.code = kInternal;
      sp.status = e.what();
    }
    const std::lock_guard<std::mutex> lock(log_mu);
    log << "point " << i << " " << to_string(p) << "=" << values[i] << "\n" << local.str();
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) work(i);
    return pts;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < values.size(); i += jobs) work(i);
    });
  }
  for (auto& th : pool) th.join();
  return pts;
}

// sweep.csv: index,parameter,value,mode,status,avg_cost,avg_import_mw,gap
inline void write_sweep_csv(std::ostream& os, const RunConfig& rc, SweepParam p,
                            const std::vector<SweepPoint>& pts) {
  os << "index,parameter,value,mode,status,avg_cost,avg_import_mw,gap\n";
  char buf[256];
  for (const auto& sp : pts) {
    std::string status = sp.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::snprintf(buf, sizeof buf, "%zu,%s,%.6g,%s,%s,%.10g,%.10g,%.6g\n", sp.index, to_string(p), sp.value,
                  sched::to_string(rc.mode), status.c_str(), sp.objective, sp.avg_import, sp.gap);
    os << buf;
  }
}

inline int cmd_sweep(const RunConfig& rc, SweepParam p, const std::vector<double>& values, unsigned jobs,
                     const fs::path& csv_path, std::ostream& out, std::ostream& err) {
  if (values.empty()) {
    err << "error: sweep needs at least one value\n";
    return kParseError;
  }
  fs::create_directories(rc.output_dir);
  std::ofstream log(rc.output_dir / "sweep.log");
  const auto pts = run_sweep(rc, p, values, jobs, log);
  const fs::path path = csv_path.empty() ? rc.output_dir / "sweep.csv" : csv_path;
  detail::write_with(path, [&](std::ostream& os) { write_sweep_csv(os, rc, p, pts); });
  write_sweep_csv(out, rc, p, pts);
  int worst = kOk;
  for (const auto& sp : pts) worst = std::max(worst, sp.code);
  return worst;
}

inline int cmd_validate(const fs::path& case_path, const fs::path& scenarios_path, std::ostream& out,
                        std::ostream& err) {
  netdata::NetworkCase c;
  std::vector<netdata::Diagnostic> diags;
  try {
    std::tie(c, diags) = netdata::parse_case_unchecked(netdata::read_file(case_path.string()));
  } catch (const netdata::DataError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  for (const auto& d : diags) out << d.entity << ": " << d.rule << "\n";
  if (!diags.empty()) return kParseError;
  if (!scenarios_path.empty()) {
    try {
      const auto sc = netdata::load_scenarios(scenarios_path.string(), c);
      out << "scenarios: " << sc.scenarios() << " scenarios, " << sc.periods << " periods\n";
    } catch (const netdata::DataError& e) {
      err << "error: " << e.what() << "\n";
      return kParseError;
    }
  }
  out << "case '" << c.name << "': " << c.buses.size() << " buses, " << c.branches.size() << " branches, "
      << c.generators.size() << " generators, no diagnostics\n";
  return kOk;
}

}  // namespace mgsched::cli
