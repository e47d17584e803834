// mgsched: frequency-constrained microgrid scheduling from the command line.
//
//   mgsched solve    --config run.json [overrides]
//   mgsched certify  --solution out/solution.json --case data/case.json
//   mgsched freq     --H 86 --R 50.1 --Td 10 --D 0.8135 --dPL 37
//   mgsched sweep    --config run.json --param alpha --values 0,0.1,0.2
//   mgsched validate --case data/case.json [--scenarios data/day.csv]
//
// Exit codes: 0 ok, 1 certification failures, 2 parse or data error,
// 3 infeasible, 4 limit reached without incumbent, 10 internal error.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgsched/cli.hpp"

namespace {

using mgsched::cli::RunConfig;
namespace cli = mgsched::cli;

struct Overrides {
  std::string config;
  std::string case_path;
  std::string scenarios;
  std::string out;
  std::string mode;
  std::optional<double> alpha;
  std::optional<double> eta;
  std::optional<double> gap;
  std::optional<double> time_limit;
  std::optional<std::size_t> node_limit;
  std::optional<int> periods;
  std::optional<double> ibg_scale;
  std::string external;
  bool deterministic = false;
  bool certify = false;
  std::string rule;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "Run configuration (mgsched-run/1 JSON)");
    app->add_option("--case", case_path, "Case file, overrides the config");
    app->add_option("--scenarios", scenarios, "Scenario CSV, overrides the config");
    app->add_option("--out", out, "Output directory");
    app->add_option("--case-mode", mode, "base | caseI | caseII");
    app->add_option("--alpha", alpha, "Shedding uncertainty slope");
    app->add_option("--eta", eta, "Confidence level");
    app->add_option("--gap", gap, "Relative optimality gap");
    app->add_option("--time-limit", time_limit, "Search time limit, s");
    app->add_option("--node-limit", node_limit, "Search node limit");
    app->add_option("--periods", periods, "Keep only the first n periods");
    app->add_option("--ibg-scale", ibg_scale, "Scale wind, PV and storage ratings");
    app->add_option("--external", external, "External solver command");
    app->add_flag("--deterministic", deterministic, "Deterministic search (default on)");
    app->add_option("--rule", rule, "Certification disturbance rule: robust | mean | no_shedding");
  }

  RunConfig resolve() const {
    RunConfig rc = config.empty() ? RunConfig{} : cli::load_run_config(config);
    if (!case_path.empty()) rc.case_path = case_path;
    if (!scenarios.empty()) rc.scenarios_path = scenarios;
    if (!out.empty()) rc.output_dir = out;
    if (!mode.empty()) {
      const auto m = mgsched::sched::parse_mode(mode);
      if (!m) throw cli::ConfigError("unknown case mode '" + mode + "'");
      rc.mode = *m;
    }
    if (alpha) rc.drcc.alpha = *alpha;
    if (eta) rc.drcc.eta = *eta;
    if (gap) rc.solve.rel_gap = *gap;
    if (time_limit) rc.solve.time_limit_s = *time_limit;
    if (node_limit) rc.solve.node_limit = *node_limit;
    if (periods) rc.periods = *periods;
    if (ibg_scale) rc.ibg_scale = *ibg_scale;
    if (!external.empty()) rc.external_solver = external;
    if (deterministic) rc.solve.deterministic = true;
    if (certify) rc.report.certify = true;
    if (!rule.empty()) {
      const auto r = mgsched::certify::parse_rule(rule);
      if (!r) throw cli::ConfigError("unknown disturbance rule '" + rule + "'");
      rc.certify.rule = *r;
    }
    return rc;
  }
};

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw cli::ConfigError("bad sweep value '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-constrained microgrid scheduling"};
  app.require_subcommand(1);

  Overrides solve_args;
  auto* solve = app.add_subcommand("solve", "Build and solve a schedule");
  solve_args.attach(solve);
  solve->add_flag("--certify", solve_args.certify, "Certify the schedule after solving");

  std::string cert_solution, cert_case, cert_config, cert_out, cert_rule;
  unsigned cert_threads = 0;
  auto* cert = app.add_subcommand("certify", "Certify a solved schedule by simulation");
  cert->add_option("--solution", cert_solution, "Solution dump (solution.json)")->required();
  cert->add_option("--case", cert_case, "Case file");
  cert->add_option("--config", cert_config, "Run configuration supplying the case and rule");
  cert->add_option("--out", cert_out, "Output directory (default: next to the solution)");
  cert->add_option("--rule", cert_rule, "robust | mean | no_shedding");
  cert->add_option("--threads", cert_threads, "Worker threads (0: all cores)");

  cli::FreqArgs fa;
  auto* freq = app.add_subcommand("freq", "Closed-form frequency metrics of one scene");
  freq->add_option("--H", fa.h, "Total inertia, MWs/Hz")->required();
  freq->add_option("--R", fa.r, "PFR magnitude, MW")->required();
  freq->add_option("--Td", fa.t_d, "PFR delivery time, s");
  freq->add_option("--D", fa.d, "Damping, MW/Hz")->required();
  freq->add_option("--dPL", fa.dp_l, "Disturbance, MW")->required();
  freq->add_option("--dPC", fa.dp_c, "Post-nadir constant power, MW");
  freq->add_option("--Ts", fa.t_s, "Constant-power hold time, s");
  freq->add_option("--trace", fa.trace, "Write the simulated trace to this CSV");
  freq->add_option("--dt", fa.dt, "Simulation step, s");
  freq->add_option("--horizon", fa.horizon, "Simulation horizon, s");

  Overrides sweep_args;
  std::string sweep_param, sweep_values, sweep_csv;
  unsigned sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Solve over a range of one scalar parameter");
  sweep_args.attach(sweep);
  sweep->add_option("--param", sweep_param, "alpha | eta | ibg")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--jobs", sweep_jobs, "Points solved in parallel");
  sweep->add_option("--csv", sweep_csv, "Output CSV (default: <out>/sweep.csv)");

  std::string val_case, val_scen, val_config;
  auto* validate = app.add_subcommand("validate", "Check a case (and scenarios) for invariant violations");
  validate->add_option("--case", val_case, "Case file");
  validate->add_option("--scenarios", val_scen, "Scenario CSV");
  validate->add_option("--config", val_config, "Run configuration supplying the paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kParseError;
  }

  try {
    if (*solve) return cli::cmd_solve(solve_args.resolve(), std::cout, std::cerr);
    if (*cert) {
      mgsched::certify::CertifyOptions o;
      std::string case_path = cert_case;
      if (!cert_config.empty()) {
        const auto rc = cli::load_run_config(cert_config);
        o = rc.certify;
        if (case_path.empty()) case_path = rc.case_path.string();
      }
      if (case_path.empty()) {
        std::cerr << "error: certify needs --case or --config\n";
        return cli::kParseError;
      }
      if (!cert_rule.empty()) {
        const auto r = mgsched::certify::parse_rule(cert_rule);
        if (!r) throw cli::ConfigError("unknown disturbance rule '" + cert_rule + "'");
        o.rule = *r;
      }
      if (cert_threads) o.threads = cert_threads;
      const std::filesystem::path out =
          cert_out.empty() ? std::filesystem::path(cert_solution).parent_path() : std::filesystem::path(cert_out);
      return cli::cmd_certify(cert_solution, case_path, o, out.empty() ? "." : out, std::cout, std::cerr);
    }
    if (*freq) return cli::cmd_freq(fa, std::cout, std::cerr);
    if (*sweep) {
      const auto p = cli::parse_sweep_param(sweep_param);
      if (!p) throw cli::ConfigError("unknown sweep parameter '" + sweep_param + "'");
      return cli::cmd_sweep(sweep_args.resolve(), *p, parse_values(sweep_values), sweep_jobs, sweep_csv, std::cout,
                            std::cerr);
    }
    if (*validate) {
      std::string case_path = val_case;
      std::string scen = val_scen;
      if (!val_config.empty()) {
        const auto rc = cli::load_run_config(val_config);
        if (case_path.empty()) case_path = rc.case_path.string();
        if (scen.empty()) scen = rc.scenarios_path.string();
      }
      if (case_path.empty()) {
        std::cerr << "error: validate needs --case or --config\n";
        return cli::kParseError;
      }
      return cli::cmd_validate(case_path, scen, std::cout, std::cerr);
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kParseError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kParseError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return cli::kInternal;
  }
  return cli::kInternal;
}
