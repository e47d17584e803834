#pragma once

// Bridge to an external conic solver. The program is written in the canonical
// text form, the configured command is run as
//
//   <command> <problem-file> <solution-file>
//
// and the solution file is read back:
//
//   status <optimal|feasible|infeasible|unbounded|limit|numerical_error>
//   objective <value>          (optional)
//   <variable>,<value>         (one line per variable, any order)
//
// Variables missing from the solution file make the result unusable.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mgsched/conic/check.hpp"
#include "mgsched/conic/text_io.hpp"

namespace mgsched::solver {

inline constexpr const char* kExternalSolverEnv = "MGSCHED_EXTERNAL_SOLVER";

class ExternalSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string external_command_from_env() {
  const char* v = std::getenv(kExternalSolverEnv);
  return v ? std::string(v) : std::string();
}

inline conic::SolveStatus parse_status(const std::string& s) {
  using conic::SolveStatus;
  for (auto st : {SolveStatus::optimal, SolveStatus::feasible, SolveStatus::infeasible,
                  SolveStatus::unbounded, SolveStatus::limit, SolveStatus::numerical_error}) {
    if (s == conic::to_string(st)) return st;
  }
  throw ExternalSolverError("unknown status '" + s + "'");
}

inline conic::SolutionPoint read_solution_file(const conic::Program& prog,
                                               const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ExternalSolverError("solution file '" + path + "' not found");
  conic::SolutionPoint pt;
  bool have_status = false;
  bool have_objective = false;
  std::vector<bool> seen(prog.num_variables(), false);
  pt.values.assign(prog.num_variables(), 0.0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("status ", 0) == 0) {
      pt.status = parse_status(line.substr(7));
      have_status = true;
    } else if (line.rfind("objective ", 0) == 0) {
      pt.objective = std::stod(line.substr(10));
      have_objective = true;
    } else {
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ExternalSolverError("bad solution line '" + line + "'");
      const auto v = prog.find_variable(line.substr(0, comma));
      if (!v) throw ExternalSolverError("unknown variable in solution: '" + line + "'");
      pt.values[v->index] = std::stod(line.substr(comma + 1));
      seen[v->index] = true;
    }
  }
  if (!have_status) throw ExternalSolverError("solution file has no status line");
  const bool complete = std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  if (pt.status == conic::SolveStatus::optimal || pt.status == conic::SolveStatus::feasible ||
      (pt.status == conic::SolveStatus::limit && complete)) {
    if (!complete) throw ExternalSolverError("solution file misses variable values");
    if (!have_objective) pt.objective = prog.objective().evaluate(pt.values);
  } else {
    pt.values.clear();
  }
  return pt;
}

inline void write_solution_file(const conic::Program& prog, const conic::SolutionPoint& pt,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ExternalSolverError("cannot write '" + path + "'");
  out << "status " << conic::to_string(pt.status) << '\n';
  if (pt.has_values()) {
    out << "objective " << conic::detail::fmt_num(pt.objective) << '\n';
    for (std::size_t j = 0; j < prog.num_variables(); ++j) {
      out << prog.variables()[j].name << ',' << conic::detail::fmt_num(pt.values[j]) << '\n';
    }
  }
}

inline conic::SolutionPoint solve_external(const conic::Program& prog, const std::string& command,
                                           const std::filesystem::path& work_dir) {
  if (command.empty()) throw ExternalSolverError("no external solver command configured");
  std::filesystem::create_directories(work_dir);
  const auto problem = (work_dir / "problem.mgc").string();
  const auto solution = (work_dir / "solution.txt").string();
  std::filesystem::remove(solution);
  conic::write_text_file(prog, problem);
  const std::string cmd = command + " '" + problem + "' '" + solution + "'";
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    throw ExternalSolverError("external solver exited with status " + std::to_string(rc));
  }
  return read_solution_file(prog, solution);
}

}  // namespace mgsched::solver
