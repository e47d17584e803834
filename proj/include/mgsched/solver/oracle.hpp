#pragma once

// Exhaustive enumeration over every binary assignment; a test oracle for
// small programs.

#include <cstdint>

#include "mgsched/solver/ipm.hpp"

namespace mgsched::solver {

inline constexpr std::size_t kOracleMaxBinaries = 12;

inline conic::SolutionPoint enumerate_oracle(const conic::Program& prog,
                                             const IpmOptions& opt = {}) {
  const auto bins = prog.binaries();
  if (bins.size() > kOracleMaxBinaries) {
    throw conic::ModelError("enumeration oracle supports at most " +
                            std::to_string(kOracleMaxBinaries) + " binaries, program has " +
                            std::to_string(bins.size()));
  }
  if (bins.empty()) return solve_relaxation(prog, opt);

  conic::SolutionPoint best;
  best.status = SolveStatus::infeasible;
  best.objective = conic::kInf;
  bool saw_failure = false;
  const Bounds base = Bounds::of(prog);
  for (std::uint32_t mask = 0; mask < (1u << bins.size()); ++mask) {
    Bounds b = base;
    bool in_range = true;
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const double v = (mask >> k) & 1u;
      const auto j = bins[k].index;
      if (v < b.lb[j] || v > b.ub[j]) in_range = false;
      b.lb[j] = b.ub[j] = v;
    }
    if (!in_range) continue;
    auto pt = solve_relaxation(prog, b, opt);
    if (pt.status == SolveStatus::unbounded) return pt;
    if (pt.status != SolveStatus::optimal) {
      saw_failure = saw_failure || pt.status != SolveStatus::infeasible;
      continue;
    }
    if (pt.objective < best.objective) best = std::move(pt);
  }
  if (best.status == SolveStatus::optimal) {
    best.bound = best.objective;
  } else if (saw_failure) {
    best.status = SolveStatus::numerical_error;
  }
  return best;
}

}  // namespace mgsched::solver
