#pragma once

// Activity-based bound propagation over the linear rows of a program.
// Continuous bounds are tightened on a private copy so that implications can
// chain; only binary fixings are written back to the caller's bounds.

#include <cmath>
#include <vector>

#include "mgsched/conic/program.hpp"
#include "mgsched/solver/standard_form.hpp"

namespace mgsched::solver {

struct PropagationResult {
  bool infeasible = false;
  int fixings = 0;  // binaries fixed by this call
};

inline PropagationResult propagate(const conic::Program& prog, Bounds& bounds,
                                   int max_passes = 20, double fix_tol = 1e-6) {
  using conic::Sense;
  PropagationResult res;
  std::vector<double> lb = bounds.lb;
  std::vector<double> ub = bounds.ub;
  const auto& vars = prog.variables();

  // Returns false on a proven contradiction.
  auto tighten = [&](std::size_t j, double new_lb, double new_ub, bool& changed) {
    if (vars[j].kind == conic::VarKind::binary) {
      if (new_ub < 1.0 - fix_tol && ub[j] > 0.0) {
        if (new_ub < -fix_tol || lb[j] > 0.0) return false;
        ub[j] = 0.0;
        changed = true;
      }
      if (new_lb > fix_tol && lb[j] < 1.0) {
        if (new_lb > 1.0 + fix_tol || ub[j] < 1.0) return false;
        lb[j] = 1.0;
        changed = true;
      }
      return true;
    }
    const double tol = 1e-6 * std::max(1.0, std::abs(lb[j]) + std::abs(ub[j]));
    if (new_ub < ub[j] - 1e-6 * std::max(1.0, std::abs(new_ub))) {
      if (new_ub < lb[j] - tol) return false;
      ub[j] = std::max(new_ub, lb[j]);
      changed = true;
    }
    if (new_lb > lb[j] + 1e-6 * std::max(1.0, std::abs(new_lb))) {
      if (new_lb > ub[j] + tol) return false;
      lb[j] = std::min(new_lb, ub[j]);
      changed = true;
    }
    return true;
  };

  // a'x <= rhs with sign s applied to the coefficients.
  auto process = [&](const conic::Row& row, double s, double rhs, bool& changed) {
    double finite = 0.0;
    int ninf = 0;
    std::size_t inf_var = 0;
    for (const auto& t : row.terms) {
      const double a = s * t.coef;
      const double v = a > 0.0 ? lb[t.var.index] : ub[t.var.index];
      if (std::isinf(v)) {
        ++ninf;
        inf_var = t.var.index;
      } else {
        finite += a * v;
      }
    }
    if (ninf == 0 && finite > rhs + 1e-7 * (1.0 + std::abs(rhs))) return false;
    if (ninf > 1) return true;
    for (const auto& t : row.terms) {
      const std::size_t j = t.var.index;
      const double a = s * t.coef;
      double rest = 0.0;
      if (ninf == 1) {
        if (j != inf_var) continue;
        rest = finite;
      } else {
        rest = finite - a * (a > 0.0 ? lb[j] : ub[j]);
      }
      const double bound = (rhs - rest) / a;
      const bool ok = a > 0.0 ? tighten(j, -conic::kInf, bound, changed)
                              : tighten(j, bound, conic::kInf, changed);
      if (!ok) return false;
    }
    return true;
  };

  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (const auto& row : prog.rows()) {
      bool ok = true;
      if (row.sense != Sense::greater_equal) ok = process(row, 1.0, row.rhs, changed);
      if (ok && row.sense != Sense::less_equal) ok = process(row, -1.0, -row.rhs, changed);
      if (!ok) {
        res.infeasible = true;
        return res;
      }
    }
    if (!changed) break;
  }
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].kind != conic::VarKind::binary) continue;
    if (lb[j] != bounds.lb[j] || ub[j] != bounds.ub[j]) {
      bounds.lb[j] = lb[j];
      bounds.ub[j] = ub[j];
      ++res.fixings;
    }
  }
  return res;
}

}  // namespace mgsched::solver
