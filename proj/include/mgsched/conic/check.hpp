#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mgsched/conic/program.hpp"

namespace mgsched::conic {

enum class SolveStatus { optimal, feasible, infeasible, unbounded, limit, numerical_error };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::limit: return "limit";
    case SolveStatus::numerical_error: return "numerical_error";
  }
  return "unknown";
}

struct SolutionPoint {
  SolveStatus status = SolveStatus::numerical_error;
  std::vector<double> values;  // one per program variable
  double objective = 0.0;
  // Lower bound on the optimum proven by the producer (minimization).
  double bound = -kInf;

  [[nodiscard]] bool has_values() const { return !values.empty(); }
  [[nodiscard]] double operator[](Var v) const { return values.at(v.index); }
};

struct ResidualReport {
  double bound = 0.0;
  double row = 0.0;
  double cone = 0.0;
  double integrality = 0.0;
  std::string worst_row;
  std::string worst_cone;

  [[nodiscard]] double max_violation() const {
    return std::max({bound, row, cone, integrality});
  }
  [[nodiscard]] bool clean(double tol) const { return max_violation() <= tol; }
};

// Violation of a rotated cone is measured on the quadratic form
// ||u||^2 - 2pq (and on p, q >= 0); second-order cones on ||u|| - t.
inline double cone_violation(const Cone& cone, std::span<const double> x) {
  const auto& e = cone.entries;
  double sq = 0.0;
  const std::size_t head = cone.kind == ConeKind::rotated ? 2 : 1;
  for (std::size_t i = head; i < e.size(); ++i) {
    const double u = e[i].evaluate(x);
    sq += u * u;
  }
  if (cone.kind == ConeKind::second_order) {
    return std::max(0.0, std::sqrt(sq) - e[0].evaluate(x));
  }
  const double p = e[0].evaluate(x);
  const double q = e[1].evaluate(x);
  return std::max({0.0, sq - 2.0 * p * q, -p, -q});
}

inline ResidualReport check_point(const Program& program, std::span<const double> x) {
  if (x.size() != program.num_variables()) {
    throw ModelError("point has " + std::to_string(x.size()) + " values, program has " +
                     std::to_string(program.num_variables()) + " variables");
  }
  ResidualReport rep;
  const auto& vars = program.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const double v = x[j];
    rep.bound = std::max({rep.bound, vars[j].lb - v, v - vars[j].ub});
    if (vars[j].kind == VarKind::binary) {
      rep.integrality = std::max(rep.integrality, std::abs(v - std::round(v)));
    }
  }
  for (const auto& r : program.rows()) {
    double act = 0.0;
    for (const auto& t : r.terms) act += t.coef * x[t.var.index];
    double viol = 0.0;
    switch (r.sense) {
      case Sense::less_equal: viol = act - r.rhs; break;
      case Sense::greater_equal: viol = r.rhs - act; break;
      case Sense::equal: viol = std::abs(act - r.rhs); break;
    }
    if (viol > rep.row) {
      rep.row = viol;
      rep.worst_row = r.name;
    }
  }
  for (const auto& c : program.cones()) {
    const double viol = cone_violation(c, x);
    if (viol > rep.cone) {
      rep.cone = viol;
      rep.worst_cone = c.name;
    }
  }
  return rep;
}

inline ResidualReport check_point(const Program& program, const SolutionPoint& point) {
  return check_point(program, std::span<const double>(point.values));
}

inline double objective_value(const Program& program, std::span<const double> x) {
  return program.objective().evaluate(x);
}

}  // namespace mgsched::conic
