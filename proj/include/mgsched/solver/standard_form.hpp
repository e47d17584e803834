#pragma once

// Lowering of a Program (under a set of variable bounds) into the form
//
//   minimize c'x + c0   s.t.  A x = b,  G x + s = h,  s in K
//
// with K = R^l_+ x Q^{q_1} x ... x Q^{q_k}. Fixed variables are substituted
// out; bounds become LP rows; rotated cones become standard second-order
// cones via (p + q, p - q, sqrt(2) u).

#include <Eigen/Sparse>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "mgsched/conic/program.hpp"

namespace mgsched::solver {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;

struct ConeLayout {
  int lp = 0;               // number of nonnegative-orthant rows
  std::vector<int> soc;     // sizes of second-order blocks, in order
  [[nodiscard]] int total() const {
    int m = lp;
    for (int q : soc) m += q;
    return m;
  }
  [[nodiscard]] int degree() const { return lp + static_cast<int>(soc.size()); }
};

struct StandardForm {
  int n = 0;
  SpMat A, G;
  Vec b, h, c;
  double c0 = 0.0;
  ConeLayout cones;
  std::vector<int> column_of;        // program variable -> column, -1 if fixed
  std::vector<double> fixed_value;   // value used for fixed variables
  bool infeasible = false;           // detected while lowering (constant row/cone)
};

struct Bounds {
  std::vector<double> lb, ub;

  static Bounds of(const conic::Program& p) {
    Bounds b;
    for (const auto& v : p.variables()) {
      b.lb.push_back(v.lb);
      b.ub.push_back(v.ub);
    }
    return b;
  }
};

namespace detail {

struct SparseRow {
  std::vector<std::pair<int, double>> entries;
  double constant = 0.0;  // contribution of fixed variables
};

inline SparseRow lower_expr(const std::vector<conic::Term>& terms, double constant,
                            const std::vector<int>& column_of,
                            const std::vector<double>& fixed_value) {
  SparseRow r;
  r.constant = constant;
  for (const auto& t : terms) {
    const int col = column_of[t.var.index];
    if (col < 0) {
      r.constant += t.coef * fixed_value[t.var.index];
    } else {
      r.entries.emplace_back(col, t.coef);
    }
  }
  return r;
}

inline SparseRow combine(const SparseRow& a, double wa, const SparseRow& b, double wb) {
  SparseRow r;
  r.constant = wa * a.constant + wb * b.constant;
  for (auto [j, v] : a.entries) r.entries.emplace_back(j, wa * v);
  for (auto [j, v] : b.entries) r.entries.emplace_back(j, wb * v);
  return r;
}

}  // namespace detail

inline StandardForm lower(const conic::Program& prog, const Bounds& bounds) {
  using conic::Sense;
  const std::size_t nv = prog.num_variables();
  StandardForm sf;
  sf.column_of.assign(nv, -1);
  sf.fixed_value.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const double lb = bounds.lb[j];
    const double ub = bounds.ub[j];
    if (lb > ub) {
      sf.infeasible = true;
      sf.fixed_value[j] = lb;
      continue;
    }
    if (std::isfinite(lb) && ub - lb <= 1e-12 * std::max(1.0, std::abs(lb))) {
      sf.fixed_value[j] = 0.5 * (lb + ub);
    } else {
      sf.column_of[j] = sf.n++;
    }
  }

  const auto& obj = prog.objective();
  sf.c = Vec::Zero(sf.n);
  sf.c0 = obj.constant();
  for (const auto& t : obj.terms()) {
    const int col = sf.column_of[t.var.index];
    if (col < 0) {
      sf.c0 += t.coef * sf.fixed_value[t.var.index];
    } else {
      sf.c[col] += t.coef;
    }
  }

  auto tol_for = [](double v) { return 1e-9 * (1.0 + std::abs(v)); };

  std::vector<detail::SparseRow> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<detail::SparseRow> lp_rows;  // encoded as  a'x <= rhs  via row + constant
  std::vector<double> lp_rhs;
  std::vector<std::vector<detail::SparseRow>> soc_blocks;

  auto push_le = [&](detail::SparseRow r, double rhs) {
    rhs -= r.constant;
    r.constant = 0.0;
    if (r.entries.empty()) {
      if (0.0 > rhs + tol_for(rhs)) sf.infeasible = true;
      return;
    }
    lp_rows.push_back(std::move(r));
    lp_rhs.push_back(rhs);
  };

  for (const auto& row : prog.rows()) {
    auto r = detail::lower_expr(row.terms, 0.0, sf.column_of, sf.fixed_value);
    switch (row.sense) {
      case Sense::less_equal: push_le(r, row.rhs); break;
      case Sense::greater_equal: {
        for (auto& e : r.entries) e.second = -e.second;
        r.constant = -r.constant;
        push_le(r, -row.rhs);
        break;
      }
      case Sense::equal: {
        const double rhs = row.rhs - r.constant;
        if (r.entries.empty()) {
          if (std::abs(rhs) > tol_for(row.rhs)) sf.infeasible = true;
        } else {
          r.constant = 0.0;
          eq_rows.push_back(std::move(r));
          eq_rhs.push_back(rhs);
        }
        break;
      }
    }
  }

  for (std::size_t j = 0; j < nv; ++j) {
    const int col = sf.column_of[j];
    if (col < 0) continue;
    if (std::isfinite(bounds.ub[j])) push_le({{{col, 1.0}}, 0.0}, bounds.ub[j]);
    if (std::isfinite(bounds.lb[j])) push_le({{{col, -1.0}}, 0.0}, -bounds.lb[j]);
  }

  for (const auto& cone : prog.cones()) {
    std::vector<detail::SparseRow> entries;
    for (const auto& e : cone.entries) {
      entries.push_back(
          detail::lower_expr(e.terms(), e.constant(), sf.column_of, sf.fixed_value));
    }
    std::vector<detail::SparseRow> block;
    if (cone.kind == conic::ConeKind::rotated) {
      block.push_back(detail::combine(entries[0], 1.0, entries[1], 1.0));
      block.push_back(detail::combine(entries[0], 1.0, entries[1], -1.0));
      for (std::size_t i = 2; i < entries.size(); ++i) {
        block.push_back(detail::combine(entries[i], std::numbers::sqrt2, {}, 0.0));
      }
    } else {
      block = std::move(entries);
    }
    bool constant = true;
    for (const auto& r : block) constant = constant && r.entries.empty();
    if (constant) {
      double sq = 0.0;
      for (std::size_t i = 1; i < block.size(); ++i) sq += block[i].constant * block[i].constant;
      if (std::sqrt(sq) > block[0].constant + tol_for(block[0].constant)) sf.infeasible = true;
      continue;
    }
    if (block.size() == 1) {
      // t >= 0 on a single entry
      auto r = block[0];
      const double c = r.constant;
      r.constant = 0.0;
      for (auto& e : r.entries) e.second = -e.second;
      push_le(r, c);
      continue;
    }
    soc_blocks.push_back(std::move(block));
  }

  // Assemble A and G. G rows hold -a so that  s = h - G x = a'x + const.
  const int p = static_cast<int>(eq_rows.size());
  std::vector<Eigen::Triplet<double>> ta;
  sf.b = Vec::Zero(p);
  for (int i = 0; i < p; ++i) {
    for (auto [j, v] : eq_rows[i].entries) ta.emplace_back(i, j, v);
    sf.b[i] = eq_rhs[i];
  }
  sf.A.resize(p, sf.n);
  sf.A.setFromTriplets(ta.begin(), ta.end());

  std::vector<Eigen::Triplet<double>> tg;
  std::vector<double> h;
  int row = 0;
  for (std::size_t i = 0; i < lp_rows.size(); ++i, ++row) {
    for (auto [j, v] : lp_rows[i].entries) tg.emplace_back(row, j, v);
    h.push_back(lp_rhs[i]);
  }
  sf.cones.lp = row;
  for (const auto& block : soc_blocks) {
    for (const auto& r : block) {
      for (auto [j, v] : r.entries) tg.emplace_back(row, j, -v);
      h.push_back(r.constant);
      ++row;
    }
    sf.cones.soc.push_back(static_cast<int>(block.size()));
  }
  sf.G.resize(row, sf.n);
  sf.G.setFromTriplets(tg.begin(), tg.end());
  sf.h = Eigen::Map<Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
  return sf;
}

// Expands a solution of the lowered problem to program variables.
inline std::vector<double> expand(const StandardForm& sf, const Vec& x) {
  std::vector<double> out(sf.column_of.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = sf.column_of[j] < 0 ? sf.fixed_value[j] : x[sf.column_of[j]];
  }
  return out;
}

}  // namespace mgsched::solver
