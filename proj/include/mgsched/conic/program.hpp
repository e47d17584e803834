#pragma once

// Solver-agnostic mixed-integer conic program.
//
// Variables are real or binary with box bounds. Constraints are sparse linear
// rows and cones over affine expressions:
//   second-order:  entries[0] >= || entries[1..] ||
//   rotated:       2 * entries[0] * entries[1] >= || entries[2..] ||^2,
//                  entries[0], entries[1] >= 0
// The objective is linear and minimized; quadratic cost terms enter through
// epigraph variables and rotated cones.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mgsched::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VarKind { continuous, binary };

struct Var {
  std::size_t index = 0;
  friend bool operator==(Var, Var) = default;
};

struct RowId {
  std::size_t index = 0;
};

struct ConeId {
  std::size_t index = 0;
};

struct Term {
  Var var;
  double coef = 1.0;
};

class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(double constant) : constant_(constant) {}  // NOLINT
  AffineExpr(Var v) : terms_{{v, 1.0}} {}               // NOLINT
  AffineExpr(std::vector<Term> terms, double constant = 0.0)
      : terms_(std::move(terms)), constant_(constant) {}

  AffineExpr& add(Var v, double coef) {
    if (coef != 0.0) terms_.push_back({v, coef});
    return *this;
  }
  AffineExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    constant_ += o.constant_;
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) {
    for (const auto& t : o.terms_) terms_.push_back({t.var, -t.coef});
    constant_ -= o.constant_;
    return *this;
  }
  AffineExpr& operator*=(double s) {
    for (auto& t : terms_) t.coef *= s;
    constant_ *= s;
    return *this;
  }

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator*(AffineExpr a, double s) { return a *= s; }

  [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
  [[nodiscard]] double constant() const { return constant_; }

  [[nodiscard]] double evaluate(std::span<const double> x) const {
    double v = constant_;
    for (const auto& t : terms_) v += t.coef * x[t.var.index];
    return v;
  }

  // Merges repeated variables (first-appearance order) and drops zeros.
  [[nodiscard]] AffineExpr canonical() const {
    std::vector<Term> out;
    std::unordered_map<std::size_t, std::size_t> slot;
    for (const auto& t : terms_) {
      auto [it, fresh] = slot.emplace(t.var.index, out.size());
      if (fresh) {
        out.push_back(t);
      } else {
        out[it->second].coef += t.coef;
      }
    }
    std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
    return {std::move(out), constant_};
  }

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

inline AffineExpr operator*(double s, Var v) { return AffineExpr({{v, s}}); }
inline AffineExpr operator*(Var v, double s) { return AffineExpr({{v, s}}); }
inline AffineExpr operator+(Var a, Var b) { return AffineExpr(a) + AffineExpr(b); }
inline AffineExpr operator-(Var a, Var b) { return AffineExpr(a) - AffineExpr(b); }

enum class Sense { less_equal, greater_equal, equal };

struct VariableInfo {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lb = -kInf;
  double ub = kInf;
};

struct Row {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::equal;
  double rhs = 0.0;
};

enum class ConeKind { second_order, rotated };

struct Cone {
  std::string name;
  ConeKind kind = ConeKind::second_order;
  std::vector<AffineExpr> entries;

  // Number of entries on the "norm" side.
  [[nodiscard]] std::size_t norm_size() const {
    const std::size_t head = kind == ConeKind::rotated ? 2 : 1;
    return entries.size() - head;
  }
};

class Program {
 public:
  Var add_variable(std::string name, VarKind kind, double lb, double ub) {
    if (name.empty()) name = "v" + std::to_string(vars_.size());
    if (by_name_.contains(name)) {
      throw ModelError("duplicate variable name '" + name + "'");
    }
    if (kind == VarKind::binary) {
      lb = std::max(lb, 0.0);
      ub = std::min(ub, 1.0);
    }
    if (std::isnan(lb) || std::isnan(ub) || lb > ub) {
      throw ModelError("variable '" + name + "' has empty bounds [" +
                       std::to_string(lb) + ", " + std::to_string(ub) + "]");
    }
    const Var v{vars_.size()};
    by_name_.emplace(name, v.index);
    vars_.push_back({std::move(name), kind, lb, ub});
    return v;
  }

  Var add_continuous(std::string name, double lb = -kInf, double ub = kInf) {
    return add_variable(std::move(name), VarKind::continuous, lb, ub);
  }
  Var add_binary(std::string name) {
    return add_variable(std::move(name), VarKind::binary, 0.0, 1.0);
  }

  void set_bounds(Var v, double lb, double ub) {
    auto& info = variable(v);
    if (lb > ub) throw ModelError("empty bounds for '" + info.name + "'");
    info.lb = lb;
    info.ub = ub;
  }

  // lhs (sense) rhs; the constant of lhs moves to the right-hand side.
  RowId add_row(std::string name, const AffineExpr& lhs, Sense sense, double rhs) {
    const AffineExpr e = lhs.canonical();
    check_terms(e, name);
    if (name.empty()) name = "r" + std::to_string(rows_.size());
    rows_.push_back({std::move(name), e.terms(), sense, rhs - e.constant()});
    return {rows_.size() - 1};
  }

  // entries: t >= ||u||
  ConeId add_second_order_cone(std::string name, const AffineExpr& t,
                               const std::vector<AffineExpr>& u) {
    std::vector<AffineExpr> entries;
    entries.reserve(u.size() + 1);
    entries.push_back(t.canonical());
    for (const auto& e : u) entries.push_back(e.canonical());
    return push_cone(std::move(name), ConeKind::second_order, std::move(entries));
  }

  // 2 p q >= ||u||^2 with p, q >= 0. Solvers see the equivalent standard cone
  // || (p - q, sqrt(2) u) || <= p + q.
  ConeId add_rotated_cone(std::string name, const AffineExpr& p, const AffineExpr& q,
                          const std::vector<AffineExpr>& u) {
    std::vector<AffineExpr> entries;
    entries.reserve(u.size() + 2);
    entries.push_back(p.canonical());
    entries.push_back(q.canonical());
    for (const auto& e : u) entries.push_back(e.canonical());
    return push_cone(std::move(name), ConeKind::rotated, std::move(entries));
  }

  void set_objective(const AffineExpr& obj) {
    objective_ = obj.canonical();
    check_terms(objective_, "objective");
  }
  void add_objective(const AffineExpr& obj) {
    AffineExpr merged = objective_;
    merged += obj;
    set_objective(merged);
  }

  [[nodiscard]] std::size_t num_variables() const { return vars_.size(); }
  [[nodiscard]] std::size_t num_rows() const { return rows_.size(); }
  [[nodiscard]] std::size_t num_cones() const { return cones_.size(); }
  [[nodiscard]] std::size_t num_binaries() const {
    std::size_t n = 0;
    for (const auto& v : vars_) n += v.kind == VarKind::binary ? 1 : 0;
    return n;
  }

  [[nodiscard]] const std::vector<VariableInfo>& variables() const { return vars_; }
  [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
  [[nodiscard]] const std::vector<Cone>& cones() const { return cones_; }
  [[nodiscard]] const AffineExpr& objective() const { return objective_; }

  [[nodiscard]] const VariableInfo& variable(Var v) const {
    if (v.index >= vars_.size()) throw ModelError("variable handle out of range");
    return vars_[v.index];
  }
  VariableInfo& variable(Var v) {
    if (v.index >= vars_.size()) throw ModelError("variable handle out of range");
    return vars_[v.index];
  }
  [[nodiscard]] const Row& row(RowId r) const { return rows_.at(r.index); }
  [[nodiscard]] const Cone& cone(ConeId c) const { return cones_.at(c.index); }

  [[nodiscard]] std::optional<Var> find_variable(const std::string& name) const {
    if (auto it = by_name_.find(name); it != by_name_.end()) return Var{it->second};
    return std::nullopt;
  }

  [[nodiscard]] std::vector<Var> binaries() const {
    std::vector<Var> out;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (vars_[j].kind == VarKind::binary) out.push_back(Var{j});
    }
    return out;
  }

 private:
  void check_terms(const AffineExpr& e, const std::string& where) const {
    for (const auto& t : e.terms()) {
      if (t.var.index >= vars_.size()) {
        throw ModelError("'" + where + "' references an unknown variable");
      }
      if (!std::isfinite(t.coef)) {
        throw ModelError("'" + where + "' has a non-finite coefficient");
      }
    }
  }

  ConeId push_cone(std::string name, ConeKind kind, std::vector<AffineExpr> entries) {
    if (name.empty()) name = "k" + std::to_string(cones_.size());
    for (const auto& e : entries) {
      check_terms(e, name);
      for (const auto& t : e.terms()) {
        if (vars_[t.var.index].kind == VarKind::binary) {
          throw ModelError("binary variable '" + vars_[t.var.index].name +
                           "' used in cone '" + name + "'");
        }
      }
    }
    cones_.push_back({std::move(name), kind, std::move(entries)});
    return {cones_.size() - 1};
  }

  std::vector<VariableInfo> vars_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::vector<Row> rows_;
  std::vector<Cone> cones_;
  AffineExpr objective_;
};

}  // namespace mgsched::conic
