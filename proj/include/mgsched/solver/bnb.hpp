#pragma once

// Branch-and-bound for mixed-binary conic programs over the interior-point
// relaxation. Children are solved when created; a node's bound is the larger
// of its own relaxation bound and its parent's, so the global bound never
// decreases.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "mgsched/conic/check.hpp"
#include "mgsched/solver/ipm.hpp"
#include "mgsched/solver/propagate.hpp"

namespace mgsched::solver {

enum class NodeSelection { best_bound, depth_first };
enum class Branching { reliability, most_fractional, first_fractional };

struct SolveOptions {
  double rel_gap = 1e-4;
  double abs_gap = 1e-9;
  double int_tol = 1e-6;
  double feas_tol = 1e-6;  // incumbent acceptance on check_point
  std::size_t node_limit = 1'000'000;
  double time_limit_s = std::numeric_limits<double>::infinity();
  NodeSelection node_selection = NodeSelection::best_bound;
  Branching branching = Branching::reliability;
  int reliability = 1;             // observations before a pseudocost is trusted
  std::size_t strong_candidates = 4;
  std::size_t dive_every = 50;     // nodes between dives (0 disables)
  std::size_t polish_every = 1;    // popped nodes between rounding heuristics (0 disables)
  std::size_t rins_every = 50;     // nodes between neighbourhood searches (0 disables)
  std::size_t rins_nodes = 40;
  double rins_min_fixed = 0.5;     // fraction of binaries that must agree
  double cutoff = std::numeric_limits<double>::infinity();  // known objective upper bound
  std::uint64_t seed = 0;     // reserved; every tie-break is index based
  bool deterministic = true;  // node evaluation is sequential either way
  bool propagate = true;
  bool root_rounding = true;
  IpmOptions ipm;
};

struct BoundSample {
  std::size_t node = 0;
  double bound = 0.0;
  double incumbent = std::numeric_limits<double>::infinity();
};

struct SearchStats {
  std::size_t nodes = 0;  // node relaxations solved
  std::size_t heuristic_solves = 0;
  std::size_t strong_solves = 0;
  std::size_t pruned = 0;
  std::size_t infeasible_nodes = 0;
  std::size_t numerical_nodes = 0;
  std::size_t incumbent_updates = 0;
  std::size_t max_depth = 0;
  long ipm_iterations = 0;
  double seconds = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  std::vector<BoundSample> trace;
};

struct MisocpResult {
  conic::SolutionPoint point;
  SearchStats stats;
};

inline double relative_gap(double incumbent, double bound) {
  if (!std::isfinite(incumbent)) return std::numeric_limits<double>::infinity();
  return std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

namespace bnb_detail {

struct Node {
  std::size_t id = 0;
  std::size_t depth = 0;
  std::vector<signed char> fix;  // per binary: -1 free, 0, 1
  double bound = -std::numeric_limits<double>::infinity();
  std::vector<double> values;    // relaxation point (empty if unsolved)
};

class Search {
 public:
  Search(const conic::Program& prog, const SolveOptions& opt)
      : prog_(prog), opt_(opt), binaries_(prog.binaries()), root_(Bounds::of(prog)) {}
  Search(const conic::Program& prog, const SolveOptions& opt, Bounds root)
      : prog_(prog), opt_(opt), binaries_(prog.binaries()), root_(std::move(root)) {}

  MisocpResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Node root;
    root.fix.assign(binaries_.size(), -1);
    const auto root_status = evaluate(root, -std::numeric_limits<double>::infinity());
    if (root_status == SolveStatus::infeasible || root_status == SolveStatus::unbounded) {
      return finish(root_status, elapsed());
    }
    if (binaries_.empty() && root_status != SolveStatus::optimal) {
      return finish(root_status, elapsed());
    }
    if (binaries_.empty()) {
      result_.point.status = SolveStatus::optimal;
      result_.point.values = root.values;
      result_.point.objective = prog_.objective().evaluate(root.values);
      result_.point.bound = root.bound;
      result_.stats.gap = 0.0;
      result_.stats.seconds = elapsed();
      return result_;
    }
    if (opt_.root_rounding && !root.values.empty()) {
      try_rounding(root);
      if (opt_.dive_every > 0) dive(root, t0);
    }
    push(std::move(root));

    bool hit_limit = false;
    next_dive_ = opt_.dive_every;
    next_rins_ = 0;
    while (!open_.empty()) {
      const double global = open_bounds_.empty() ? incumbent_obj_ : *open_bounds_.begin();
      record(global);
      if (closed(global)) break;
      if (result_.stats.nodes >= opt_.node_limit || elapsed() > opt_.time_limit_s) {
        hit_limit = true;
        break;
      }
      Node node = pop();
      if (node.bound >= cutoff()) {
        ++result_.stats.pruned;
        continue;
      }
      if (opt_.dive_every > 0 && result_.stats.nodes >= next_dive_ && !node.values.empty()) {
        next_dive_ = result_.stats.nodes + opt_.dive_every;
        dive(node, t0);
        if (node.bound >= cutoff()) {
          ++result_.stats.pruned;
          continue;
        }
      }
      if (opt_.polish_every > 0 && ++since_polish_ >= opt_.polish_every && !node.values.empty()) {
        since_polish_ = 0;
        polish(node.values);
        if (node.bound >= cutoff()) {
          ++result_.stats.pruned;
          continue;
        }
      }
      if (opt_.rins_every > 0 && result_.stats.nodes >= next_rins_) {
        next_rins_ = result_.stats.nodes + opt_.rins_every;
        rins(node);
        if (node.bound >= cutoff()) {
          ++result_.stats.pruned;
          continue;
        }
      }
      auto sel = select(node);
      if (!sel.index) {
        // Relaxation is integral within tolerance. When rounding it does not
        // give a feasible point, keep branching on the free binaries.
        if (consider_incumbent(node)) continue;
        sel.index = least_integral_free(node);
        if (!sel.index) continue;
      }
      for (int side : {0, 1}) {
        Child& kid = sel.kids[side];
        if (!kid.ready) {
          kid.node = make_child(node, *sel.index, side);
          kid.status = evaluate(kid.node, node.bound);
          learn(node, *sel.index, side, kid);
        }
        if (kid.status == SolveStatus::infeasible) continue;
        if (kid.node.bound >= cutoff()) {
          ++result_.stats.pruned;
          continue;
        }
        result_.stats.max_depth = std::max(result_.stats.max_depth, kid.node.depth);
        kid.node.id = next_id_++;
        push(std::move(kid.node));
      }
    }
    const double final_bound = open_bounds_.empty() ? incumbent_obj_ : *open_bounds_.begin();
    record(final_bound);
    result_.point.bound = std::min(final_bound, incumbent_obj_);
    if (hit_limit) return finish(SolveStatus::limit, elapsed());
    return finish(has_incumbent_ ? SolveStatus::optimal : SolveStatus::infeasible, elapsed());
  }

 private:
  struct Child {
    bool ready = false;
    SolveStatus status = SolveStatus::numerical_error;
    Node node;
  };
  struct Selection {
    std::optional<std::size_t> index;
    std::array<Child, 2> kids;
  };
  struct Pseudocost {
    double sum[2] = {0.0, 0.0};
    int count[2] = {0, 0};
  };

  Bounds bounds_for(const Node& node) const {
    Bounds b = root_;
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      if (node.fix[k] >= 0) {
        b.lb[binaries_[k].index] = node.fix[k];
        b.ub[binaries_[k].index] = node.fix[k];
      }
    }
    return b;
  }

  Node make_child(const Node& parent, std::size_t k, int side) const {
    Node child;
    child.depth = parent.depth + 1;
    child.fix = parent.fix;
    child.fix[k] = static_cast<signed char>(side);
    return child;
  }

  // Propagates, solves the relaxation and fills node.bound / node.values.
  SolveStatus evaluate(Node& node, double parent_bound, std::size_t* counter = nullptr) {
    Bounds b = bounds_for(node);
    if (opt_.propagate) {
      if (propagate(prog_, b).infeasible) {
        ++result_.stats.infeasible_nodes;
        return SolveStatus::infeasible;
      }
      for (std::size_t k = 0; k < binaries_.size(); ++k) {
        const auto j = binaries_[k].index;
        if (node.fix[k] < 0 && b.lb[j] == b.ub[j]) node.fix[k] = static_cast<signed char>(b.lb[j]);
      }
    }
    IpmInfo info;
    auto pt = solve_relaxation(prog_, b, opt_.ipm, &info);
    ++(counter ? *counter : result_.stats.nodes);
    result_.stats.ipm_iterations += info.iterations;
    switch (pt.status) {
      case SolveStatus::infeasible:
        ++result_.stats.infeasible_nodes;
        return SolveStatus::infeasible;
      case SolveStatus::unbounded:
        return SolveStatus::unbounded;
      case SolveStatus::optimal:
        node.bound = std::max(parent_bound, pt.bound);
        node.values = std::move(pt.values);
        return SolveStatus::optimal;
      default:
        ++result_.stats.numerical_nodes;
        node.bound = parent_bound;
        node.values.clear();
        return SolveStatus::numerical_error;
    }
  }

  double fractionality(const Node& node, std::size_t k) const {
    const double v = node.values[binaries_[k].index];
    return std::min(v, 1.0 - v);
  }

  // Records the bound gain per unit of change of a branching decision.
  void learn(const Node& parent, std::size_t k, int side, const Child& kid) {
    if (kid.status != SolveStatus::optimal || parent.values.empty()) return;
    const double v = parent.values[binaries_[k].index];
    const double delta = side == 0 ? v : 1.0 - v;
    if (delta <= opt_.int_tol) return;
    auto& pc = pseudo_[k];
    pc.sum[side] += std::max(0.0, kid.node.bound - parent.bound) / delta;
    ++pc.count[side];
  }

  double pseudocost(std::size_t k, int side) const {
    const auto& pc = pseudo_[k];
    if (pc.count[side] > 0) return pc.sum[side] / pc.count[side];
    double sum = 0.0;
    int n = 0;
    for (const auto& q : pseudo_) {
      if (q.count[side] > 0) {
        sum += q.sum[side] / q.count[side];
        ++n;
      }
    }
    return n > 0 ? sum / n : 1.0;
  }

  static double product_score(double down, double up) {
    constexpr double eps = 1e-6;
    return std::max(down, eps) * std::max(up, eps);
  }

  Selection select(const Node& node) {
    Selection sel;
    std::vector<std::size_t> cand;
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      if (node.fix[k] >= 0) continue;
      if (node.values.empty()) {
        sel.index = k;  // unsolved node: first free binary
        return sel;
      }
      if (fractionality(node, k) > opt_.int_tol) cand.push_back(k);
    }
    if (cand.empty()) return sel;
    if (opt_.branching == Branching::first_fractional) {
      sel.index = cand.front();
      return sel;
    }
    if (opt_.branching == Branching::most_fractional) {
      double best = -1.0;
      for (auto k : cand) {
        if (fractionality(node, k) > best) {
          best = fractionality(node, k);
          sel.index = k;
        }
      }
      return sel;
    }
    // Reliability branching: strong-branch on the most fractional of the
    // candidates whose pseudocosts are not yet trusted.
    std::vector<std::size_t> unreliable;
    for (auto k : cand) {
      if (std::min(pseudo_[k].count[0], pseudo_[k].count[1]) < opt_.reliability) unreliable.push_back(k);
    }
    std::stable_sort(unreliable.begin(), unreliable.end(), [&](std::size_t a, std::size_t b) {
      return fractionality(node, a) > fractionality(node, b);
    });
    if (unreliable.size() > opt_.strong_candidates) unreliable.resize(opt_.strong_candidates);
    double best = -1.0;
    for (auto k : cand) {
      const double v = node.values[binaries_[k].index];
      const double score = product_score(pseudocost(k, 0) * v, pseudocost(k, 1) * (1.0 - v));
      if (std::find(unreliable.begin(), unreliable.end(), k) != unreliable.end()) continue;
      if (score > best) {
        best = score;
        sel.index = k;
      }
    }
    for (auto k : unreliable) {
      std::array<Child, 2> kids;
      double gain[2] = {0.0, 0.0};
      bool cut_off = false;
      for (int side : {0, 1}) {
        kids[side].node = make_child(node, k, side);
        kids[side].status = evaluate(kids[side].node, node.bound, &result_.stats.strong_solves);
        kids[side].ready = true;
        learn(node, k, side, kids[side]);
        if (kids[side].status == SolveStatus::infeasible || kids[side].node.bound >= cutoff()) {
          gain[side] = std::numeric_limits<double>::infinity();
          cut_off = true;
        } else {
          gain[side] = kids[side].node.bound - node.bound;
        }
      }
      const double score = cut_off ? std::numeric_limits<double>::infinity() : product_score(gain[0], gain[1]);
      if (score > best || !sel.index) {
        best = score;
        sel.index = k;
        sel.kids = std::move(kids);
      }
      if (cut_off) break;
    }
    return sel;
  }

  // Fixes near-integral binaries plus the least fractional one, re-solves, and
  // repeats until the relaxation is integral.
  void dive(const Node& start, std::chrono::steady_clock::time_point t0) {
    Node n;
    n.fix = start.fix;
    n.values = start.values;
    n.bound = start.bound;
    for (std::size_t step = 0; step < binaries_.size() + 1; ++step) {
      if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > opt_.time_limit_s) return;
      std::optional<std::size_t> pick;
      double least = 1.0;
      bool fractional = false;
      for (std::size_t k = 0; k < binaries_.size(); ++k) {
        if (n.fix[k] >= 0) continue;
        const double f = fractionality(n, k);
        if (f <= opt_.int_tol) continue;
        fractional = true;
        if (f < least) {
          least = f;
          pick = k;
        }
      }
      if (!fractional) {
        polish(n.values);
        return;
      }
      for (std::size_t k = 0; k < binaries_.size(); ++k) {
        if (n.fix[k] < 0 && fractionality(n, k) <= 0.02) {
          n.fix[k] = static_cast<signed char>(n.values[binaries_[k].index] >= 0.5 ? 1 : 0);
        }
      }
      const auto value = static_cast<signed char>(n.values[binaries_[*pick].index] >= 0.5 ? 1 : 0);
      Node next;
      next.fix = n.fix;
      next.fix[*pick] = value;
      auto st = evaluate(next, n.bound, &result_.stats.heuristic_solves);
      if (st != SolveStatus::optimal || next.bound >= cutoff()) {
        next.fix = n.fix;
        next.fix[*pick] = static_cast<signed char>(1 - value);
        st = evaluate(next, n.bound, &result_.stats.heuristic_solves);
        if (st != SolveStatus::optimal || next.bound >= cutoff()) {
          polish(n.values);
          return;
        }
      }
      n = std::move(next);
    }
  }

  // Rounds the binaries in order of increasing fractionality, propagating
  // after each fixing and flipping a value that propagation rejects, then
  // re-solves the continuous part.
  bool polish(const std::vector<double>& guide) {
    Bounds b = root_;
    auto frac = [&](std::size_t k) {
      const double v = guide[binaries_[k].index];
      return std::min(std::abs(v), std::abs(1.0 - v));
    };
    auto rounded = [&](std::size_t k) { return guide[binaries_[k].index] >= 0.5 ? 1.0 : 0.0; };
    std::vector<std::size_t> order(binaries_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return frac(x) < frac(y); });
    auto fix = [&](Bounds& bb, std::size_t k, double v) {
      const auto j = binaries_[k].index;
      if (bb.lb[j] > v || bb.ub[j] < v) return false;
      bb.lb[j] = bb.ub[j] = v;
      return true;
    };
    // Near-integral binaries in one batch.
    Bounds batch = b;
    bool ok = true;
    for (auto k : order) {
      if (frac(k) > 0.05) break;
      ok = ok && fix(batch, k, rounded(k));
    }
    if (ok && (!opt_.propagate || !propagate(prog_, batch).infeasible)) b = std::move(batch);
    for (auto k : order) {
      const auto j = binaries_[k].index;
      if (b.lb[j] == b.ub[j]) continue;
      bool placed = false;
      for (double v : {rounded(k), 1.0 - rounded(k)}) {
        Bounds trial = b;
        if (!fix(trial, k, v)) continue;
        if (opt_.propagate && propagate(prog_, trial).infeasible) continue;
        b = std::move(trial);
        placed = true;
        break;
      }
      if (!placed) return false;
    }
    IpmInfo info;
    auto pt = solve_relaxation(prog_, b, opt_.ipm, &info);
    ++result_.stats.heuristic_solves;
    result_.stats.ipm_iterations += info.iterations;
    if (pt.status != SolveStatus::optimal) return false;
    if (!conic::check_point(prog_, pt.values).clean(opt_.feas_tol)) return false;
    if (pt.objective < incumbent_obj_) {
      incumbent_obj_ = pt.objective;
      incumbent_ = std::move(pt.values);
      has_incumbent_ = true;
      ++result_.stats.incumbent_updates;
    }
    return true;
  }

  void try_rounding(const Node& node) { polish(node.values); }

  bool consider_incumbent(const Node& node) {
    if (node.values.empty()) return false;
    return polish(node.values);
  }

  std::optional<std::size_t> least_integral_free(const Node& node) const {
    std::optional<std::size_t> best;
    double score = -1.0;
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      if (node.fix[k] >= 0) continue;
      if (fractionality(node, k) > score) {
        score = fractionality(node, k);
        best = k;
      }
    }
    return best;
  }

  double cutoff() const {
    if (!has_incumbent_) return opt_.cutoff;
    return std::min(opt_.cutoff, incumbent_obj_ - std::max(opt_.abs_gap, opt_.rel_gap * std::max(1.0, std::abs(incumbent_obj_))));
  }

  // Relaxation-induced neighbourhood search: binaries on which the node
  // relaxation agrees with the incumbent are fixed and the rest is searched
  // with a node budget.
  void rins(const Node& node) {
    if (!has_incumbent_ || node.values.empty()) return;
    Bounds b = bounds_for(node);
    std::size_t fixed = 0;
    for (std::size_t k = 0; k < binaries_.size(); ++k) {
      const auto j = binaries_[k].index;
      const double inc = std::round(incumbent_[j]);
      if (b.lb[j] == b.ub[j] || std::abs(node.values[j] - inc) <= 0.1) {
        if (b.lb[j] != b.ub[j]) b.lb[j] = b.ub[j] = inc;
        ++fixed;
      }
    }
    if (fixed == binaries_.size() || fixed < opt_.rins_min_fixed * binaries_.size()) return;
    SolveOptions sub = opt_;
    sub.node_limit = opt_.rins_nodes;
    sub.rins_every = 0;
    sub.dive_every = 0;
    sub.polish_every = 4;
    sub.branching = Branching::most_fractional;
    sub.cutoff = cutoff();
    sub.time_limit_s = std::numeric_limits<double>::infinity();
    auto r = Search(prog_, sub, std::move(b)).run();
    result_.stats.heuristic_solves += r.stats.nodes + r.stats.heuristic_solves + r.stats.strong_solves;
    result_.stats.ipm_iterations += r.stats.ipm_iterations;
    if (r.point.has_values() && r.point.objective < incumbent_obj_) {
      incumbent_obj_ = r.point.objective;
      incumbent_ = std::move(r.point.values);
      ++result_.stats.incumbent_updates;
    }
  }

  bool closed(double global) const {
    return has_incumbent_ && relative_gap(incumbent_obj_, global) <= opt_.rel_gap;
  }

  void record(double global) {
    if (!result_.stats.trace.empty() && result_.stats.trace.back().bound == global &&
        result_.stats.trace.back().incumbent == incumbent_obj_) {
      return;
    }
    result_.stats.trace.push_back({result_.stats.nodes, global, incumbent_obj_});
  }

  struct Key {
    double bound;
    std::size_t depth;
    std::size_t id;
  };
  struct KeyLess {
    NodeSelection sel;
    bool operator()(const Key& a, const Key& b) const {
      if (sel == NodeSelection::depth_first) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.id > b.id;
      }
      const double qa = quantize(a.bound);
      const double qb = quantize(b.bound);
      if (qa != qb) return qa < qb;
      if (a.depth != b.depth) return a.depth > b.depth;
      return a.id < b.id;
    }
    static double quantize(double v) {
      if (!std::isfinite(v)) return v;
      const double step = 1e-9 * std::max(1.0, std::abs(v));
      return std::floor(v / step) * step;
    }
  };

  void push(Node n) {
    const Key k{n.bound, n.depth, n.id};
    open_bounds_.insert(n.bound);
    open_.emplace(k, std::move(n));
  }

  Node pop() {
    auto it = open_.begin();
    Node n = std::move(it->second);
    open_.erase(it);
    open_bounds_.erase(open_bounds_.find(n.bound));
    return n;
  }

  MisocpResult finish(SolveStatus status, double seconds) {
    result_.stats.seconds = seconds;
    result_.point.status = status;
    if (has_incumbent_) {
      result_.point.values = incumbent_;
      result_.point.objective = incumbent_obj_;
      result_.stats.gap = relative_gap(incumbent_obj_, result_.point.bound);
    }
    if (status == SolveStatus::optimal) result_.point.bound = std::min(result_.point.bound, incumbent_obj_);
    return result_;
  }

  const conic::Program& prog_;
  SolveOptions opt_;
  std::vector<conic::Var> binaries_;
  Bounds root_;
  std::size_t next_id_ = 1;
  std::multimap<Key, Node, KeyLess> open_{KeyLess{opt_.node_selection}};
  std::multiset<double> open_bounds_;
  bool has_incumbent_ = false;
  double incumbent_obj_ = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_;
  std::vector<Pseudocost> pseudo_ = std::vector<Pseudocost>(binaries_.size());
  std::size_t next_dive_ = 0;
  std::size_t since_polish_ = 0;
  std::size_t next_rins_ = 0;
  MisocpResult result_;
};

}  // namespace bnb_detail

inline MisocpResult solve_misocp(const conic::Program& prog, const SolveOptions& opt = {}) {
  return bnb_detail::Search(prog, opt).run();
}

}  // namespace mgsched::solver
