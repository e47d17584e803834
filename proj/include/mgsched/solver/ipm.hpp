#pragma once

// Primal-dual interior-point method for linear + second-order cone programs
// on the homogeneous self-dual embedding, with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector. Each iteration factors the quasi-definite
// KKT matrix
//
//   [ dI   A'   G'       ]
//   [ A   -dI   0        ]
//   [ G    0   -W'W - dI ]
//
// once and solves it twice; iterative refinement removes the effect of the
// static regularization d.

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mgsched/conic/check.hpp"
#include "mgsched/solver/standard_form.hpp"

namespace mgsched::solver {

using conic::SolveStatus;

struct IpmOptions {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  double feastol_inacc = 1e-5;
  double abstol_inacc = 5e-5;
  double reltol_inacc = 5e-5;
  int max_iterations = 150;
  double static_reg = 1e-9;
  int refinement_steps = 4;
  int equilibration_passes = 15;
  double step_fraction = 0.99;
  double polish_tol = 1e-7;  // re-solve tighter when an optimal point misses this
};

struct IpmInfo {
  int iterations = 0;
  double pres = 0.0;
  double dres = 0.0;
  double gap = 0.0;
  bool reduced_accuracy = false;
};

struct IpmResult {
  SolveStatus status = SolveStatus::numerical_error;
  Vec x;                       // columns of the standard form
  double objective = 0.0;      // c'x + c0
  double dual_objective = -std::numeric_limits<double>::infinity();
  IpmInfo info;
};

namespace ipm_detail {

inline std::vector<int> block_offsets(const ConeLayout& k) {
  std::vector<int> off;
  int o = k.lp;
  for (int q : k.soc) {
    off.push_back(o);
    o += q;
  }
  return off;
}

// Smallest "eigenvalue" of v with respect to the cone.
inline double min_eig(const ConeLayout& k, const std::vector<int>& off, const Vec& v) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k.lp; ++i) m = std::min(m, v[i]);
  for (std::size_t b = 0; b < k.soc.size(); ++b) {
    const int o = off[b];
    const int q = k.soc[b];
    m = std::min(m, v[o] - v.segment(o + 1, q - 1).norm());
  }
  return m;
}

inline void shift_into_cone(const ConeLayout& k, const std::vector<int>& off, Vec& v) {
  const double alpha = -min_eig(k, off, v);
  if (alpha < 0.0) return;
  const double shift = 1.0 + alpha;
  for (int i = 0; i < k.lp; ++i) v[i] += shift;
  for (std::size_t b = 0; b < k.soc.size(); ++b) v[off[b]] += shift;
}

// Largest step a with v + a dv in the cone (inf if unbounded).
inline double max_step(const ConeLayout& k, const std::vector<int>& off, const Vec& v,
                       const Vec& dv) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k.lp; ++i) {
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  }
  for (std::size_t b = 0; b < k.soc.size(); ++b) {
    const int o = off[b];
    const int q = k.soc[b];
    const double v0 = v[o];
    const double d0 = dv[o];
    const auto v1 = v.segment(o + 1, q - 1);
    const auto d1 = dv.segment(o + 1, q - 1);
    const double nv1 = v1.norm();
    const double qa = d0 * d0 - d1.squaredNorm();
    const double qb = 2.0 * (v0 * d0 - v1.dot(d1));
    const double qc = std::max(0.0, (v0 - nv1) * (v0 + nv1));
    if (d0 < 0.0) a = std::min(a, -v0 / d0);
    double root = std::numeric_limits<double>::infinity();
    if (std::abs(qa) < 1e-300) {
      if (qb < 0.0) root = -qc / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double t = -0.5 * (qb + std::copysign(sq, qb));
        const double r1 = t / qa;
        const double r2 = t != 0.0 ? qc / t : std::numeric_limits<double>::infinity();
        for (double r : {r1, r2}) {
          if (r > 0.0) root = std::min(root, r);
        }
      }
    }
    a = std::min(a, root);
  }
  return a;
}

inline double dot_cone_e(const ConeLayout& k, const std::vector<int>& off, const Vec& v) {
  double s = 0.0;
  for (int i = 0; i < k.lp; ++i) s += v[i];
  for (std::size_t b = 0; b < k.soc.size(); ++b) s += v[off[b]];
  return s;
}

// Nesterov-Todd scaling point for each block.
struct Scaling {
  Vec lp_w;
  std::vector<double> eta;
  std::vector<Vec> wbar;
  Vec lambda;

  void compute(const ConeLayout& k, const std::vector<int>& off, const Vec& s, const Vec& z) {
    lp_w.resize(k.lp);
    lambda.resize(s.size());
    for (int i = 0; i < k.lp; ++i) {
      lp_w[i] = std::sqrt(s[i] / z[i]);
      lambda[i] = std::sqrt(s[i] * z[i]);
    }
    eta.resize(k.soc.size());
    wbar.resize(k.soc.size());
    for (std::size_t b = 0; b < k.soc.size(); ++b) {
      const int o = off[b];
      const int q = k.soc[b];
      const Vec sb = s.segment(o, q);
      const Vec zb = z.segment(o, q);
      const double sn1 = sb.tail(q - 1).norm();
      const double zn1 = zb.tail(q - 1).norm();
      const double sres = std::max((sb[0] - sn1) * (sb[0] + sn1), 1e-300);
      const double zres = std::max((zb[0] - zn1) * (zb[0] + zn1), 1e-300);
      const Vec sbar = sb / std::sqrt(sres);
      Vec zbar = zb / std::sqrt(zres);
      const double gamma = std::sqrt(std::max(0.5 * (1.0 + sbar.dot(zbar)), 1e-300));
      zbar.tail(q - 1) *= -1.0;
      Vec w = (sbar + zbar) / (2.0 * gamma);
      wbar[b] = std::move(w);
      eta[b] = std::pow(sres / zres, 0.25);
      lambda.segment(o, q) = apply_block(b, zb);
    }
  }

  [[nodiscard]] Vec apply_block(std::size_t b, const Vec& v) const {
    const Vec& w = wbar[b];
    const int q = static_cast<int>(w.size());
    Vec out(q);
    const double w1v1 = w.tail(q - 1).dot(v.tail(q - 1));
    out[0] = w[0] * v[0] + w1v1;
    out.tail(q - 1) = v.tail(q - 1) + (v[0] + w1v1 / (1.0 + w[0])) * w.tail(q - 1);
    return eta[b] * out;
  }

  [[nodiscard]] Vec apply_inv_block(std::size_t b, const Vec& v) const {
    const Vec& w = wbar[b];
    const int q = static_cast<int>(w.size());
    Vec out(q);
    const double w1v1 = w.tail(q - 1).dot(v.tail(q - 1));
    out[0] = w[0] * v[0] - w1v1;
    out.tail(q - 1) = v.tail(q - 1) + (-v[0] + w1v1 / (1.0 + w[0])) * w.tail(q - 1);
    return out / eta[b];
  }

  [[nodiscard]] Eigen::MatrixXd squared_block(std::size_t b) const {
    const Vec& w = wbar[b];
    const int q = static_cast<int>(w.size());
    Eigen::MatrixXd W(q, q);
    W(0, 0) = w[0];
    W.block(0, 1, 1, q - 1) = w.tail(q - 1).transpose();
    W.block(1, 0, q - 1, 1) = w.tail(q - 1);
    W.block(1, 1, q - 1, q - 1) = Eigen::MatrixXd::Identity(q - 1, q - 1) +
                                  w.tail(q - 1) * w.tail(q - 1).transpose() / (1.0 + w[0]);
    return eta[b] * eta[b] * (W * W);
  }

  // out = W v (inverse: W^{-1} v) block by block without temporaries.
  void apply_into(const ConeLayout& k, const std::vector<int>& off, const double* v, double* out,
                  bool inverse) const {
    for (int i = 0; i < k.lp; ++i) out[i] = inverse ? v[i] / lp_w[i] : lp_w[i] * v[i];
    for (std::size_t b = 0; b < k.soc.size(); ++b) {
      const double* w = wbar[b].data();
      const int q = k.soc[b];
      const double* vb = v + off[b];
      double* ob = out + off[b];
      double w1v1 = 0.0;
      for (int i = 1; i < q; ++i) w1v1 += w[i] * vb[i];
      const double sign = inverse ? -1.0 : 1.0;
      const double head = w[0] * vb[0] + sign * w1v1;
      const double coef = sign * vb[0] + w1v1 / (1.0 + w[0]);
      const double e = inverse ? 1.0 / eta[b] : eta[b];
      for (int i = 1; i < q; ++i) ob[i] = e * (vb[i] + coef * w[i]);
      ob[0] = e * head;
    }
  }

  [[nodiscard]] Vec apply(const ConeLayout& k, const std::vector<int>& off, const Vec& v) const {
    Vec out(v.size());
    apply_into(k, off, v.data(), out.data(), false);
    return out;
  }

  [[nodiscard]] Vec apply_inv(const ConeLayout& k, const std::vector<int>& off,
                              const Vec& v) const {
    Vec out(v.size());
    apply_into(k, off, v.data(), out.data(), true);
    return out;
  }
};

// Jordan product u o v.
inline Vec jordan(const ConeLayout& k, const std::vector<int>& off, const Vec& u, const Vec& v) {
  Vec out(u.size());
  for (int i = 0; i < k.lp; ++i) out[i] = u[i] * v[i];
  for (std::size_t b = 0; b < k.soc.size(); ++b) {
    const int o = off[b];
    const int q = k.soc[b];
    out[o] = u.segment(o, q).dot(v.segment(o, q));
    out.segment(o + 1, q - 1) = u[o] * v.segment(o + 1, q - 1) + v[o] * u.segment(o + 1, q - 1);
  }
  return out;
}

// Solves lambda o u = v for u.
inline Vec jordan_div(const ConeLayout& k, const std::vector<int>& off, const Vec& lambda,
                      const Vec& v) {
  Vec out(v.size());
  for (int i = 0; i < k.lp; ++i) out[i] = v[i] / lambda[i];
  for (std::size_t b = 0; b < k.soc.size(); ++b) {
    const int o = off[b];
    const int q = k.soc[b];
    const double l0 = lambda[o];
    const auto l1 = lambda.segment(o + 1, q - 1);
    const double rho = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * v[o] - l1.dot(v.segment(o + 1, q - 1))) / rho;
    out[o] = u0;
    out.segment(o + 1, q - 1) = (v.segment(o + 1, q - 1) - u0 * l1) / l0;
  }
  return out;
}

struct Equilibration {
  Vec col, row_a, row_g;
  double sc = 1.0;  // objective scale
  double sb = 1.0;  // right-hand-side scale
};

inline void scale_matrix(SpMat& M, const Vec& rows, const Vec& cols) {
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SpMat::InnerIterator it(M, j); it; ++it) it.valueRef() *= rows[it.row()] * cols[j];
  }
}

inline Equilibration equilibrate(StandardForm& sf, int passes) {
  const int n = sf.n;
  const int p = static_cast<int>(sf.A.rows());
  const int m = static_cast<int>(sf.G.rows());
  const auto off = block_offsets(sf.cones);
  Equilibration e;
  e.col = Vec::Ones(n);
  e.row_a = Vec::Ones(p);
  e.row_g = Vec::Ones(m);
  auto inv_sqrt = [](double v) { return v < 1e-12 ? 1.0 : 1.0 / std::sqrt(v); };
  for (int pass = 0; pass < passes; ++pass) {
    Vec cn = Vec::Zero(n);
    Vec ra = Vec::Zero(p);
    Vec rg = Vec::Zero(m);
    for (int j = 0; j < n; ++j) {
      for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
        const double a = std::abs(it.value());
        cn[j] = std::max(cn[j], a);
        ra[it.row()] = std::max(ra[it.row()], a);
      }
      for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
        const double a = std::abs(it.value());
        cn[j] = std::max(cn[j], a);
        rg[it.row()] = std::max(rg[it.row()], a);
      }
    }
    for (std::size_t b = 0; b < sf.cones.soc.size(); ++b) {
      const double mx = rg.segment(off[b], sf.cones.soc[b]).maxCoeff();
      rg.segment(off[b], sf.cones.soc[b]).setConstant(mx);
    }
    Vec dc = cn.unaryExpr(inv_sqrt);
    Vec da = ra.unaryExpr(inv_sqrt);
    Vec dg = rg.unaryExpr(inv_sqrt);
    scale_matrix(sf.A, da, dc);
    scale_matrix(sf.G, dg, dc);
    e.col.array() *= dc.array();
    e.row_a.array() *= da.array();
    e.row_g.array() *= dg.array();
  }
  sf.c.array() *= e.col.array();
  sf.b.array() *= e.row_a.array();
  sf.h.array() *= e.row_g.array();
  const double cmax = sf.c.size() ? sf.c.cwiseAbs().maxCoeff() : 0.0;
  const double bmax = std::max(sf.b.size() ? sf.b.cwiseAbs().maxCoeff() : 0.0,
                               sf.h.size() ? sf.h.cwiseAbs().maxCoeff() : 0.0);
  e.sc = 1.0 / std::max(1.0, cmax);
  e.sb = 1.0 / std::max(1.0, bmax);
  sf.c *= e.sc;
  sf.b *= e.sb;
  sf.h *= e.sb;
  return e;
}

class KktSystem {
 public:
  KktSystem(const StandardForm& sf, double reg, int refine)
      : sf_(sf), off_(block_offsets(sf.cones)), reg_(reg), refine_(refine) {
    n_ = sf.n;
    p_ = static_cast<int>(sf.A.rows());
    m_ = static_cast<int>(sf.G.rows());
  }

  bool factor(const Scaling& w) {
    w_ = &w;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(sf_.A.nonZeros() + sf_.G.nonZeros() + n_ + p_ + m_ * 2);
    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, reg_);
    for (int j = 0; j < n_; ++j) {
      for (SpMat::InnerIterator it(sf_.A, j); it; ++it) t.emplace_back(n_ + it.row(), j, it.value());
      for (SpMat::InnerIterator it(sf_.G, j); it; ++it) {
        t.emplace_back(n_ + p_ + it.row(), j, it.value());
      }
    }
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -reg_);
    const int base = n_ + p_;
    for (int i = 0; i < sf_.cones.lp; ++i) {
      t.emplace_back(base + i, base + i, -w.lp_w[i] * w.lp_w[i] - reg_);
    }
    for (std::size_t b = 0; b < sf_.cones.soc.size(); ++b) {
      const Eigen::MatrixXd W2 = w.squared_block(b);
      const int o = base + off_[b];
      for (int c = 0; c < W2.cols(); ++c) {
        for (int r = c; r < W2.rows(); ++r) {
          t.emplace_back(o + r, o + c, -W2(r, c) - (r == c ? reg_ : 0.0));
        }
      }
    }
    SpMat K(n_ + p_ + m_, n_ + p_ + m_);
    K.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    ldlt_.factorize(K);
    return ldlt_.info() == Eigen::Success;
  }

  // Unregularized K * v.
  [[nodiscard]] Vec multiply(const Vec& v) const {
    const auto vx = v.head(n_);
    const auto vy = v.segment(n_, p_);
    const auto vz = v.tail(m_);
    Vec out(n_ + p_ + m_);
    out.head(n_).noalias() = sf_.A.transpose() * vy;
    out.head(n_).noalias() += sf_.G.transpose() * vz;
    out.segment(n_, p_).noalias() = sf_.A * vx;
    tmp_.resize(m_);
    w_->apply_into(sf_.cones, off_, v.data() + n_ + p_, tmp_.data(), false);
    w_->apply_into(sf_.cones, off_, tmp_.data(), out.data() + n_ + p_, false);
    out.tail(m_) *= -1.0;
    out.tail(m_).noalias() += sf_.G * vx;
    return out;
  }

  [[nodiscard]] Vec solve(const Vec& rhs) const {
    Vec sol = ldlt_.solve(rhs);
    const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    double last = std::numeric_limits<double>::infinity();
    for (int k = 0; k < refine_; ++k) {
      const Vec r = rhs - multiply(sol);
      const double rn = r.cwiseAbs().maxCoeff();
      if (rn < 1e-14 * scale || rn > 0.5 * last) break;
      last = rn;
      sol += ldlt_.solve(r);
    }
    return sol;
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int p() const { return p_; }
  [[nodiscard]] int m() const { return m_; }

 private:
  const StandardForm& sf_;
  std::vector<int> off_;
  double reg_;
  int refine_;
  int n_ = 0, p_ = 0, m_ = 0;
  const Scaling* w_ = nullptr;
  mutable Vec tmp_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

inline double safe_norm(const Vec& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace ipm_detail

inline IpmResult solve_conic(const StandardForm& original, const IpmOptions& opt = {}) {
  using namespace ipm_detail;
  IpmResult res;
  if (original.infeasible) {
    res.status = SolveStatus::infeasible;
    return res;
  }
  const int n = original.n;
  if (n == 0) {
    res.status = SolveStatus::optimal;
    res.x = Vec::Zero(0);
    res.objective = res.dual_objective = original.c0;
    return res;
  }
  if (original.A.rows() == 0 && original.G.rows() == 0) {
    res.x = Vec::Zero(n);
    res.objective = res.dual_objective = original.c0;
    res.status = original.c.cwiseAbs().maxCoeff() > 0.0 ? SolveStatus::unbounded
                                                        : SolveStatus::optimal;
    return res;
  }

  StandardForm sf = original;
  const Equilibration eq = equilibrate(sf, opt.equilibration_passes);
  const ConeLayout& K = sf.cones;
  const auto off = block_offsets(K);
  const int p = static_cast<int>(sf.A.rows());
  const int m = static_cast<int>(sf.G.rows());
  const int N = n + p + m;
  const double degree = K.degree();

  KktSystem kkt(sf, opt.static_reg, opt.refinement_steps);
  Scaling W;
  W.lp_w = Vec::Ones(K.lp);
  W.eta.assign(K.soc.size(), 1.0);
  for (int q : K.soc) {
    Vec w = Vec::Zero(q);
    w[0] = 1.0;
    W.wbar.push_back(w);
  }
  if (!kkt.factor(W)) return res;

  Vec rhs = Vec::Zero(N);
  rhs.segment(n, p) = sf.b;
  rhs.tail(m) = sf.h;
  Vec sol = kkt.solve(rhs);
  Vec x = sol.head(n);
  Vec s = -sol.tail(m);
  shift_into_cone(K, off, s);

  rhs.setZero();
  rhs.head(n) = -sf.c;
  sol = kkt.solve(rhs);
  Vec y = sol.segment(n, p);
  Vec z = sol.tail(m);
  shift_into_cone(K, off, z);
  double tau = 1.0;
  double kappa = 1.0;

  const double nb = std::max(1.0, safe_norm(sf.b));
  const double nh = std::max(1.0, safe_norm(sf.h));
  const double nc = std::max(1.0, safe_norm(sf.c));

  enum class Verdict { none, optimal, infeasible, unbounded };
  auto judge = [&](double ftol, double atol, double rtol, IpmInfo& info) {
    const Vec rx = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    const Vec ry = sf.A * x - sf.b * tau;
    const Vec rz = sf.G * x + s - sf.h * tau;
    const double pcost = sf.c.dot(x) / tau;
    const double dcost = -(sf.b.dot(y) + sf.h.dot(z)) / tau;
    info.pres = std::max(safe_norm(ry) / nb, safe_norm(rz) / nh) / tau;
    info.dres = safe_norm(rx) / nc / tau;
    info.gap = s.dot(z) / (tau * tau);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) {
      relgap = info.gap / -pcost;
    } else if (dcost > 0.0) {
      relgap = info.gap / dcost;
    }
    if (info.pres < ftol && info.dres < ftol && (info.gap < atol || relgap < rtol)) {
      return Verdict::optimal;
    }
    const double hzby = sf.b.dot(y) + sf.h.dot(z);
    if (hzby < 0.0 && tau < kappa) {
      const Vec r = sf.A.transpose() * y + sf.G.transpose() * z;
      if (safe_norm(r) / -hzby < ftol) return Verdict::infeasible;
    }
    const double cx = sf.c.dot(x);
    if (cx < 0.0 && tau < kappa) {
      const double r = std::max(safe_norm(sf.A * x) / nb, safe_norm(sf.G * x + s) / nh);
      if (r / -cx < ftol) return Verdict::unbounded;
    }
    return Verdict::none;
  };

  auto finish = [&](Verdict v, IpmInfo info) {
    IpmResult out;
    out.info = info;
    switch (v) {
      case Verdict::optimal: {
        out.status = SolveStatus::optimal;
        const Vec xs = x / tau;
        out.x = eq.col.cwiseProduct(xs) / eq.sb;
        out.objective = original.c.dot(out.x) + original.c0;
        const double dcost = -(sf.b.dot(y) + sf.h.dot(z)) / tau;
        out.dual_objective = dcost / (eq.sc * eq.sb) + original.c0;
        break;
      }
      case Verdict::infeasible: out.status = SolveStatus::infeasible; break;
      case Verdict::unbounded: out.status = SolveStatus::unbounded; break;
      case Verdict::none: break;
    }
    return out;
  };

  IpmInfo info;
  bool broke = false;
  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    info.iterations = iter;
    if (const Verdict v = judge(opt.feastol, opt.abstol, opt.reltol, info); v != Verdict::none) {
      return finish(v, info);
    }
    if (iter == opt.max_iterations) break;

    const Vec rx = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    const Vec ry = -(sf.A * x) + sf.b * tau;
    const Vec rz = s + sf.G * x - sf.h * tau;
    const double rt = kappa + sf.c.dot(x) + sf.b.dot(y) + sf.h.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / (degree + 1.0);

    W.compute(K, off, s, z);
    if (!kkt.factor(W)) {
      broke = true;
      break;
    }
    rhs.head(n) = -sf.c;
    rhs.segment(n, p) = sf.b;
    rhs.tail(m) = sf.h;
    const Vec sol1 = kkt.solve(rhs);
    const Vec x1 = sol1.head(n);
    const Vec y1 = sol1.segment(n, p);
    const Vec z1 = sol1.tail(m);
    const double denom = sf.c.dot(x1) + sf.b.dot(y1) + sf.h.dot(z1) - kappa / tau;

    struct Dir {
      Vec dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double sigma, const Vec& ds_target, double dk) {
      const Vec u = jordan_div(K, off, W.lambda, ds_target);
      const Vec Wu = W.apply(K, off, u);
      Vec r(N);
      r.head(n) = -(1.0 - sigma) * rx;
      r.segment(n, p) = (1.0 - sigma) * ry;
      r.tail(m) = -(1.0 - sigma) * rz + Wu;
      const Vec sol2 = kkt.solve(r);
      Dir d;
      const Vec x2 = sol2.head(n);
      const Vec y2 = sol2.segment(n, p);
      const Vec z2 = sol2.tail(m);
      d.dtau = (-(1.0 - sigma) * rt + dk / tau - sf.c.dot(x2) - sf.b.dot(y2) - sf.h.dot(z2)) /
               denom;
      d.dx = x2 + d.dtau * x1;
      d.dy = y2 + d.dtau * y1;
      d.dz = z2 + d.dtau * z1;
      d.ds = -W.apply(K, off, u + W.apply(K, off, d.dz));
      d.dkappa = (-dk - kappa * d.dtau) / tau;
      return d;
    };
    auto step_of = [&](const Dir& d) {
      double a = std::min(max_step(K, off, s, d.ds), max_step(K, off, z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Vec ll = jordan(K, off, W.lambda, W.lambda);
    const Dir aff = direction(0.0, ll, tau * kappa);
    const double a_aff = std::min(1.0, step_of(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

    Vec ds_c = ll + jordan(K, off, W.apply_inv(K, off, aff.ds), W.apply(K, off, aff.dz));
    for (int i = 0; i < K.lp; ++i) ds_c[i] -= sigma * mu;
    for (std::size_t b = 0; b < K.soc.size(); ++b) ds_c[off[b]] -= sigma * mu;
    const double dk_c = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
    const Dir d = direction(sigma, ds_c, dk_c);
    const double alpha = std::min(1.0, opt.step_fraction * step_of(d));
    if (!std::isfinite(alpha) || alpha < 1e-10) {
      broke = true;
      break;
    }
    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    if (!x.allFinite() || !z.allFinite() || !s.allFinite() || !std::isfinite(tau)) {
      broke = true;
      break;
    }
  }

  info.reduced_accuracy = true;
  if (const Verdict v = judge(opt.feastol_inacc, opt.abstol_inacc, opt.reltol_inacc, info);
      v != Verdict::none && x.allFinite()) {
    return finish(v, info);
  }
  IpmResult out;
  out.info = info;
  out.status = broke ? SolveStatus::numerical_error : SolveStatus::limit;
  return out;
}

// Solves the continuous relaxation of a program under the given bounds. On a
// numerical failure the solve is retried once with heavier regularization.
inline conic::SolutionPoint solve_relaxation(const conic::Program& prog, const Bounds& bounds,
                                             const IpmOptions& opt = {},
                                             IpmInfo* info_out = nullptr) {
  conic::SolutionPoint pt;
  const StandardForm sf = lower(prog, bounds);
  IpmResult r = solve_conic(sf, opt);
  if (r.status == SolveStatus::numerical_error || r.status == SolveStatus::limit) {
    IpmOptions retry = opt;
    retry.static_reg = std::max(opt.static_reg * 1e3, 1e-7);
    retry.refinement_steps = opt.refinement_steps + 4;
    retry.max_iterations = opt.max_iterations + 50;
    r = solve_conic(sf, retry);
  }
  if (r.status == SolveStatus::optimal && opt.polish_tol > 0.0) {
    // Points that miss the acceptance tolerance are re-solved more tightly.
    const auto rep = conic::check_point(prog, expand(sf, r.x));
    if (std::max({rep.bound, rep.row, rep.cone}) > opt.polish_tol) {
      IpmOptions tight = opt;
      tight.feastol = tight.abstol = tight.reltol = opt.feastol * 1e-3;
      tight.max_iterations = opt.max_iterations + 50;
      IpmResult t = solve_conic(sf, tight);
      if (t.status == SolveStatus::optimal) {
        t.info.iterations += r.info.iterations;
        r = std::move(t);
      }
    }
  }
  if (info_out) *info_out = r.info;
  pt.status = r.status;
  if (r.status == SolveStatus::optimal) {
    pt.values = expand(sf, r.x);
    pt.objective = prog.objective().evaluate(pt.values);
    pt.bound = std::min(r.dual_objective, pt.objective);
  }
  return pt;
}

inline conic::SolutionPoint solve_relaxation(const conic::Program& prog,
                                             const IpmOptions& opt = {}) {
  return solve_relaxation(prog, Bounds::of(prog), opt);
}

}  // namespace mgsched::solver
