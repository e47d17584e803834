#pragma once

// Post-islanding centre-of-inertia frequency response: closed-form metrics and
// a fixed-step RK4 integrator of the aggregate swing equation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched::freqdyn {

class FrequencyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct FrequencyScene {
  double h_c = 0.0;                // SG inertia, MWs/Hz
  std::vector<double> h_storage;   // per storage unit, MWs/Hz
  std::vector<double> h_wind;      // per wind unit, MWs/Hz
  std::vector<double> gamma;       // per wind unit, MW/Hz per (MWs/Hz)^2
  double d0 = 0.0;                 // MW/Hz
  double r = 0.0;                  // PFR delivered by t_d, MW
  double t_d = 10.0;               // s
  double dp_l = 0.0;               // disturbance, MW
  double dp_c = 0.0;               // post-nadir storage injection, MW
  double t_s = std::numeric_limits<double>::infinity();  // hold time of dp_c, s

  // Aggregate scene with no synthetic inertia.
  static FrequencyScene aggregate(double h, double d, double r, double t_d, double dp_l,
                                  double dp_c = 0.0) {
    FrequencyScene s;
    s.h_c = h;
    s.d0 = d;
    s.r = r;
    s.t_d = t_d;
    s.dp_l = dp_l;
    s.dp_c = dp_c;
    return s;
  }

  [[nodiscard]] double synthetic_inertia() const {
    return std::accumulate(h_storage.begin(), h_storage.end(), 0.0) +
           std::accumulate(h_wind.begin(), h_wind.end(), 0.0);
  }
  [[nodiscard]] double inertia() const { return h_c + synthetic_inertia(); }
  [[nodiscard]] double damping_reduction() const {
    double s = 0.0;
    for (std::size_t w = 0; w < h_wind.size(); ++w) {
      s += (w < gamma.size() ? gamma[w] : 0.0) * h_wind[w] * h_wind[w];
    }
    return s;
  }
  [[nodiscard]] double damping() const { return d0 - damping_reduction(); }
};

namespace detail {

inline void require_inertia(const FrequencyScene& s) {
  if (!(s.inertia() > 0.0)) throw FrequencyError("total inertia must be positive");
}

inline void require_damping(const FrequencyScene& s) {
  if (!(s.damping() > 0.0)) throw FrequencyError("net damping must be positive");
}

inline void require_pfr(const FrequencyScene& s) {
  if (!(s.r > 0.0)) throw FrequencyError("nadir needs a positive PFR magnitude");
  if (!(s.t_d > 0.0)) throw FrequencyError("PFR delivery time must be positive");
}

// log1p(x)/x - 1 without cancellation near zero.
inline double log1p_ratio_minus_one(double x) {
  if (std::abs(x) < 1e-4) return x * (-0.5 + x * (1.0 / 3.0 - 0.25 * x));
  return std::log1p(x) / x - 1.0;
}

}  // namespace detail

inline double rocof_max(const FrequencyScene& s) {
  detail::require_inertia(s);
  return -s.dp_l / (2.0 * s.inertia());
}

struct NadirTime {
  double t = 0.0;
  bool valid = true;  // false when t > t_d (closed form no longer applies)
};

inline NadirTime nadir_time(const FrequencyScene& s) {
  detail::require_inertia(s);
  detail::require_damping(s);
  if (s.dp_l <= 0.0) return {0.0, true};
  detail::require_pfr(s);
  const double h = s.inertia();
  const double d = s.damping();
  const double x = s.t_d * d * s.dp_l / (2.0 * h * s.r);
  const double t = 2.0 * h / d * std::log1p(x);
  return {t, t <= s.t_d};
}

inline double nadir(const FrequencyScene& s) {
  const auto tn = nadir_time(s);
  if (!tn.valid) {
    throw FrequencyError("nadir time " + std::to_string(tn.t) + " s exceeds the PFR delivery time");
  }
  if (s.dp_l <= 0.0) return 0.0;
  const double h = s.inertia();
  const double d = s.damping();
  const double x = s.t_d * d * s.dp_l / (2.0 * h * s.r);
  return s.dp_l / d * detail::log1p_ratio_minus_one(x);
}

inline double steady_state(const FrequencyScene& s) {
  detail::require_damping(s);
  return (s.r + s.dp_c - s.dp_l) / s.damping();
}

struct FrequencyTrace {
  std::vector<double> time;   // s
  std::vector<double> df;     // Hz
  std::vector<double> dfdt;   // Hz/s
  std::vector<double> p_pfr;  // MW
  std::vector<double> p_si;   // MW
  std::vector<double> p_mpe;  // MW
  std::vector<double> p_c;    // MW

  [[nodiscard]] std::size_t size() const { return time.size(); }

  void push(double t, double f, double fd, double pfr, double si, double mpe, double pc) {
    time.push_back(t);
    df.push_back(f);
    dfdt.push_back(fd);
    p_pfr.push_back(pfr);
    p_si.push_back(si);
    p_mpe.push_back(mpe);
    p_c.push_back(pc);
  }
};

inline double pfr_at(const FrequencyScene& s, double t) {
  if (s.dp_l <= 0.0) return 0.0;
  return t < s.t_d ? s.r * t / s.t_d : s.r;
}

inline FrequencyTrace analytic_trajectory(const FrequencyScene& s, const std::vector<double>& grid) {
  const auto tn = nadir_time(s);
  const double tol = 1e-12 * std::max(1.0, tn.t);
  FrequencyTrace tr;
  const double h = s.inertia();
  const double d = s.damping();
  const double h_si = s.synthetic_inertia();
  const double d_w = s.damping_reduction();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (t < 0.0 || t > tn.t + tol) {
      throw FrequencyError("time " + std::to_string(t) + " s outside [0, t_n]");
    }
    if (i > 0 && !(t > grid[i - 1])) throw FrequencyError("time grid must be strictly increasing");
    double f = 0.0;
    double fd = 0.0;
    if (s.dp_l > 0.0) {
      const double a = s.dp_l / d + 2.0 * h * s.r / (s.t_d * d * d);
      const double k = d / (2.0 * h);
      f = a * std::expm1(-k * t) + s.r * t / (s.t_d * d);
      fd = -a * k * std::exp(-k * t) + s.r / (s.t_d * d);
    }
    tr.push(t, f, fd, pfr_at(s, t), -2.0 * h_si * fd, d_w * f, 0.0);
  }
  return tr;
}

struct SwingSimulation {
  FrequencyTrace trace;
  double nadir = 0.0;       // minimum deviation, Hz
  double nadir_time = 0.0;  // s
  bool nadir_found = false; // sign change of dfdt observed
  double min_df = 0.0;      // minimum over the whole horizon, Hz
  double final_df = 0.0;
};

struct SimulateOptions {
  std::size_t record_every = 1;  // keep every n-th step in the trace
};

// Integrates 2H df' = -D df + dR(t) + dPc(t) - dPL with classical RK4. The
// storage injection steps on at the first step that detects the nadir and is
// held for t_s seconds.
inline SwingSimulation simulate_swing(const FrequencyScene& s, double dt, double horizon,
                                      const SimulateOptions& opt = {}) {
  detail::require_inertia(s);
  detail::require_damping(s);
  const double h = s.inertia();
  const double d = s.damping();
  if (!(dt > 0.0)) throw FrequencyError("time step must be positive");
  if (dt > h / d / 10.0) {
    throw FrequencyError("time step " + std::to_string(dt) + " s exceeds H/(10 D) = " +
                         std::to_string(h / d / 10.0) + " s");
  }
  if (!(horizon >= s.t_d)) throw FrequencyError("horizon must cover the PFR delivery time");
  const double h_si = s.synthetic_inertia();
  const double d_w = s.damping_reduction();
  const bool event = s.dp_l > 0.0;

  double pc_on = std::numeric_limits<double>::infinity();
  auto pc_at = [&](double t) {
    return (event && t >= pc_on && t < pc_on + s.t_s) ? s.dp_c : 0.0;
  };
  auto rhs = [&](double t, double f) {
    if (!event) return 0.0;
    return (-d * f + pfr_at(s, t) + pc_at(t) - s.dp_l) / (2.0 * h);
  };

  SwingSimulation out;
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  const std::size_t every = std::max<std::size_t>(1, opt.record_every);
  double f = 0.0;
  double fd = rhs(0.0, f);
  auto record = [&](double t) {
    out.trace.push(t, f, fd, pfr_at(s, t), -2.0 * h_si * fd, d_w * f, pc_at(t));
  };
  record(0.0);
  out.nadir = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double k1 = rhs(t, f);
    const double k2 = rhs(t + 0.5 * dt, f + 0.5 * dt * k1);
    const double k3 = rhs(t + 0.5 * dt, f + 0.5 * dt * k2);
    const double k4 = rhs(t + dt, f + dt * k3);
    const double f_prev = f;
    const double fd_prev = fd;
    f += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = t + dt;
    fd = rhs(t_next, f);
    if (!out.nadir_found && event && fd_prev < 0.0 && fd >= 0.0) {
      // Linear interpolation of the derivative zero; cubic Hermite for the value.
      const double theta = fd_prev / (fd_prev - fd);
      const double t2 = theta * theta;
      const double t3 = t2 * theta;
      const double value = (2 * t3 - 3 * t2 + 1) * f_prev + (t3 - 2 * t2 + theta) * dt * fd_prev +
                           (-2 * t3 + 3 * t2) * f + (t3 - t2) * dt * fd;
      out.nadir_found = true;
      out.nadir_time = t + theta * dt;
      out.nadir = std::min({value, f_prev, f});
      pc_on = t_next;
      fd = rhs(t_next, f);
    }
    if (!out.nadir_found && f < out.nadir) {
      out.nadir = f;
      out.nadir_time = t_next;
    }
    out.min_df = std::min({out.min_df, out.nadir, f});
    if ((k + 1) % every == 0 || k + 1 == steps) record(t_next);
  }
  out.final_df = f;
  return out;
}

inline void write_trace_csv(std::ostream& os, const FrequencyTrace& tr) {
  os << "time_s,df_hz,dfdt_hzps,p_pfr_mw,p_si_mw,p_mpe_mw,p_c_mw\n";
  char buf[256];
  for (std::size_t i = 0; i < tr.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", tr.time[i], tr.df[i] + 0.0,
                  tr.dfdt[i] + 0.0, tr.p_pfr[i] + 0.0, tr.p_si[i] + 0.0, tr.p_mpe[i] + 0.0, tr.p_c[i] + 0.0);
    os << buf;
  }
}

}  // namespace mgsched::freqdyn
