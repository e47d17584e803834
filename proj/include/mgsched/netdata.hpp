#pragma once

// Microgrid case and scenario data: types, JSON/CSV ingestion, validation.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mgsched::netdata {

enum class DataErrorKind { parse, reference, bound, probability, length };

inline const char* to_string(DataErrorKind k) {
  switch (k) {
    case DataErrorKind::parse: return "parse";
    case DataErrorKind::reference: return "reference";
    case DataErrorKind::bound: return "bound";
    case DataErrorKind::probability: return "probability";
    case DataErrorKind::length: return "length";
  }
  return "unknown";
}

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}
  [[nodiscard]] DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

inline constexpr const char* kCaseSchema = "mgsched-case/1";

struct Bus {
  int id = 0;
  double v_min = 0.95;  // p.u.
  double v_max = 1.05;
  double g_sh = 0.0;    // shunt conductance, p.u.
  double b_sh = 0.0;    // shunt susceptance, p.u.
  bool operator==(const Bus&) const = default;
};

struct Branch {
  std::string id;
  int from = 0;
  int to = 0;
  double r = 0.0;         // series resistance, p.u.
  double x = 0.0;         // series reactance, p.u.
  double b_charge = 0.0;  // total line charging, p.u. (half at each end)
  double s_max = 0.0;     // MVA
  bool operator==(const Branch&) const = default;

  // Series admittance y = 1 / (r + jx).
  [[nodiscard]] double g() const { return r / (r * r + x * x); }
  [[nodiscard]] double b() const { return -x / (r * r + x * x); }
};

enum class GenClass { fast, slow };

struct Generator {
  std::string id;
  int bus = 0;
  GenClass cls = GenClass::slow;
  double p_min = 0.0;  // MW
  double p_max = 0.0;
  double q_min = 0.0;  // MVAr
  double q_max = 0.0;
  double h = 0.0;        // inertia time constant, s
  double pfr_max = 0.0;  // MW deliverable by T_d
  double c_su = 0.0;     // start-up cost
  double c_r1 = 0.0;     // fast units: cost per committed hour
  double c_r2 = 0.0;     // slow units: cost per MWh
  int min_up = 1;        // h
  int min_down = 1;
  bool initial_on = false;
  bool operator==(const Generator&) const = default;
};

struct Storage {
  std::string id;
  int bus = 0;
  double p_ch = 0.0;   // MW, <= 0
  double p_dch = 0.0;  // MW, >= 0
  double e_cap = 0.0;  // MWh
  double eta = 1.0;
  double soc_min = 0.0;
  double soc_max = 1.0;
  double soc_init = 0.5;
  double t_s = 0.0;  // s, constant-power window after the nadir
  bool operator==(const Storage&) const = default;
};

struct Wind {
  std::string id;
  int bus = 0;
  double capacity = 0.0;  // MW
  double gamma = 0.0;     // MW/Hz per (MWs/Hz)^2
  double h_max = 0.0;     // default SI cap, MWs/Hz
  bool operator==(const Wind&) const = default;
};

struct Pv {
  std::string id;
  int bus = 0;
  double capacity = 0.0;
  std::string storage;  // optional attached storage id
  bool operator==(const Pv&) const = default;
};

struct Load {
  std::string id;
  int bus = 0;
  double rho = 0.3;   // noncritical share
  double voll = 0.0;  // value of lost load
  bool operator==(const Load&) const = default;
};

struct Pcc {
  int bus = 0;
  double s_max = 0.0;  // MVA
  double p_min = 0.0;  // MW, contracted minimum import
  bool operator==(const Pcc&) const = default;
};

enum class DampingRule { fraction_of_demand, constant };

struct FrequencyLimits {
  double df_lim = 0.8;     // Hz
  double df_ss_lim = 0.5;  // Hz
  double rocof_lim = 0.5;  // Hz/s
  double f0 = 50.0;        // Hz
  double t_d = 10.0;       // s
  DampingRule damping_rule = DampingRule::fraction_of_demand;
  double damping_value = 0.005;  // 1/Hz fraction or MW/Hz constant
  bool operator==(const FrequencyLimits&) const = default;

  [[nodiscard]] double d0(double demand_mw) const {
    return damping_rule == DampingRule::constant ? damping_value : damping_value * demand_mw;
  }
};

struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Storage> storage;
  std::vector<Wind> wind;
  std::vector<Pv> pv;
  std::vector<Load> loads;
  Pcc pcc;
  FrequencyLimits frequency;
  std::optional<std::pair<double, double>> demand_range;  // MW, total per period
  bool operator==(const NetworkCase&) const = default;

  [[nodiscard]] std::optional<std::size_t> bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
      if (buses[i].id == id) return i;
    }
    return std::nullopt;
  }
};

struct Diagnostic {
  std::string entity;
  std::string rule;
  bool operator==(const Diagnostic&) const = default;
};

inline std::vector<Diagnostic> validate_case(const NetworkCase& c) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string entity, std::string rule) {
    out.push_back({std::move(entity), std::move(rule)});
  };
  auto has_bus = [&](int id) { return c.bus_index(id).has_value(); };
  std::map<int, int> seen_bus;
  for (const auto& b : c.buses) {
    const std::string e = "bus " + std::to_string(b.id);
    if (++seen_bus[b.id] > 1) add(e, "duplicate bus id");
    if (!(b.v_min > 0.0 && b.v_min < b.v_max)) add(e, "requires 0 < v_min < v_max");
  }
  for (const auto& br : c.branches) {
    const std::string e = "branch " + br.id;
    if (!has_bus(br.from) || !has_bus(br.to)) add(e, "endpoint bus does not exist");
    if (br.from == br.to) add(e, "endpoints must differ");
    if (!(br.s_max > 0.0)) add(e, "requires s_max > 0");
    if (br.r * br.r + br.x * br.x <= 0.0) add(e, "requires nonzero series impedance");
  }
  for (const auto& g : c.generators) {
    const std::string e = "generator " + g.id;
    if (!has_bus(g.bus)) add(e, "bus does not exist");
    if (g.p_min > g.p_max || g.p_min < 0.0) add(e, "requires 0 <= p_min <= p_max");
    if (g.q_min > g.q_max) add(e, "requires q_min <= q_max");
    if (g.h < 0.0) add(e, "requires h >= 0");
    if (g.pfr_max < 0.0) add(e, "requires pfr_max >= 0");
    if (g.c_su < 0.0 || g.c_r1 < 0.0 || g.c_r2 < 0.0) add(e, "costs must be nonnegative");
    if (g.min_up < 1 || g.min_down < 1) add(e, "minimum up/down times must be >= 1");
  }
  for (const auto& s : c.storage) {
    const std::string e = "storage " + s.id;
    if (!has_bus(s.bus)) add(e, "bus does not exist");
    if (!(s.p_ch <= 0.0 && 0.0 <= s.p_dch)) add(e, "requires p_ch <= 0 <= p_dch");
    if (!(s.soc_min < s.soc_max) || s.soc_min < 0.0 || s.soc_max > 1.0) {
      add(e, "requires 0 <= soc_min < soc_max <= 1");
    } else if (s.soc_init < s.soc_min || s.soc_init > s.soc_max) {
      add(e, "soc_init outside [soc_min, soc_max]");
    }
    if (!(s.eta > 0.0 && s.eta <= 1.0)) add(e, "requires 0 < eta <= 1");
    if (!(s.e_cap > 0.0)) add(e, "requires e_cap > 0");
    if (s.t_s < 0.0) add(e, "requires t_s >= 0");
  }
  for (const auto& w : c.wind) {
    const std::string e = "wind " + w.id;
    if (!has_bus(w.bus)) add(e, "bus does not exist");
    if (w.gamma < 0.0) add(e, "requires gamma >= 0");
    if (w.h_max < 0.0) add(e, "requires h_max >= 0");
    if (w.capacity < 0.0) add(e, "requires capacity >= 0");
  }
  for (const auto& p : c.pv) {
    const std::string e = "pv " + p.id;
    if (!has_bus(p.bus)) add(e, "bus does not exist");
    if (p.capacity < 0.0) add(e, "requires capacity >= 0");
    if (!p.storage.empty() &&
        std::none_of(c.storage.begin(), c.storage.end(),
                     [&](const Storage& s) { return s.id == p.storage; })) {
      add(e, "attached storage does not exist");
    }
  }
  for (const auto& l : c.loads) {
    const std::string e = "load " + l.id;
    if (!has_bus(l.bus)) add(e, "bus does not exist");
    if (l.rho < 0.0 || l.rho > 1.0) add(e, "requires 0 <= rho <= 1");
    if (l.voll < 0.0) add(e, "requires voll >= 0");
  }
  if (!has_bus(c.pcc.bus)) add("pcc", "bus does not exist");
  if (c.pcc.s_max < 0.0) add("pcc", "requires s_max >= 0");
  if (c.pcc.p_min < 0.0 || c.pcc.p_min > c.pcc.s_max) add("pcc", "requires 0 <= p_min <= s_max");
  const auto& f = c.frequency;
  if (!(f.df_lim > 0.0 && f.df_ss_lim > 0.0 && f.rocof_lim > 0.0 && f.f0 > 0.0 && f.t_d > 0.0 &&
        f.damping_value > 0.0)) {
    add("frequency", "all limits must be strictly positive");
  }
  if (f.df_ss_lim > f.df_lim) add("frequency", "requires df_ss_lim <= df_lim");
  if (!(c.base_mva > 0.0)) add("case", "requires base_mva > 0");

  std::map<std::string, int> ids;
  auto count_ids = [&](const auto& v, const char* kind) {
    for (const auto& u : v) {
      if (++ids[u.id] > 1) add(std::string(kind) + " " + u.id, "duplicate id");
    }
  };
  count_ids(c.branches, "branch");
  count_ids(c.generators, "generator");
  count_ids(c.storage, "storage");
  count_ids(c.wind, "wind");
  count_ids(c.pv, "pv");
  count_ids(c.loads, "load");
  return out;
}

// ---------------------------------------------------------------------------
// JSON case documents

namespace detail {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) {
    throw DataError(DataErrorKind::parse, where + ": missing field '" + key + "'");
  }
  return j.at(key).get<T>();
}

}  // namespace detail

// Decodes the document without checking invariants.
inline NetworkCase decode_case(const nlohmann::json& j) {
  using detail::get_or;
  using detail::require;
  NetworkCase c;
  try {
    const auto schema = get_or<std::string>(j, "schema", "");
    if (schema != kCaseSchema) {
      throw DataError(DataErrorKind::parse,
                      "unsupported schema '" + schema + "', expected '" + kCaseSchema + "'");
    }
    c.name = get_or<std::string>(j, "name", "");
    c.base_mva = get_or(j, "base_mva", 100.0);
    for (const auto& b : j.value("buses", nlohmann::json::array())) {
      Bus bus;
      bus.id = require<int>(b, "id", "bus");
      bus.v_min = get_or(b, "v_min", bus.v_min);
      bus.v_max = get_or(b, "v_max", bus.v_max);
      bus.g_sh = get_or(b, "g_sh", 0.0);
      bus.b_sh = get_or(b, "b_sh", 0.0);
      c.buses.push_back(bus);
    }
    for (const auto& b : j.value("branches", nlohmann::json::array())) {
      Branch br;
      br.from = require<int>(b, "from", "branch");
      br.to = require<int>(b, "to", "branch");
      br.id = get_or<std::string>(b, "id", std::to_string(br.from) + "-" + std::to_string(br.to));
      br.r = get_or(b, "r", 0.0);
      br.x = get_or(b, "x", 0.0);
      br.b_charge = get_or(b, "b", 0.0);
      br.s_max = require<double>(b, "s_max", "branch " + br.id);
      c.branches.push_back(br);
    }
    for (const auto& g : j.value("generators", nlohmann::json::array())) {
      Generator gen;
      gen.id = require<std::string>(g, "id", "generator");
      const std::string w = "generator " + gen.id;
      gen.bus = require<int>(g, "bus", w);
      const auto cls = get_or<std::string>(g, "class", "slow");
      if (cls != "fast" && cls != "slow") {
        throw DataError(DataErrorKind::parse, w + ": class must be 'fast' or 'slow'");
      }
      gen.cls = cls == "fast" ? GenClass::fast : GenClass::slow;
      gen.p_min = get_or(g, "p_min", 0.0);
      gen.p_max = require<double>(g, "p_max", w);
      gen.q_min = get_or(g, "q_min", 0.0);
      gen.q_max = get_or(g, "q_max", 0.0);
      gen.h = get_or(g, "h", 0.0);
      gen.pfr_max = get_or(g, "pfr_max", 0.0);
      gen.c_su = get_or(g, "c_su", 0.0);
      gen.c_r1 = get_or(g, "c_r1", 0.0);
      gen.c_r2 = get_or(g, "c_r2", 0.0);
      gen.min_up = get_or(g, "min_up", 1);
      gen.min_down = get_or(g, "min_down", 1);
      gen.initial_on = get_or(g, "initial_on", false);
      c.generators.push_back(gen);
    }
    for (const auto& s : j.value("storage", nlohmann::json::array())) {
      Storage st;
      st.id = require<std::string>(s, "id", "storage");
      const std::string w = "storage " + st.id;
      st.bus = require<int>(s, "bus", w);
      st.p_ch = require<double>(s, "p_ch", w);
      st.p_dch = require<double>(s, "p_dch", w);
      st.e_cap = require<double>(s, "e_cap", w);
      st.eta = get_or(s, "eta", 1.0);
      st.soc_min = get_or(s, "soc_min", 0.0);
      st.soc_max = get_or(s, "soc_max", 1.0);
      st.soc_init = get_or(s, "soc_init", 0.5 * (st.soc_min + st.soc_max));
      st.t_s = get_or(s, "t_s", 0.0);
      c.storage.push_back(st);
    }
    for (const auto& s : j.value("wind", nlohmann::json::array())) {
      Wind w;
      w.id = require<std::string>(s, "id", "wind");
      w.bus = require<int>(s, "bus", "wind " + w.id);
      w.capacity = get_or(s, "capacity", 0.0);
      w.gamma = get_or(s, "gamma", 0.0);
      w.h_max = get_or(s, "h_max", 0.0);
      c.wind.push_back(w);
    }
    for (const auto& s : j.value("pv", nlohmann::json::array())) {
      Pv p;
      p.id = require<std::string>(s, "id", "pv");
      p.bus = require<int>(s, "bus", "pv " + p.id);
      p.capacity = get_or(s, "capacity", 0.0);
      p.storage = get_or<std::string>(s, "storage", "");
      c.pv.push_back(p);
    }
    for (const auto& s : j.value("loads", nlohmann::json::array())) {
      Load l;
      l.id = require<std::string>(s, "id", "load");
      l.bus = require<int>(s, "bus", "load " + l.id);
      l.rho = get_or(s, "rho", 0.3);
      l.voll = get_or(s, "voll", 0.0);
      c.loads.push_back(l);
    }
    const auto& pcc = detail::require<nlohmann::json>(j, "pcc", "case");
    c.pcc.bus = require<int>(pcc, "bus", "pcc");
    c.pcc.s_max = require<double>(pcc, "s_max", "pcc");
    c.pcc.p_min = get_or(pcc, "p_min", 0.0);
    if (j.contains("frequency")) {
      const auto& f = j.at("frequency");
      auto& fl = c.frequency;
      fl.df_lim = get_or(f, "df_lim", fl.df_lim);
      fl.df_ss_lim = get_or(f, "df_ss_lim", fl.df_ss_lim);
      fl.rocof_lim = get_or(f, "rocof_lim", fl.rocof_lim);
      fl.f0 = get_or(f, "f0", fl.f0);
      fl.t_d = get_or(f, "t_d", fl.t_d);
      if (f.contains("damping")) {
        const auto& d = f.at("damping");
        const auto rule = get_or<std::string>(d, "rule", "fraction");
        if (rule != "fraction" && rule != "constant") {
          throw DataError(DataErrorKind::parse, "frequency.damping.rule must be 'fraction' or 'constant'");
        }
        fl.damping_rule = rule == "constant" ? DampingRule::constant : DampingRule::fraction_of_demand;
        fl.damping_value = get_or(d, "value", fl.damping_value);
      }
    }
    if (j.contains("demand_range_mw")) {
      const auto r = j.at("demand_range_mw").get<std::vector<double>>();
      if (r.size() != 2) throw DataError(DataErrorKind::parse, "demand_range_mw needs two values");
      c.demand_range = std::make_pair(r[0], r[1]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::parse, e.what());
  }
  return c;
}

inline NetworkCase case_from_json(const nlohmann::json& j) {
  NetworkCase c = decode_case(j);
  const auto diags = validate_case(c);
  for (const auto& d : diags) {
    if (d.rule.find("does not exist") != std::string::npos) {
      throw DataError(DataErrorKind::reference, d.entity + ": " + d.rule);
    }
  }
  if (!diags.empty()) {
    throw DataError(DataErrorKind::bound, diags.front().entity + ": " + diags.front().rule);
  }
  return c;
}

inline nlohmann::json case_to_json(const NetworkCase& c) {
  using nlohmann::json;
  json j;
  j["schema"] = kCaseSchema;
  j["name"] = c.name;
  j["base_mva"] = c.base_mva;
  j["buses"] = json::array();
  for (const auto& b : c.buses) {
    j["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max},
                          {"g_sh", b.g_sh}, {"b_sh", b.b_sh}});
  }
  j["branches"] = json::array();
  for (const auto& b : c.branches) {
    j["branches"].push_back({{"id", b.id}, {"from", b.from}, {"to", b.to}, {"r", b.r},
                             {"x", b.x}, {"b", b.b_charge}, {"s_max", b.s_max}});
  }
  j["generators"] = json::array();
  for (const auto& g : c.generators) {
    j["generators"].push_back({{"id", g.id}, {"bus", g.bus},
                               {"class", g.cls == GenClass::fast ? "fast" : "slow"},
                               {"p_min", g.p_min}, {"p_max", g.p_max}, {"q_min", g.q_min},
                               {"q_max", g.q_max}, {"h", g.h}, {"pfr_max", g.pfr_max},
                               {"c_su", g.c_su}, {"c_r1", g.c_r1}, {"c_r2", g.c_r2},
                               {"min_up", g.min_up}, {"min_down", g.min_down},
                               {"initial_on", g.initial_on}});
  }
  j["storage"] = json::array();
  for (const auto& s : c.storage) {
    j["storage"].push_back({{"id", s.id}, {"bus", s.bus}, {"p_ch", s.p_ch}, {"p_dch", s.p_dch},
                            {"e_cap", s.e_cap}, {"eta", s.eta}, {"soc_min", s.soc_min},
                            {"soc_max", s.soc_max}, {"soc_init", s.soc_init}, {"t_s", s.t_s}});
  }
  j["wind"] = json::array();
  for (const auto& w : c.wind) {
    j["wind"].push_back({{"id", w.id}, {"bus", w.bus}, {"capacity", w.capacity},
                         {"gamma", w.gamma}, {"h_max", w.h_max}});
  }
  j["pv"] = json::array();
  for (const auto& p : c.pv) {
    json e = {{"id", p.id}, {"bus", p.bus}, {"capacity", p.capacity}};
    if (!p.storage.empty()) e["storage"] = p.storage;
    j["pv"].push_back(e);
  }
  j["loads"] = json::array();
  for (const auto& l : c.loads) {
    j["loads"].push_back({{"id", l.id}, {"bus", l.bus}, {"rho", l.rho}, {"voll", l.voll}});
  }
  j["pcc"] = {{"bus", c.pcc.bus}, {"s_max", c.pcc.s_max}};
  if (c.pcc.p_min > 0.0) j["pcc"]["p_min"] = c.pcc.p_min;
  const auto& f = c.frequency;
  j["frequency"] = {{"df_lim", f.df_lim},
                    {"df_ss_lim", f.df_ss_lim},
                    {"rocof_lim", f.rocof_lim},
                    {"f0", f.f0},
                    {"t_d", f.t_d},
                    {"damping",
                     {{"rule", f.damping_rule == DampingRule::constant ? "constant" : "fraction"},
                      {"value", f.damping_value}}}};
  if (c.demand_range) j["demand_range_mw"] = {c.demand_range->first, c.demand_range->second};
  return j;
}

inline std::string serialize(const NetworkCase& c) { return case_to_json(c).dump(2) + "\n"; }

inline NetworkCase parse_case(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::parse, e.what());
  }
  return case_from_json(j);
}

// Parses a case document and returns it with its diagnostics instead of throwing on them.
inline std::pair<NetworkCase, std::vector<Diagnostic>> parse_case_unchecked(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataErrorKind::parse, e.what());
  }
  NetworkCase c = decode_case(j);
  auto diags = validate_case(c);
  return {std::move(c), std::move(diags)};
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::parse, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline NetworkCase load_case(const std::string& path) { return parse_case(read_file(path)); }

// ---------------------------------------------------------------------------
// Scenarios

struct ScenarioSet {
  int periods = 0;
  double dt_h = 1.0;
  std::vector<std::string> names;   // per scenario
  std::vector<double> probability;  // per scenario
  // [s][t][unit] indexed like the case's unit vectors.
  std::vector<std::vector<std::vector<double>>> load_p, load_q, wind_mw, pv_mw, si_max;

  [[nodiscard]] int scenarios() const { return static_cast<int>(names.size()); }

  [[nodiscard]] double total_demand(int s, int t) const {
    double sum = 0.0;
    for (double v : load_p[s][t]) sum += v;
    return sum;
  }
  bool operator==(const ScenarioSet&) const = default;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

// CSV with header `scenario,period,entity,kind,value`. Kinds:
//   probability   (period and entity ignored)
//   dt_h          (scenario, period and entity ignored)
//   p_mw, q_mvar  (entity = load id)
//   wind_mw       (entity = wind id; also si_max)
//   pv_mw         (entity = pv id)
// Periods are numbered from 1. Values not given default to zero, except
// si_max which defaults to the case's h_max for the unit.
inline ScenarioSet parse_scenarios(const std::string& text, const NetworkCase& c) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](DataErrorKind k, const std::string& what) {
    return DataError(k, "scenarios line " + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line)) throw DataError(DataErrorKind::parse, "empty scenario file");
  ++lineno;
  const auto header = detail::split_csv(line);
  if (header != std::vector<std::string>{"scenario", "period", "entity", "kind", "value"}) {
    throw fail(DataErrorKind::parse, "header must be 'scenario,period,entity,kind,value'");
  }
  struct Rec {
    std::string scenario;
    int period;
    std::string entity;
    std::string kind;
    double value;
  };
  std::vector<Rec> recs;
  std::vector<std::string> order;
  std::map<std::string, double> prob;
  std::optional<double> dt;
  int max_period = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 5) throw fail(DataErrorKind::parse, "expected 5 fields");
    Rec r;
    r.scenario = cells[0];
    r.entity = cells[2];
    r.kind = cells[3];
    try {
      r.period = cells[1].empty() || cells[1] == "-" ? 0 : std::stoi(cells[1]);
      r.value = std::stod(cells[4]);
    } catch (const std::exception&) {
      throw fail(DataErrorKind::parse, "bad number");
    }
    if (!std::isfinite(r.value)) throw fail(DataErrorKind::parse, "non-finite value");
    if (r.kind == "dt_h") {
      if (!(r.value > 0.0)) throw fail(DataErrorKind::bound, "dt_h must be positive");
      dt = r.value;
      continue;
    }
    if (std::find(order.begin(), order.end(), r.scenario) == order.end()) order.push_back(r.scenario);
    if (r.kind == "probability") {
      if (r.value < 0.0) throw fail(DataErrorKind::probability, "negative probability");
      prob[r.scenario] = r.value;
      continue;
    }
    if (r.period < 1) throw fail(DataErrorKind::parse, "period must be >= 1");
    if (r.value < 0.0 && r.kind != "q_mvar") {
      throw fail(DataErrorKind::bound, "availability and demand must be nonnegative");
    }
    max_period = std::max(max_period, r.period);
    recs.push_back(r);
  }

  ScenarioSet set;
  set.periods = max_period;
  set.dt_h = dt.value_or(1.0);
  set.names = order;
  double psum = 0.0;
  for (const auto& name : order) {
    if (!prob.contains(name)) {
      throw DataError(DataErrorKind::probability, "scenario '" + name + "' has no probability");
    }
    set.probability.push_back(prob[name]);
    psum += prob[name];
  }
  if (!order.empty() && std::abs(psum - 1.0) > 1e-9) {
    throw DataError(DataErrorKind::probability,
                    "scenario probabilities sum to " + std::to_string(psum) + ", expected 1");
  }
  const std::size_t S = order.size();
  const auto T = static_cast<std::size_t>(max_period);
  auto grid = [&](std::size_t n, double v = 0.0) {
    return std::vector<std::vector<std::vector<double>>>(
        S, std::vector<std::vector<double>>(T, std::vector<double>(n, v)));
  };
  set.load_p = grid(c.loads.size());
  set.load_q = grid(c.loads.size());
  set.wind_mw = grid(c.wind.size());
  set.pv_mw = grid(c.pv.size());
  set.si_max = grid(c.wind.size());
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t w = 0; w < c.wind.size(); ++w) set.si_max[s][t][w] = c.wind[w].h_max;
    }
  }
  // Coverage: each (scenario, period, entity, kind) at most once; loads need p_mw everywhere.
  std::map<std::tuple<std::string, int, std::string, std::string>, int> seen;
  auto index_of = [&](const auto& units, const std::string& id) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (units[i].id == id) return i;
    }
    return std::nullopt;
  };
  for (const auto& r : recs) {
    if (++seen[{r.scenario, r.period, r.entity, r.kind}] > 1) {
      throw DataError(DataErrorKind::parse, "duplicate entry for scenario '" + r.scenario +
                                                "' period " + std::to_string(r.period) + " " +
                                                r.entity + " " + r.kind);
    }
    const std::size_t s = static_cast<std::size_t>(
        std::find(order.begin(), order.end(), r.scenario) - order.begin());
    const std::size_t t = static_cast<std::size_t>(r.period - 1);
    auto ref_error = [&] {
      return DataError(DataErrorKind::reference,
                       "unknown " + r.kind + " entity '" + r.entity + "' in scenarios");
    };
    if (r.kind == "p_mw" || r.kind == "q_mvar") {
      const auto i = index_of(c.loads, r.entity);
      if (!i) throw ref_error();
      (r.kind == "p_mw" ? set.load_p : set.load_q)[s][t][*i] = r.value;
    } else if (r.kind == "wind_mw" || r.kind == "si_max") {
      const auto i = index_of(c.wind, r.entity);
      if (!i) throw ref_error();
      (r.kind == "wind_mw" ? set.wind_mw : set.si_max)[s][t][*i] = r.value;
    } else if (r.kind == "pv_mw") {
      const auto i = index_of(c.pv, r.entity);
      if (!i) throw ref_error();
      set.pv_mw[s][t][*i] = r.value;
    } else {
      throw DataError(DataErrorKind::parse, "unknown kind '" + r.kind + "'");
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (const auto& l : c.loads) {
      for (std::size_t t = 0; t < T; ++t) {
        if (!seen.contains({order[s], static_cast<int>(t + 1), l.id, "p_mw"})) {
          throw DataError(DataErrorKind::length, "scenario '" + order[s] + "' load " + l.id +
                                                     " has no p_mw for period " +
                                                     std::to_string(t + 1));
        }
      }
    }
  }
  if (c.demand_range) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t t = 0; t < T; ++t) {
        const double d = set.total_demand(static_cast<int>(s), static_cast<int>(t));
        if (d < c.demand_range->first - 1e-9 || d > c.demand_range->second + 1e-9) {
          throw DataError(DataErrorKind::bound,
                          "total demand " + std::to_string(d) + " MW in scenario '" + order[s] +
                              "' period " + std::to_string(t + 1) + " outside declared range");
        }
      }
    }
  }
  return set;
}

inline ScenarioSet load_scenarios(const std::string& path, const NetworkCase& c) {
  return parse_scenarios(read_file(path), c);
}

// Keeps the first `periods` periods and the named subset of scenarios
// (probabilities renormalized). Empty `keep` keeps every scenario.
inline ScenarioSet restrict(const ScenarioSet& in, int periods, const std::vector<int>& keep = {}) {
  ScenarioSet out;
  out.periods = std::min(periods, in.periods);
  out.dt_h = in.dt_h;
  std::vector<int> idx = keep;
  if (idx.empty()) {
    for (int s = 0; s < in.scenarios(); ++s) idx.push_back(s);
  }
  double psum = 0.0;
  for (int s : idx) psum += in.probability.at(s);
  auto cut = [&](const auto& grid, int s) {
    return std::vector<std::vector<double>>(grid[s].begin(), grid[s].begin() + out.periods);
  };
  for (int s : idx) {
    out.names.push_back(in.names.at(s));
    out.probability.push_back(in.probability[s] / psum);
    out.load_p.push_back(cut(in.load_p, s));
    out.load_q.push_back(cut(in.load_q, s));
    out.wind_mw.push_back(cut(in.wind_mw, s));
    out.pv_mw.push_back(cut(in.pv_mw, s));
    out.si_max.push_back(cut(in.si_max, s));
  }
  return out;
}

}  // namespace mgsched::netdata
