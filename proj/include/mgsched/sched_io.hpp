#pragma once

// Solution dump (JSON document plus CSV tables) and its reader.

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mgsched/sched.hpp"

namespace mgsched::sched {

inline constexpr const char* kSolutionSchema = "mgsched-solution/1";

namespace io_detail {

template <class T>
std::vector<std::string> ids(const std::vector<T>& units) {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.id);
  return out;
}

}  // namespace io_detail

inline nlohmann::json to_json(const ScheduleSolution& sol, const NetworkCase& c) {
  using nlohmann::json;
  json j;
  j["schema"] = kSolutionSchema;
  j["case"] = c.name;
  j["mode"] = sol.mode;
  j["status"] = sol.status;
  j["objective"] = sol.objective;
  j["bound"] = sol.bound;
  j["gap"] = sol.gap;
  j["cost"] = {{"start_up", sol.cost.start_up},
               {"fixed_running", sol.cost.fixed_running},
               {"flexible_running", sol.cost.flexible_running},
               {"shed_active", sol.cost.shed_active},
               {"shed_reactive", sol.cost.shed_reactive},
               {"total", sol.cost.total()}};
  j["periods"] = sol.periods;
  j["dt_h"] = sol.dt_h;
  j["scenarios"] = sol.scenario_names;
  j["probability"] = sol.probability;
  j["frequency_blocks"] = sol.frequency_blocks;
  j["eta"] = sol.eta;
  j["alpha"] = sol.alpha;
  j["units"] = {{"generators", io_detail::ids(c.generators)}, {"storage", io_detail::ids(c.storage)},
                {"wind", io_detail::ids(c.wind)},             {"pv", io_detail::ids(c.pv)},
                {"loads", io_detail::ids(c.loads)},           {"branches", io_detail::ids(c.branches)}};
  json rows = json::array();
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) {
      const auto& e = sol.at[t][s];
      rows.push_back({{"period", t + 1},
                      {"scenario", sol.scenario_names[s]},
                      {"demand", e.demand},
                      {"d0", e.d0},
                      {"import_p", e.import_p},
                      {"import_q", e.import_q},
                      {"inertia_sg", e.inertia_sg},
                      {"inertia", e.inertia},
                      {"pfr", e.pfr},
                      {"pfr_available", e.pfr_available},
                      {"shed_mu", e.shed_mu},
                      {"constant_power", e.constant_power},
                      {"x1", e.x1},
                      {"x2", e.x2},
                      {"segment", e.segment},
                      {"y", e.y},
                      {"z", e.z},
                      {"p", e.p},
                      {"q", e.q},
                      {"r", e.r},
                      {"p_b", e.p_b},
                      {"soc", e.soc},
                      {"h_b", e.h_b},
                      {"pc_b", e.pc_b},
                      {"p_w", e.p_w},
                      {"h_w", e.h_w},
                      {"p_m", e.p_m},
                      {"p_c", e.p_c},
                      {"q_c", e.q_c},
                      {"w_gap", e.w_gap}});
    }
  }
  j["entries"] = rows;
  return j;
}

inline ScheduleSolution solution_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kSolutionSchema) {
    throw SolutionError("solution document has schema '" + j.value("schema", std::string()) +
                        "', expected " + kSolutionSchema);
  }
  ScheduleSolution sol;
  try {
    sol.mode = j.at("mode").get<std::string>();
    sol.status = j.at("status").get<std::string>();
    sol.objective = j.at("objective").get<double>();
    sol.bound = j.at("bound").get<double>();
    sol.gap = j.at("gap").get<double>();
    const auto& cb = j.at("cost");
    sol.cost = {cb.at("start_up").get<double>(), cb.at("fixed_running").get<double>(),
                cb.at("flexible_running").get<double>(), cb.at("shed_active").get<double>(),
                cb.at("shed_reactive").get<double>()};
    sol.periods = j.at("periods").get<int>();
    sol.dt_h = j.at("dt_h").get<double>();
    sol.scenario_names = j.at("scenarios").get<std::vector<std::string>>();
    sol.scenarios = static_cast<int>(sol.scenario_names.size());
    sol.probability = j.at("probability").get<std::vector<double>>();
    sol.frequency_blocks = j.at("frequency_blocks").get<bool>();
    sol.eta = j.at("eta").get<double>();
    sol.alpha = j.at("alpha").get<double>();
    sol.at.assign(static_cast<std::size_t>(sol.periods),
                  std::vector<PeriodScenario>(static_cast<std::size_t>(sol.scenarios)));
    std::size_t seen = 0;
    for (const auto& r : j.at("entries")) {
      const int t = r.at("period").get<int>() - 1;
      const auto name = r.at("scenario").get<std::string>();
      const auto it = std::find(sol.scenario_names.begin(), sol.scenario_names.end(), name);
      if (t < 0 || t >= sol.periods || it == sol.scenario_names.end()) {
        throw SolutionError("solution entry outside the horizon or scenario list");
      }
      auto& e = sol.at[t][static_cast<std::size_t>(it - sol.scenario_names.begin())];
      e.demand = r.at("demand").get<double>();
      e.d0 = r.at("d0").get<double>();
      e.import_p = r.at("import_p").get<double>();
      e.import_q = r.at("import_q").get<double>();
      e.inertia_sg = r.at("inertia_sg").get<double>();
      e.inertia = r.at("inertia").get<double>();
      e.pfr = r.at("pfr").get<double>();
      e.pfr_available = r.at("pfr_available").get<double>();
      e.shed_mu = r.at("shed_mu").get<double>();
      e.constant_power = r.at("constant_power").get<double>();
      e.x1 = r.at("x1").get<double>();
      e.x2 = r.at("x2").get<double>();
      e.segment = r.at("segment").get<int>();
      e.y = r.at("y").get<std::vector<int>>();
      e.z = r.at("z").get<std::vector<int>>();
      e.p = r.at("p").get<std::vector<double>>();
      e.q = r.at("q").get<std::vector<double>>();
      e.r = r.at("r").get<std::vector<double>>();
      e.p_b = r.at("p_b").get<std::vector<double>>();
      e.soc = r.at("soc").get<std::vector<double>>();
      e.h_b = r.at("h_b").get<std::vector<double>>();
      e.pc_b = r.at("pc_b").get<std::vector<double>>();
      e.p_w = r.at("p_w").get<std::vector<double>>();
      e.h_w = r.at("h_w").get<std::vector<double>>();
      e.p_m = r.at("p_m").get<std::vector<double>>();
      e.p_c = r.at("p_c").get<std::vector<double>>();
      e.q_c = r.at("q_c").get<std::vector<double>>();
      e.w_gap = r.at("w_gap").get<std::vector<double>>();
      ++seen;
    }
    if (seen != static_cast<std::size_t>(sol.periods) * static_cast<std::size_t>(sol.scenarios)) {
      throw SolutionError("solution covers " + std::to_string(seen) + " of " +
                          std::to_string(sol.periods * sol.scenarios) + " (period, scenario) pairs");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SolutionError(std::string("malformed solution document: ") + e.what());
  }
  return sol;
}

inline ScheduleSolution load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SolutionError("cannot open solution file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SolutionError(std::string("solution file is not JSON: ") + e.what());
  }
  return solution_from_json(j);
}

// cost.csv: term,value
inline void write_cost_csv(std::ostream& os, const CostBreakdown& cb) {
  os << "term,value\n" << std::setprecision(12);
  os << "start_up," << cb.start_up << "\n";
  os << "fixed_running," << cb.fixed_running << "\n";
  os << "flexible_running," << cb.flexible_running << "\n";
  os << "shed_active," << cb.shed_active << "\n";
  os << "shed_reactive," << cb.shed_reactive << "\n";
  os << "total," << cb.total() << "\n";
}

// frequency.csv: one row per (period, scenario) with the frequency quantities.
inline void write_frequency_csv(std::ostream& os, const ScheduleSolution& sol) {
  os << "period,scenario,import_mw,shed_mu_mw,inertia_mws_hz,inertia_sg_mws_hz,pfr_mw,constant_power_mw,"
        "d0_mw_hz,x2,segment\n"
     << std::setprecision(10);
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) {
      const auto& e = sol.at[t][s];
      os << t + 1 << ',' << sol.scenario_names[s] << ',' << e.import_p << ',' << e.shed_mu << ','
         << e.inertia << ',' << e.inertia_sg << ',' << e.pfr << ',' << e.constant_power << ',' << e.d0
         << ',' << e.x2 << ',' << e.segment << '\n';
    }
  }
}

// generators.csv: one row per (period, scenario, generator).
inline void write_generator_csv(std::ostream& os, const ScheduleSolution& sol, const NetworkCase& c) {
  os << "period,scenario,generator,y,z,p_mw,q_mvar,r_mw\n" << std::setprecision(10);
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) {
      const auto& e = sol.at[t][s];
      for (std::size_t g = 0; g < c.generators.size(); ++g) {
        os << t + 1 << ',' << sol.scenario_names[s] << ',' << c.generators[g].id << ',' << e.y[g] << ','
           << e.z[g] << ',' << e.p[g] << ',' << e.q[g] << ',' << e.r[g] << '\n';
      }
    }
  }
}

// storage.csv: one row per (period, scenario, storage unit).
inline void write_storage_csv(std::ostream& os, const ScheduleSolution& sol, const NetworkCase& c) {
  os << "period,scenario,storage,p_mw,soc,h_mws_hz,pc_mw\n" << std::setprecision(10);
  for (int t = 0; t < sol.periods; ++t) {
    for (int s = 0; s < sol.scenarios; ++s) {
      const auto& e = sol.at[t][s];
      for (std::size_t b = 0; b < c.storage.size(); ++b) {
        os << t + 1 << ',' << sol.scenario_names[s] << ',' << c.storage[b].id << ',' << e.p_b[b] << ','
           << e.soc[b] << ',' << e.h_b[b] << ',' << e.pc_b[b] << '\n';
      }
    }
  }
}

}  // namespace mgsched::sched
