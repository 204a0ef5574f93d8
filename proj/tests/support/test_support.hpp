// Shared helpers for the unit and acceptance suites: paths, hand-derived
// formula cases, random generators and brute-force oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cce/event/boundaries.hpp"
#include "cce/formula/formula.hpp"
#include "cce/formula/units.hpp"
#include "cce/narrative/narrative.hpp"
#include "cce/scene/rules.hpp"
#include "cce/scene/update.hpp"

namespace cce_test {

namespace fs = std::filesystem;
using cce::formula::Bindings;
using cce::formula::Quantity;

inline fs::path data_dir() { return CCE_TEST_DATA_DIR; }
inline fs::path fixtures_dir() { return CCE_TEST_FIXTURES_DIR; }
inline fs::path golden_dir() { return CCE_TEST_GOLDEN_DIR; }
inline fs::path tmp_dir(const std::string& name) {
  const fs::path p = fs::path(CCE_TEST_TMP_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Quantity q(double v, const char* unit) { return Quantity::from(v, unit); }

struct FormulaCase {
  std::string formula_id;
  Bindings bindings;
  double expected;  // SI
};

/// Expected values are computed here with plain arithmetic, independently of
/// the expression evaluator.
inline std::vector<FormulaCase> formula_oracle_cases() {
  const double pi = std::numbers::pi;
  const double R = 8.314462618;
  std::vector<FormulaCase> c;
  c.push_back({"buoyant_force", {{"rho_f", q(1000, "kg/m^3")}, {"V_sub", q(1e-6, "m^3")}, {"g", q(9.8, "m/s^2")}}, 9.8e-3});
  c.push_back({"buoyant_force", {{"rho_f", q(1025, "kg/m^3")}, {"V_sub", q(2, "L")}, {"g", q(9.81, "m/s^2")}},
               1025 * 0.002 * 9.81});
  c.push_back({"buoyant_force", {{"rho_f", q(0.8, "g/cm^3")}, {"V_sub", q(50, "cm^3")}}, 800 * 50e-6 * 9.81});
  c.push_back({"net_buoyant_force",
               {{"rho_o", q(2500, "kg/m^3")}, {"rho_f", q(1000, "kg/m^3")}, {"V", q(1e-5, "m^3")}, {"g", q(9.8, "m/s^2")}},
               (2500.0 - 1000.0) * 1e-5 * 9.8});
  c.push_back({"submerged_fraction", {{"rho_o", q(920, "kg/m^3")}, {"rho_f", q(1000, "kg/m^3")}}, 0.92});
  c.push_back({"snell_law", {{"n1", q(1.0, "1")}, {"theta1", q(30, "deg")}, {"n2", q(1.333, "1")}},
               std::asin(1.0 * std::sin(30 * pi / 180) / 1.333)});
  c.push_back({"snell_law", {{"n1", q(1.5, "1")}, {"theta1", q(0.3, "rad")}, {"n2", q(1.0, "1")}},
               std::asin(1.5 * std::sin(0.3) / 1.0)});
  c.push_back({"snell_law", {{"theta1", q(0.5, "rad")}}, std::asin(1.0 * std::sin(0.5) / 1.333)});
  c.push_back({"critical_angle", {{"n_out", q(1.0, "1")}, {"n_in", q(1.5, "1")}}, std::asin(1.0 / 1.5)});
  c.push_back({"newton_cooling",
               {{"T_env", q(293.15, "K")}, {"T0", q(363.15, "K")}, {"k_c", q(0.01, "1/s")}, {"t", q(60, "s")}},
               293.15 + (363.15 - 293.15) * std::exp(-0.01 * 60)});
  c.push_back({"newton_cooling",
               {{"T_env", q(20, "degC")}, {"T0", q(90, "degC")}, {"k_c", q(0.05, "1/min")}, {"t", q(10, "min")}},
               293.15 + 70 * std::exp(-0.5)});
  c.push_back({"newton_cooling",
               {{"T_env", q(250, "K")}, {"T0", q(300, "K")}, {"k_c", q(0.3, "1/s")}, {"t", q(0, "s")}}, 300.0});
  c.push_back({"hooke_law", {{"k", q(200, "N/m")}, {"x", q(0.05, "m")}}, 10.0});
  c.push_back({"hooke_law", {{"k", q(50, "N/m")}, {"x", q(3, "cm")}}, 1.5});
  c.push_back({"spring_extension", {{"m", q(0.5, "kg")}, {"k", q(100, "N/m")}}, 0.5 * 9.81 / 100});
  c.push_back({"elastic_energy", {{"k", q(200, "N/m")}, {"x", q(0.1, "m")}}, 200 * 0.01 / 2});
  c.push_back({"ideal_gas_pressure", {{"n", q(1, "mol")}, {"T", q(273.15, "K")}, {"V", q(0.0224, "m^3")}},
               1 * R * 273.15 / 0.0224});
  c.push_back({"ideal_gas_pressure", {{"n", q(2, "mol")}, {"T", q(300, "K")}, {"V", q(10, "L")}}, 2 * R * 300 / 0.01});
  c.push_back({"ideal_gas_pressure", {{"n", q(0.5, "mol")}, {"T", q(25, "degC")}, {"V", q(1, "m^3")}}, 0.5 * R * 298.15});
  c.push_back({"charles_volume", {{"V1", q(1, "L")}, {"T2", q(600, "K")}, {"T1", q(300, "K")}}, 0.002});
  c.push_back({"free_fall_velocity", {{"g", q(9.8, "m/s^2")}, {"t", q(1, "s")}}, 9.8});
  c.push_back({"pendulum_period", {{"L", q(1, "m")}}, 2 * pi * std::sqrt(1 / 9.81)});
  c.push_back({"hydrostatic_pressure", {{"rho_f", q(1000, "kg/m^3")}, {"h", q(10, "m")}}, 101325 + 1000 * 9.81 * 10});
  c.push_back({"melt_fraction", {{"Q_in", q(167000, "J")}, {"m", q(1, "kg")}}, 0.5});
  c.push_back({"melt_fraction", {{"Q_in", q(1e6, "J")}, {"m", q(1, "kg")}}, 1.0});
  c.push_back({"indicator_ratio", {{"pH", q(6.5, "1")}}, 0.5});
  c.push_back({"apparent_depth", {{"d_real", q(1.333, "m")}}, 1.0});
  return c;
}

/// Each binds one variable in a unit of the wrong dimension.
inline std::vector<FormulaCase> misdimensioned_cases() {
  return {
      {"buoyant_force", {{"rho_f", q(1000, "kg/m^3")}, {"V_sub", q(1, "kg")}, {"g", q(9.8, "m/s^2")}}, 0},
      {"buoyant_force", {{"rho_f", q(1000, "kg")}, {"V_sub", q(1, "m^3")}}, 0},
      {"snell_law", {{"n1", q(1, "m")}, {"theta1", q(0.3, "rad")}, {"n2", q(1.3, "1")}}, 0},
      {"snell_law", {{"theta1", q(0.3, "s")}}, 0},
      {"newton_cooling", {{"T_env", q(293, "K")}, {"T0", q(300, "K")}, {"k_c", q(0.1, "s")}, {"t", q(1, "s")}}, 0},
      {"newton_cooling", {{"T_env", q(293, "m")}, {"T0", q(300, "K")}, {"k_c", q(0.1, "1/s")}, {"t", q(1, "s")}}, 0},
      {"hooke_law", {{"k", q(200, "N")}, {"x", q(0.05, "m")}}, 0},
      {"hooke_law", {{"k", q(200, "N/m")}, {"x", q(0.05, "kg")}}, 0},
      {"ideal_gas_pressure", {{"n", q(1, "kg")}, {"T", q(300, "K")}, {"V", q(1, "m^3")}}, 0},
      {"ideal_gas_pressure", {{"n", q(1, "mol")}, {"T", q(300, "K")}, {"V", q(1, "m^2")}}, 0},
  };
}

/// Random trajectory with up to 4 objects and 6 symbols in total, mixing
/// smooth drift, steps and constant features.
inline cce::event::ParameterTrajectory random_trajectory(std::mt19937_64& rng, std::size_t max_samples = 64) {
  std::uniform_int_distribution<int> n_samples(2, static_cast<int>(max_samples));
  std::uniform_int_distribution<int> n_objects(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* units[] = {"m", "K", "kg", "1", "m/s"};
  const int n = n_samples(rng);
  const int objects = n_objects(rng);
  const int symbols = std::uniform_int_distribution<int>(objects, 6)(rng);

  struct Feature {
    std::string object, symbol, unit;
    int style;
    double scale;
  };
  std::vector<Feature> features;
  for (int s = 0; s < symbols; ++s)
    features.push_back({"o" + std::to_string(s % objects), "s" + std::to_string(s), units[rng() % 5],
                        static_cast<int>(rng() % 4), std::pow(10.0, u(rng) * 6 - 3)});
  const bool with_derived = u(rng) < 0.5;

  cce::event::ParameterTrajectory t;
  for (int o = 0; o < objects; ++o) t.object_ids.push_back("o" + std::to_string(o));
  std::vector<double> value(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) value[f] = (u(rng) - 0.5) * features[f].scale;
  for (int i = 0; i < n; ++i) {
    cce::event::TrajectorySample s;
    s.time = 0.25 * i;
    double sum = 0;
    for (std::size_t f = 0; f < features.size(); ++f) {
      auto& fe = features[f];
      if (i > 0) switch (fe.style) {
          case 0: value[f] += (u(rng) - 0.5) * 0.1 * fe.scale; break;
          case 1: if (u(rng) < 0.15) value[f] += (u(rng) - 0.3) * fe.scale; break;
          case 2: break;
          default: value[f] += u(rng) * 0.05 * fe.scale + (u(rng) < 0.1 ? fe.scale : 0.0); break;
        }
      s.params[fe.object][fe.symbol] = Quantity::from(value[f], fe.unit);
      sum += value[f];
    }
    for (int o = 0; o < objects; ++o) s.params["o" + std::to_string(o)];
    if (with_derived) s.derived["sum"] = Quantity::dimensionless(sum * sum);
    t.samples.push_back(std::move(s));
  }
  return t;
}

/// Column-wise re-implementation of the boundary rule: normalize each
/// feature column, difference, take the L2 norm, scan with the gap.
inline std::vector<std::size_t> oracle_boundaries(const cce::event::ParameterTrajectory& t, double tau, int min_gap) {
  std::vector<std::vector<double>> columns;
  for (const auto& [obj, b] : t.samples[0].params)
    for (const auto& [sym, _] : b) {
      std::vector<double> col;
      for (const auto& s : t.samples) col.push_back(s.params.at(obj).at(sym).value);
      columns.push_back(col);
    }
  for (const auto& [sym, _] : t.samples[0].derived) {
    std::vector<double> col;
    for (const auto& s : t.samples) col.push_back(s.derived.at(sym).value);
    columns.push_back(col);
  }
  for (auto& col : columns) {
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const double a = *lo, b = *hi;
    for (auto& v : col) v = b > a ? (v - a) / (b - a) : 0.0;
  }
  std::vector<std::size_t> out;
  std::size_t last = 0;
  for (std::size_t i = 1; i < t.samples.size(); ++i) {
    double ss = 0;
    for (const auto& col : columns) ss += (col[i] - col[i - 1]) * (col[i] - col[i - 1]);
    if (std::sqrt(ss) > tau && (min_gap <= 1 || i - last >= static_cast<std::size_t>(min_gap))) {
      out.push_back(i);
      last = i;
    }
  }
  return out;
}

/// Multiplies every value of one feature by a positive constant.
inline void rescale_feature(cce::event::ParameterTrajectory& t, const std::string& obj, const std::string& sym,
                            double factor) {
  for (auto& s : t.samples) {
    if (obj == cce::event::kDerivedObject)
      s.derived.at(sym).value *= factor;
    else
      s.params.at(obj).at(sym).value *= factor;
  }
}

/// A random scene graph, rule set and chain of conditions whose rules never
/// write the same target from two rules.
struct RandomSceneChain {
  cce::scene::SceneGraph graph;
  std::vector<cce::scene::TriggerRule> rules;
  std::vector<cce::event::PhysicalCondition> conditions;
};

inline RandomSceneChain random_scene_chain(std::mt19937_64& rng) {
  using namespace cce;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomSceneChain out;
  const int nodes = 2 + static_cast<int>(rng() % 4);
  const char* colors[] = {"red", "blue", "green", "white", "black"};
  const char* labels[] = {"ball", "water", "ice", "paper", "ash", "flame"};
  const char* relations[] = {"touches", "supports", "contains", "approaches"};
  for (int i = 0; i < nodes; ++i) {
    scene::ObjectNode n{"n" + std::to_string(i), labels[rng() % 6], {}};
    n.attributes["color"] = std::string(colors[rng() % 5]);
    if (u(rng) < 0.5) n.attributes["size"] = Quantity::from(u(rng), "m");
    out.graph.nodes.emplace(n.id, n);
  }
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j)
      if (i != j && u(rng) < 0.3)
        out.graph.edges.push_back({"n" + std::to_string(i), "n" + std::to_string(j), relations[rng() % 4], {}});
  std::sort(out.graph.edges.begin(), out.graph.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.source, a.target, a.relation) < std::tie(b.source, b.target, b.relation);
  });

  std::ostringstream dsl;
  const char* triggers[] = {">=", ">", "<=", "<", "crosses up", "crosses down", "crosses", "changes sign",
                            "increases", "decreases"};
  std::set<std::string> taken;
  const int rules = 1 + static_cast<int>(rng() % 6);
  for (int r = 0; r < rules; ++r) {
    const int obj = static_cast<int>(rng() % nodes);
    const std::string trig = triggers[rng() % 10];
    dsl << "when n" << obj << ".x" << (rng() % 2) << " " << trig;
    if (trig != "changes sign" && trig != "increases" && trig != "decreases")
      dsl << " " << std::round((u(rng) - 0.5) * 200) / 100;
    dsl << " -> ";
    std::vector<std::string> actions;
    for (int a = 0; a < 3; ++a) {
      const int n = static_cast<int>(rng() % nodes);
      const int m = static_cast<int>((n + 1 + rng() % (nodes - 1)) % nodes);
      const std::string rel = relations[rng() % 4];
      switch (rng() % 4) {
        case 0:
          if (taken.insert("c" + std::to_string(n)).second)
            actions.push_back("set n" + std::to_string(n) + ".color = " + colors[rng() % 5]);
          break;
        case 1:
          if (taken.insert("l" + std::to_string(n)).second)
            actions.push_back("relabel n" + std::to_string(n) + " as " + labels[rng() % 6]);
          break;
        default: {
          const std::string key = "e" + std::to_string(n) + rel + std::to_string(m);
          if (taken.insert(key).second)
            actions.push_back(std::string(rng() % 2 ? "add" : "remove") + " edge n" + std::to_string(n) + " " + rel +
                              " n" + std::to_string(m));
        }
      }
    }
    if (actions.empty()) actions.push_back("set n" + std::to_string(obj) + ".rule" + std::to_string(r) + " = on");
    for (std::size_t a = 0; a < actions.size(); ++a) dsl << (a ? ", " : "") << actions[a];
    dsl << "\n";
  }
  out.rules = scene::parse_rules(dsl.str());

  const int events = 2 + static_cast<int>(rng() % 5);
  for (int t = 1; t <= events; ++t) {
    event::PhysicalCondition c;
    c.t_index = t;
    for (int i = 0; i < nodes; ++i)
      for (int s = 0; s < 2; ++s)
        c.params["n" + std::to_string(i)]["x" + std::to_string(s)] = Quantity::dimensionless(std::round((u(rng) - 0.5) * 300) / 100);
    out.conditions.push_back(c);
  }
  return out;
}

/// Narratives whose t-th text repeats some earlier clauses and adds one
/// clause naming "marker<t>".
inline std::vector<cce::narrative::EventNarrative> random_narratives(std::mt19937_64& rng, int& events) {
  events = 1 + static_cast<int>(rng() % 6);
  const char* subjects[] = {"the ball", "the water", "the paper", "the beam", "the ice"};
  const char* verbs[] = {"moves", "glows", "shrinks", "tilts", "darkens"};
  std::vector<cce::narrative::EventNarrative> out;
  std::vector<std::string> earlier;
  for (int t = 1; t <= events; ++t) {
    std::string clause = std::string(subjects[rng() % 5]) + " " + verbs[rng() % 5] + " near marker" + std::to_string(t);
    std::vector<std::string> clauses;
    for (const auto& e : earlier)
      if (rng() % 2) clauses.push_back(e);
    clauses.push_back(clause);
    earlier.push_back(clause);
    std::string text;
    for (std::size_t i = 0; i < clauses.size(); ++i) text += (i ? ", " : "") + clauses[i];
    out.push_back({t, text, "", {}});
  }
  return out;
}

}  // namespace cce_test
