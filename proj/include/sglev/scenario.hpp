#pragma once

// Scenario description: every physical and numerical input of a run, loaded
// from key = value text with unit-suffixed numbers.

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "interferometry.hpp"
#include "material.hpp"
#include "units.hpp"

namespace sglev {

struct SweepGrids {
  double d_min = 2e-6;
  double d_max = 50e-6;
  int d_points = 64;
  double gamma_max = 2.0;
  int gamma_points = 128;
  double damping_fraction = 0.0;  // share of total Gamma assigned to damping

  friend bool operator==(const SweepGrids&, const SweepGrids&) = default;
};

struct Scenario {
  std::string preset;
  MaterialParams material;
  TrapCoefficients trap;
  double eta = 0.0;  // T/m
  double t_p = 0.0;  // s, consistent with eta
  double initial_y = -1.11e-6;
  int n_z_oscillations = 1;
  ClosingPolarity closing = ClosingPolarity::reversed;
  std::optional<double> t_T;  // overrides n_z_oscillations * 2 pi / omega_z
  double pair_distance = 20e-6;
  SweepGrids sweeps;
  double dt = 0.0;  // 0 selects t_p / 2000
  int record_every = 20;
  ClosureTolerances closure;
  std::optional<FreeParameter> tune;
  double tune_span = 0.1;  // relative half-width of the tuning bracket
  DynamicsOptions dynamics;
  std::optional<double> frozen_field;
  std::string output_dir = "out";

  double effective_dt() const { return dt > 0.0 ? dt : t_p / 2000.0; }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline void validate(const Scenario& s) {
  auto fail = [](const std::string& key, const std::string& why) { throw Error(ErrorCode::validation, key + ": " + why); };
  s.material.validate("material");
  if (s.material.mass < 1e-22 || s.material.mass > 1e-14) fail("material.mass", "outside [1e-22, 1e-14] kg");
  s.trap.validate("trap");
  if (!(s.eta > 0.0) || s.eta > 1e7) fail("pulse.eta", "outside (0, 1e7] T/m");
  if (!(s.t_p > 0.0)) fail("pulse.t_p", "must be positive");
  if (!(std::abs(s.initial_y) < s.trap.y0)) fail("initial.y", "must lie inside the trap (|y| < y0)");
  if (s.n_z_oscillations < 1) fail("schedule.n_z_oscillations", "must be a positive integer");
  if (s.t_T && !(*s.t_T > 0.0)) fail("schedule.t_T", "must be positive");
  if (!(s.pair_distance > 0.0)) fail("pair.d", "must be positive");
  if (!(s.sweeps.d_min > 0.0)) fail("sweep.d_min", "must be positive");
  if (!(s.sweeps.d_max > s.sweeps.d_min)) fail("sweep.d_max", "must exceed sweep.d_min");
  if (s.sweeps.d_points < 2) fail("sweep.d_points", "need at least 2 points");
  if (!(s.sweeps.gamma_max > 0.0)) fail("sweep.gamma_max", "must be positive");
  if (s.sweeps.gamma_points < 2) fail("sweep.gamma_points", "need at least 2 points");
  if (s.sweeps.damping_fraction < 0.0 || s.sweeps.damping_fraction > 1.0)
    fail("sweep.damping_fraction", "must lie in [0, 1]");
  if (s.dt < 0.0) fail("integrator.dt", "must be positive (or 0 for the default)");
  if (s.effective_dt() > 0.5 * s.t_p) fail("integrator.dt", "must resolve the pulse (dt <= t_p / 2)");
  if (s.record_every < 0) fail("integrator.record_every", "must be non-negative");
  if (!(s.closure.tol_r > 0.0)) fail("closure.tol_r", "must be positive");
  if (!(s.closure.tol_v > 0.0)) fail("closure.tol_v", "must be positive");
  if (!(s.closure.weight >= 0.0)) fail("closure.weight", "must be non-negative");
  if (!(s.tune_span > 0.0 && s.tune_span < 1.0)) fail("closure.bracket", "must lie in (0, 1)");
  if (!(s.dynamics.gravity >= 0.0)) fail("dynamics.gravity", "must be non-negative");
  if (s.frozen_field && !(*s.frozen_field >= 0.0)) fail("entanglement.frozen_field", "must be non-negative");
  if (std::abs(pulse_time(s.eta, s.material) - s.t_p) > 1e-9 * s.t_p)
    fail("pulse.t_p", "inconsistent with pulse.eta");
}

// Named presets. "paper-default" is one full z period; "paper-two-z" two.
inline std::optional<Scenario> preset_scenario(std::string_view name) {
  if (name != "paper-default" && name != "paper-two-z") return std::nullopt;
  Scenario s;
  s.preset = std::string(name);
  s.t_p = 160e-6;
  s.eta = gradient_for_pulse_time(s.t_p, s.material);
  s.n_z_oscillations = name == "paper-two-z" ? 2 : 1;
  s.tune = FreeParameter::t_T;
  return s;
}

inline std::vector<std::string> preset_names() { return {"paper-default", "paper-two-z"}; }

namespace detail {

inline bool parse_switch(std::string_view v, const std::string& key) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw Error(ErrorCode::parse, key + ": expected on|off");
}

inline int parse_int(std::string_view v, const std::string& key) {
  const double x = units::parse_quantity(v, units::Dimension::dimensionless, key);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw Error(ErrorCode::parse, key + ": expected an integer");
  return static_cast<int>(x);
}

inline std::optional<FreeParameter> parse_free(std::string_view v, const std::string& key) {
  if (v == "none") return std::nullopt;
  if (v == "t_T") return FreeParameter::t_T;
  if (v == "a3") return FreeParameter::a3;
  if (v == "eta") return FreeParameter::eta;
  throw Error(ErrorCode::parse, key + ": expected none|t_T|a3|eta");
}

} // namespace detail

// Parses key = value text. A "preset" line selects the starting values (it
// may appear anywhere); every other key overrides one field. Unknown keys are
// rejected. If only one of pulse.eta and pulse.t_p is given the other is derived.
inline Scenario load_scenario(std::string_view source, std::optional<std::string> preset_override = std::nullopt) {
  using units::Dimension;
  std::vector<std::pair<std::string, std::string>> entries;
  std::optional<std::string> preset = std::move(preset_override);
  std::istringstream in{std::string(source)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view t = units::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::parse, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key(units::trim(t.substr(0, eq)));
    std::string value(units::trim(t.substr(eq + 1)));
    if (key.empty() || value.empty())
      throw Error(ErrorCode::parse, "line " + std::to_string(lineno) + ": empty key or value");
    if (key == "preset") {
      if (!preset) preset = value;
      continue;
    }
    entries.emplace_back(std::move(key), std::move(value));
  }

  Scenario s;
  if (preset) {
    auto p = preset_scenario(*preset);
    if (!p) throw Error(ErrorCode::validation, "preset: unknown preset '" + *preset + "'");
    s = *p;
  }
  std::optional<double> eta, t_p;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto q = [](double& field, Dimension d) -> Setter {
    return [&field, d](const std::string& k, const std::string& v) { field = units::parse_quantity(v, d, k); };
  };
  auto oq = [](std::optional<double>& field, Dimension d) -> Setter {
    return [&field, d](const std::string& k, const std::string& v) { field = units::parse_quantity(v, d, k); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = detail::parse_int(v, k); };
  };
  auto flag = [](bool& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = detail::parse_switch(v, k); };
  };
  const std::map<std::string, Setter, std::less<>> setters = {
      {"material.mass", q(s.material.mass, Dimension::mass)},
      {"material.density", q(s.material.density, Dimension::density)},
      {"material.chi_rho", q(s.material.chi_rho, Dimension::susceptibility)},
      {"material.epsilon", q(s.material.epsilon, Dimension::dimensionless)},
      {"material.g_s", q(s.material.g_s, Dimension::dimensionless)},
      {"trap.a2", q(s.trap.a2, Dimension::field)},
      {"trap.a3", q(s.trap.a3, Dimension::field)},
      {"trap.a4", q(s.trap.a4, Dimension::field)},
      {"trap.y0", q(s.trap.y0, Dimension::length)},
      {"pulse.eta", oq(eta, Dimension::gradient)},
      {"pulse.t_p", oq(t_p, Dimension::time)},
      {"initial.y", q(s.initial_y, Dimension::length)},
      {"schedule.n_z_oscillations", integer(s.n_z_oscillations)},
      {"schedule.closing_pulse",
       [&s](const std::string& k, const std::string& v) {
         if (v == "reversed") s.closing = ClosingPolarity::reversed;
         else if (v == "same") s.closing = ClosingPolarity::same;
         else throw Error(ErrorCode::parse, k + ": expected reversed|same");
       }},
      {"schedule.t_T", oq(s.t_T, Dimension::time)},
      {"pair.d", q(s.pair_distance, Dimension::length)},
      {"sweep.d_min", q(s.sweeps.d_min, Dimension::length)},
      {"sweep.d_max", q(s.sweeps.d_max, Dimension::length)},
      {"sweep.d_points", integer(s.sweeps.d_points)},
      {"sweep.gamma_max", q(s.sweeps.gamma_max, Dimension::dimensionless)},
      {"sweep.gamma_points", integer(s.sweeps.gamma_points)},
      {"sweep.damping_fraction", q(s.sweeps.damping_fraction, Dimension::dimensionless)},
      {"integrator.dt", q(s.dt, Dimension::time)},
      {"integrator.record_every", integer(s.record_every)},
      {"closure.tol_r", q(s.closure.tol_r, Dimension::length)},
      {"closure.tol_v", q(s.closure.tol_v, Dimension::velocity)},
      {"closure.weight", q(s.closure.weight, Dimension::time_squared)},
      {"closure.tune", [&s](const std::string& k, const std::string& v) { s.tune = detail::parse_free(v, k); }},
      {"closure.bracket", q(s.tune_span, Dimension::dimensionless)},
      {"dynamics.gravity", q(s.dynamics.gravity, Dimension::acceleration)},
      {"dynamics.spin_force", flag(s.dynamics.spin_force)},
      {"dynamics.spin_force_in_trap", flag(s.dynamics.spin_force_in_trap)},
      {"entanglement.frozen_field", oq(s.frozen_field, Dimension::field)},
      {"output.dir", [&s](const std::string&, const std::string& v) { s.output_dir = v; }},
  };
  for (const auto& [key, value] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::parse, key + ": unknown key");
    it->second(key, value);
  }

  if (eta && t_p) {
    s.eta = *eta;
    s.t_p = *t_p;
  } else if (eta) {
    s.eta = *eta;
    if (!(s.eta > 0.0)) throw Error(ErrorCode::validation, "pulse.eta: outside (0, 1e7] T/m");
    s.t_p = pulse_time(s.eta, s.material);
  } else if (t_p) {
    s.t_p = *t_p;
    if (!(s.t_p > 0.0)) throw Error(ErrorCode::validation, "pulse.t_p: must be positive");
    s.eta = gradient_for_pulse_time(s.t_p, s.material);
  } else if (!preset) {
    throw Error(ErrorCode::validation, "pulse.eta: either pulse.eta or pulse.t_p is required");
  } else if (s.material.chi_rho != preset_scenario(*preset)->material.chi_rho && s.material.chi_rho < 0.0) {
    // The preset pulse time stays fixed when the susceptibility is overridden.
    s.eta = gradient_for_pulse_time(s.t_p, s.material);
  }
  validate(s);
  return s;
}

inline Scenario load_scenario_file(const std::string& path, std::optional<std::string> preset_override = std::nullopt) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return load_scenario(buf.str(), std::move(preset_override));
}

// Writes every field explicitly, in SI, so that loading the text reproduces
// the scenario exactly.
inline std::string serialize(const Scenario& s) {
  using units::Dimension;
  using units::format_quantity;
  std::ostringstream o;
  auto kv = [&o](std::string_view k, const std::string& v) { o << k << " = " << v << '\n'; };
  if (!s.preset.empty()) kv("preset", s.preset);
  kv("material.mass", format_quantity(s.material.mass, Dimension::mass));
  kv("material.density", format_quantity(s.material.density, Dimension::density));
  kv("material.chi_rho", format_quantity(s.material.chi_rho, Dimension::susceptibility));
  kv("material.epsilon", format_quantity(s.material.epsilon, Dimension::dimensionless));
  kv("material.g_s", format_quantity(s.material.g_s, Dimension::dimensionless));
  kv("trap.a2", format_quantity(s.trap.a2, Dimension::field));
  kv("trap.a3", format_quantity(s.trap.a3, Dimension::field));
  kv("trap.a4", format_quantity(s.trap.a4, Dimension::field));
  kv("trap.y0", format_quantity(s.trap.y0, Dimension::length));
  kv("pulse.eta", format_quantity(s.eta, Dimension::gradient));
  kv("pulse.t_p", format_quantity(s.t_p, Dimension::time));
  kv("initial.y", format_quantity(s.initial_y, Dimension::length));
  kv("schedule.n_z_oscillations", std::to_string(s.n_z_oscillations));
  kv("schedule.closing_pulse", std::string(to_string(s.closing)));
  if (s.t_T) kv("schedule.t_T", format_quantity(*s.t_T, Dimension::time));
  kv("pair.d", format_quantity(s.pair_distance, Dimension::length));
  kv("sweep.d_min", format_quantity(s.sweeps.d_min, Dimension::length));
  kv("sweep.d_max", format_quantity(s.sweeps.d_max, Dimension::length));
  kv("sweep.d_points", std::to_string(s.sweeps.d_points));
  kv("sweep.gamma_max", format_quantity(s.sweeps.gamma_max, Dimension::dimensionless));
  kv("sweep.gamma_points", std::to_string(s.sweeps.gamma_points));
  kv("sweep.damping_fraction", format_quantity(s.sweeps.damping_fraction, Dimension::dimensionless));
  kv("integrator.dt", format_quantity(s.dt, Dimension::time));
  kv("integrator.record_every", std::to_string(s.record_every));
  kv("closure.tol_r", format_quantity(s.closure.tol_r, Dimension::length));
  kv("closure.tol_v", format_quantity(s.closure.tol_v, Dimension::velocity));
  kv("closure.weight", format_quantity(s.closure.weight, Dimension::time_squared));
  kv("closure.tune", s.tune ? std::string(to_string(*s.tune)) : "none");
  kv("closure.bracket", format_quantity(s.tune_span, Dimension::dimensionless));
  kv("dynamics.gravity", format_quantity(s.dynamics.gravity, Dimension::acceleration));
  kv("dynamics.spin_force", s.dynamics.spin_force ? "on" : "off");
  kv("dynamics.spin_force_in_trap", s.dynamics.spin_force_in_trap ? "on" : "off");
  if (s.frozen_field) kv("entanglement.frozen_field", format_quantity(*s.frozen_field, Dimension::field));
  kv("output.dir", s.output_dir);
  return o.str();
}

} // namespace sglev
