#pragma once

// Two-pulse Stern-Gerlach interferometer: schedule construction, the paired
// spin-branch simulation, closure diagnostics and tuning, and the parallel
// two-interferometer arrangement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "constants.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "material.hpp"

namespace sglev {

// Quarter period of the harmonic well created by the pulse gradient, in the
// closed form t_p = (pi / 2 eta) sqrt(-mu0 / (2 chi_rho)).
inline double pulse_time(double eta, const MaterialParams& material) {
  if (!(eta > 0.0)) throw Error(ErrorCode::domain, "pulse gradient must be positive");
  if (!(material.chi_rho < 0.0)) throw Error(ErrorCode::domain, "chi_rho must be negative");
  return constants::pi / (2.0 * eta) * std::sqrt(-constants::mu0 / (2.0 * material.chi_rho));
}

// Gradient that produces a given pulse time; inverse of pulse_time.
inline double gradient_for_pulse_time(double t_p, const MaterialParams& material) {
  if (!(t_p > 0.0)) throw Error(ErrorCode::domain, "pulse time must be positive");
  return constants::pi / (2.0 * t_p) * std::sqrt(-constants::mu0 / (2.0 * material.chi_rho));
}

// Sign of the closing pulse relative to the opening one. After a whole number
// of z periods the arms come back moving outward, and only a reversed gradient
// brings them to rest on the axis; after an odd number of half periods the same
// gradient does.
enum class ClosingPolarity { reversed, same };

constexpr std::string_view to_string(ClosingPolarity p) { return p == ClosingPolarity::reversed ? "reversed" : "same"; }

struct PulseSchedule {
  double t_p = 0.0;
  double t_T = 0.0;
  double T_total = 0.0;
  ClosingPolarity closing = ClosingPolarity::reversed;
  std::array<PulseWindow, 2> windows{};

  static PulseSchedule make(double t_p, double t_T, ClosingPolarity closing) {
    if (!(t_p > 0.0) || !(t_T >= 0.0)) throw Error(ErrorCode::validation, "schedule times must be positive");
    PulseSchedule s;
    s.t_p = t_p;
    s.t_T = t_T;
    s.T_total = 2.0 * t_p + t_T;
    s.closing = closing;
    s.windows[0] = {0.0, t_p, 1.0};
    s.windows[1] = {t_p + t_T, s.T_total, closing == ClosingPolarity::reversed ? -1.0 : 1.0};
    return s;
  }

  PulseConfig pulse(double eta, double y_ref) const { return {eta, y_ref, {windows[0], windows[1]}}; }

  friend bool operator==(const PulseSchedule&, const PulseSchedule&) = default;
};

inline PulseSchedule build_schedule(double eta, const MaterialParams& material, int n_z_oscillations, double omega_z,
                                    ClosingPolarity closing = ClosingPolarity::reversed) {
  if (n_z_oscillations < 1) throw Error(ErrorCode::validation, "n_z_oscillations must be a positive integer");
  if (!(omega_z > 0.0)) throw Error(ErrorCode::domain, "omega_z must be positive");
  const double t_T = static_cast<double>(n_z_oscillations) * 2.0 * constants::pi / omega_z;
  return PulseSchedule::make(pulse_time(eta, material), t_T, closing);
}

struct ClosureReport {
  double dr = 0.0;         // |r+(T) - r-(T)|
  double dv = 0.0;         // |v+(T) - v-(T)|
  double max_split = 0.0;  // max_t |z+ - z-|
  double return_dr = 0.0;  // largest |r(T) - r(0)| over both arms
  double min_trap_field = 0.0;  // min |B_T| seen along either arm
  double objective = 0.0;  // dr^2 + weight dv^2
  bool humpty_dumpty_ok = false;
};

struct ClosureTolerances {
  double tol_r = 1e-10;   // m
  double tol_v = 1e-7;    // m/s
  double weight = 1e-2;   // s^2; 1 nm of position mismatch weighs as much as 10 nm/s

  friend bool operator==(const ClosureTolerances&, const ClosureTolerances&) = default;
};

// Everything one interferometer run needs besides the initial state.
struct InterferometerConfig {
  MaterialParams material;
  TrapCoefficients trap;
  double eta = 0.0;
  double y_ref = 0.0;
  PulseSchedule schedule;
  IntegratorSettings integrator;
  DynamicsOptions dynamics;
  ClosureTolerances closure;
  bool parallel_branches = true;
};

struct Interferometer {
  ArmTrajectory plus_arm;
  ArmTrajectory minus_arm;
  PulseSchedule schedule;
  PulseConfig pulse;
  TrapCoefficients trap;
  MaterialParams material;
  ClosureReport closure;
};

inline ClosureReport closure_report(const ArmTrajectory& plus, const ArmTrajectory& minus, const TrapModel& trap,
                                    const ClosureTolerances& tol) {
  if (plus.samples.size() != minus.samples.size())
    throw Error(ErrorCode::grid_mismatch, "arms were sampled on different grids");
  ClosureReport r;
  const auto& p = plus.back();
  const auto& m = minus.back();
  r.dr = norm(p.position - m.position);
  r.dv = norm(p.velocity - m.velocity);
  r.return_dr = std::max(norm(p.position - plus.front().position), norm(m.position - minus.front().position));
  r.min_trap_field = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < plus.samples.size(); ++k) {
    const auto& a = plus.samples[k];
    const auto& b = minus.samples[k];
    if (a.t != b.t) throw Error(ErrorCode::grid_mismatch, "arms were sampled at different times");
    r.max_split = std::max(r.max_split, std::abs(a.position.z - b.position.z));
    r.min_trap_field = std::min({r.min_trap_field, norm(trap.field(a.position)), norm(trap.field(b.position))});
  }
  r.objective = r.dr * r.dr + tol.weight * r.dv * r.dv;
  r.humpty_dumpty_ok = r.dr < tol.tol_r && r.dv < tol.tol_v;
  return r;
}

inline Interferometer simulate_interferometer(const ParticleState& initial, const InterferometerConfig& cfg) {
  if (norm(initial.velocity) != 0.0 || initial.t != 0.0)
    throw Error(ErrorCode::validation, "interferometer must start at rest at t = 0");
  Interferometer out;
  out.schedule = cfg.schedule;
  out.pulse = cfg.schedule.pulse(cfg.eta, cfg.y_ref);
  out.trap = cfg.trap;
  out.material = cfg.material;
  const TrapModel trap(cfg.trap);
  auto run = [&](SpinBranch b) {
    return integrate(initial, b, out.pulse, cfg.schedule.T_total, trap, cfg.material, cfg.integrator, cfg.dynamics);
  };
  if (cfg.parallel_branches) {
    auto minus = std::async(std::launch::async, run, SpinBranch::minus_one);
    out.plus_arm = run(SpinBranch::plus_one);
    out.minus_arm = minus.get();
  } else {
    out.plus_arm = run(SpinBranch::plus_one);
    out.minus_arm = run(SpinBranch::minus_one);
  }
  out.closure = closure_report(out.plus_arm, out.minus_arm, trap, cfg.closure);
  return out;
}

enum class FreeParameter { t_T, a3, eta };

constexpr std::string_view to_string(FreeParameter p) {
  switch (p) {
    case FreeParameter::t_T: return "t_T";
    case FreeParameter::a3: return "a3";
    case FreeParameter::eta: return "eta";
  }
  return "?";
}

inline double get_parameter(const InterferometerConfig& c, FreeParameter p) {
  switch (p) {
    case FreeParameter::t_T: return c.schedule.t_T;
    case FreeParameter::a3: return c.trap.a3;
    case FreeParameter::eta: return c.eta;
  }
  return 0.0;
}

inline InterferometerConfig with_parameter(InterferometerConfig c, FreeParameter p, double value) {
  switch (p) {
    case FreeParameter::t_T: c.schedule = PulseSchedule::make(c.schedule.t_p, value, c.schedule.closing); break;
    case FreeParameter::a3: c.trap.a3 = value; break;
    case FreeParameter::eta: c.eta = value; break;
  }
  return c;
}

struct TuneOptions {
  double lower = 0.0;  // search bracket for the free parameter
  double upper = 0.0;
  int scan_points = 41;        // coarse scan used to pick the basin
  double scan_dt_factor = 10;  // the coarse scan runs with this multiple of dt
  int max_iterations = 80;
};

// Bracket of +-span (relative) around the current value of the parameter.
inline TuneOptions relative_bracket(const InterferometerConfig& c, FreeParameter parameter, double span) {
  const double v = get_parameter(c, parameter);
  TuneOptions o;
  o.lower = v - span * std::abs(v);
  o.upper = v + span * std::abs(v);
  return o;
}

struct TuneResult {
  InterferometerConfig config;
  FreeParameter parameter = FreeParameter::t_T;
  double value = 0.0;
  ClosureReport report;
  int iterations = 0;  // minimiser iterations beyond the initial verification
  int evaluations = 0;
};

// Closure of a configuration, recording only segment boundaries.
inline ClosureReport closure_only(const ParticleState& initial, InterferometerConfig cfg) {
  cfg.integrator.record_every = 0;
  return simulate_interferometer(initial, cfg).closure;
}

// Minimises dr^2 + weight dv^2 over one parameter: a coarse scan across the
// bracket selects the basin, then Brent's method refines inside it.
inline TuneResult tune_closure(const InterferometerConfig& cfg, const ParticleState& initial, FreeParameter parameter,
                               const TuneOptions& opt) {
  TuneResult result;
  result.parameter = parameter;
  result.config = cfg;
  result.value = get_parameter(cfg, parameter);
  result.report = closure_only(initial, cfg);
  result.evaluations = 1;
  if (result.report.humpty_dumpty_ok) return result;

  if (!(opt.lower < opt.upper) || !std::isfinite(opt.lower) || !std::isfinite(opt.upper))
    throw Error(ErrorCode::bracket_invalid, "bracket must satisfy lower < upper");
  if (parameter != FreeParameter::a3 && !(opt.lower > 0.0))
    throw Error(ErrorCode::bracket_invalid, std::string(to_string(parameter)) + " bracket must be positive");
  if (opt.scan_points < 3) throw Error(ErrorCode::bracket_invalid, "coarse scan needs at least 3 points");

  InterferometerConfig coarse = cfg;
  coarse.integrator.dt = cfg.integrator.dt * std::max(1.0, opt.scan_dt_factor);
  std::vector<double> xs(static_cast<std::size_t>(opt.scan_points));
  std::size_t best = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    xs[k] = opt.lower + (opt.upper - opt.lower) * static_cast<double>(k) / static_cast<double>(xs.size() - 1);
    const double f = closure_only(initial, with_parameter(coarse, parameter, xs[k])).objective;
    ++result.evaluations;
    if (f < best_f) {
      best_f = f;
      best = k;
    }
  }
  const double lo = xs[best == 0 ? 0 : best - 1];
  const double hi = xs[std::min(best + 1, xs.size() - 1)];

  auto objective = [&](double x) {
    ++result.evaluations;
    return closure_only(initial, with_parameter(cfg, parameter, x)).objective;
  };
  std::uintmax_t iterations = static_cast<std::uintmax_t>(opt.max_iterations);
  const auto [x, fx] = boost::math::tools::brent_find_minima(objective, lo, hi, std::numeric_limits<double>::digits / 2,
                                                             iterations);
  (void)fx;
  result.iterations = static_cast<int>(iterations);
  result.value = x;
  result.config = with_parameter(cfg, parameter, x);
  result.report = closure_only(initial, result.config);
  ++result.evaluations;
  if (!result.report.humpty_dumpty_ok && result.iterations >= opt.max_iterations)
    throw Error(ErrorCode::no_convergence, "closure tuning hit the iteration cap");
  return result;
}

enum class PairGeometry { parallel_x_offset };

struct SeparationSample {
  double t = 0.0;
  double d_close = 0.0;
  double d_far = 0.0;
};

// Two interferometers offset by d along x with parallel splitting directions.
// Each particle's coordinates are stored relative to its own trap centre.
struct InterferometerPair {
  Interferometer left;
  Interferometer right;
  double d = 0.0;
  std::vector<SeparationSample> separations;
};

struct PairingDistances {
  double plus_plus, minus_minus, plus_minus, minus_plus;
};

inline PairingDistances pairing_distances(const InterferometerPair& pair, std::size_t k) {
  const Vec3 offset{pair.d, 0.0, 0.0};
  const Vec3 lp = pair.left.plus_arm.samples[k].position;
  const Vec3 lm = pair.left.minus_arm.samples[k].position;
  const Vec3 rp = pair.right.plus_arm.samples[k].position + offset;
  const Vec3 rm = pair.right.minus_arm.samples[k].position + offset;
  return {norm(rp - lp), norm(rm - lm), norm(rm - lp), norm(rp - lm)};
}

inline void check_shared_grid(const Interferometer& a, const Interferometer& b) {
  const auto& ga = a.plus_arm.samples;
  const auto n = ga.size();
  if (a.minus_arm.samples.size() != n || b.plus_arm.samples.size() != n || b.minus_arm.samples.size() != n)
    throw Error(ErrorCode::grid_mismatch, "interferometers have different sample counts");
  for (std::size_t k = 0; k < n; ++k) {
    const double t = ga[k].t;
    if (a.minus_arm.samples[k].t != t || b.plus_arm.samples[k].t != t || b.minus_arm.samples[k].t != t)
      throw Error(ErrorCode::grid_mismatch, "interferometers have different time grids");
  }
}

// Builds the separation series. Same-spin pairings and opposite-spin pairings
// must agree with each other; this is checked rather than assumed.
inline InterferometerPair make_pair(Interferometer left, Interferometer right, double d,
                                    PairGeometry = PairGeometry::parallel_x_offset) {
  if (!(d > 0.0)) throw Error(ErrorCode::domain, "pair distance must be positive");
  check_shared_grid(left, right);
  InterferometerPair pair{std::move(left), std::move(right), d, {}};
  const auto n = pair.left.plus_arm.samples.size();
  pair.separations.reserve(n);
  auto agree = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)) + 1e-15; };
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = pairing_distances(pair, k);
    if (!agree(p.plus_plus, p.minus_minus) || !agree(p.plus_minus, p.minus_plus))
      throw Error(ErrorCode::domain, "arm pairings are not symmetric at t = " +
                                         std::to_string(pair.left.plus_arm.samples[k].t));
    const double same = 0.5 * (p.plus_plus + p.minus_minus);
    const double cross = 0.5 * (p.plus_minus + p.minus_plus);
    pair.separations.push_back({pair.left.plus_arm.samples[k].t, std::min(same, cross), std::max(same, cross)});
  }
  return pair;
}

inline InterferometerPair pair_interferometers(const Interferometer& one, double d,
                                               PairGeometry geometry = PairGeometry::parallel_x_offset) {
  return make_pair(one, one, d, geometry);
}

} // namespace sglev
