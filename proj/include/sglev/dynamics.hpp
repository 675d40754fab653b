#pragma once

// Classical spin-branch dynamics of a levitated nanocrystal: forces derived
// from the trap Hamiltonian and fixed-step RK4 integration through a piecewise
// constant pulse schedule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "material.hpp"
#include "vec3.hpp"

namespace sglev {

enum class SpinBranch { plus_one, minus_one };

constexpr double spin_projection(SpinBranch b) { return b == SpinBranch::plus_one ? 1.0 : -1.0; }

constexpr std::string_view to_string(SpinBranch b) { return b == SpinBranch::plus_one ? "+1" : "-1"; }

struct ParticleState {
  Vec3 position;
  Vec3 velocity;
  double t = 0.0;

  bool finite() const { return all_finite(position) && all_finite(velocity) && std::isfinite(t); }
  friend bool operator==(const ParticleState&, const ParticleState&) = default;
};

struct DynamicsOptions {
  double gravity = constants::standard_gravity;
  // The spin term acts through S.B with S projected on a fixed quantization axis.
  Vec3 quantization_axis{0.0, 0.0, 1.0};
  bool spin_force = true;
  // Whether the spin term also acts while only the trap field is on.
  bool spin_force_in_trap = true;

  friend bool operator==(const DynamicsOptions&, const DynamicsOptions&) = default;
};

struct IntegratorSettings {
  double dt = 0.0;
  // Record every n-th step in addition to segment boundaries; 0 keeps boundaries only.
  int record_every = 1;

  friend bool operator==(const IntegratorSettings&, const IntegratorSettings&) = default;
};

struct ArmTrajectory {
  SpinBranch branch = SpinBranch::plus_one;
  std::vector<ParticleState> samples;
  IntegratorSettings dt_policy;
  std::uint64_t steps = 0;

  const ParticleState& front() const { return samples.front(); }
  const ParticleState& back() const { return samples.back(); }
};

// Field configuration that stays fixed over one integration segment.
struct SegmentField {
  const TrapModel* trap = nullptr;
  double pulse_gradient = 0.0;  // signed; zero while the pulse is off
  double y_ref = 0.0;

  bool pulse_on() const { return pulse_gradient != 0.0; }
};

inline bool spin_term_active(const SegmentField& f, const DynamicsOptions& opt) {
  return opt.spin_force && (f.pulse_on() || opt.spin_force_in_trap);
}

// a = (chi_rho / 2 mu0) grad B^2 - (g_s mu_B s / m) grad(B . n) - g y_hat
inline Vec3 acceleration(const Vec3& position, SpinBranch branch, const SegmentField& field,
                         const MaterialParams& material, const DynamicsOptions& opt = {}) {
  const LocalField f = local_field(position, *field.trap, field.pulse_gradient, field.y_ref);
  Vec3 a = (material.chi_rho / constants::mu0) * f.J.transpose_times(f.B);
  if (spin_term_active(field, opt)) {
    const double k = material.g_s * constants::bohr_magneton * spin_projection(branch) / material.mass;
    a -= k * f.J.transpose_times(opt.quantization_axis);
  }
  a.y -= opt.gravity;
  return a;
}

// Field context that resolves the pulse state from the particle's clock.
struct FieldContext {
  TrapModel trap;
  PulseConfig pulse;

  SegmentField at(double t) const { return {&trap, pulse.gradient_at(t), pulse.y_ref}; }
};

inline Vec3 acceleration(const ParticleState& state, SpinBranch branch, const FieldContext& fields,
                         const MaterialParams& material, const DynamicsOptions& opt = {}) {
  return acceleration(state.position, branch, fields.at(state.t), material, opt);
}

// Total classical energy; the potential zero is y = 0 in a vanishing field.
inline double energy(const ParticleState& state, SpinBranch branch, const SegmentField& field,
                     const MaterialParams& material, const DynamicsOptions& opt = {}) {
  const LocalField f = local_field(state.position, *field.trap, field.pulse_gradient, field.y_ref);
  double e = 0.5 * material.mass * dot(state.velocity, state.velocity) +
             material.mass * opt.gravity * state.position.y -
             material.chi_rho * material.mass / (2.0 * constants::mu0) * dot(f.B, f.B);
  if (spin_term_active(field, opt))
    e += material.g_s * constants::bohr_magneton * spin_projection(branch) * dot(f.B, opt.quantization_axis);
  return e;
}

inline double energy(const ParticleState& state, SpinBranch branch, const FieldContext& fields,
                     const MaterialParams& material, const DynamicsOptions& opt = {}) {
  return energy(state, branch, fields.at(state.t), material, opt);
}

// One classical RK4 step of size dt inside a segment.
inline ParticleState step(const ParticleState& s, SpinBranch branch, const SegmentField& field,
                          const MaterialParams& material, double dt, const DynamicsOptions& opt = {}) {
  if (!(dt > 0.0)) throw Error(ErrorCode::domain, "step size must be positive");
  const Vec3& x0 = s.position;
  const Vec3& v0 = s.velocity;
  const Vec3 k1v = acceleration(x0, branch, field, material, opt);
  const Vec3 k1x = v0;
  const Vec3 k2v = acceleration(x0 + 0.5 * dt * k1x, branch, field, material, opt);
  const Vec3 k2x = v0 + 0.5 * dt * k1v;
  const Vec3 k3v = acceleration(x0 + 0.5 * dt * k2x, branch, field, material, opt);
  const Vec3 k3x = v0 + 0.5 * dt * k2v;
  const Vec3 k4v = acceleration(x0 + dt * k3x, branch, field, material, opt);
  const Vec3 k4x = v0 + dt * k3v;
  ParticleState out;
  out.position = x0 + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  out.velocity = v0 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  out.t = s.t + dt;
  if (!out.finite()) throw Error(ErrorCode::non_finite, "state became non-finite at t = " + std::to_string(out.t));
  return out;
}

inline ParticleState step(const ParticleState& s, SpinBranch branch, const FieldContext& fields,
                          const MaterialParams& material, double dt, const DynamicsOptions& opt = {}) {
  return step(s, branch, fields.at(s.t), material, dt, opt);
}

// Interval of constant field configuration.
struct Segment {
  double t_begin = 0.0;
  double t_end = 0.0;
  double pulse_gradient = 0.0;
  std::int64_t steps = 0;
};

// Splits [t_begin, t_end] at the pulse switching times. Each segment is covered
// by an integer number of equal steps no longer than dt (rounded to nearest), so
// the field switch always falls exactly on a step boundary.
inline std::vector<Segment> segment_schedule(const PulseConfig& pulse, double t_begin, double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::domain, "integrator dt must be positive");
  if (!(t_end > t_begin)) throw Error(ErrorCode::schedule_misaligned, "schedule has no duration");
  std::vector<Segment> out;
  double cursor = t_begin;
  auto push = [&](double a, double b, double gradient) {
    if (b <= a) return;
    const auto n = std::max<std::int64_t>(1, std::llround((b - a) / dt));
    out.push_back({a, b, gradient, n});
  };
  for (const auto& w : pulse.windows) {
    if (w.t_on < t_begin || w.t_off > t_end)
      throw Error(ErrorCode::schedule_misaligned, "pulse window lies outside the integration interval");
    if (w.t_on < cursor) throw Error(ErrorCode::schedule_misaligned, "pulse windows overlap or are unordered");
    if (w.t_off - w.t_on < 0.5 * dt)
      throw Error(ErrorCode::schedule_misaligned, "pulse window shorter than half a step cannot be resolved");
    push(cursor, w.t_on, 0.0);
    push(w.t_on, w.t_off, w.polarity * pulse.eta);
    cursor = w.t_off;
  }
  push(cursor, t_end, 0.0);
  return out;
}

// Integrates one spin branch over [initial.t, t_end], segment by segment.
inline ArmTrajectory integrate(const ParticleState& initial, SpinBranch branch, const PulseConfig& pulse,
                               double t_end, const TrapModel& trap, const MaterialParams& material,
                               const IntegratorSettings& settings, const DynamicsOptions& opt = {}) {
  if (!initial.finite()) throw Error(ErrorCode::non_finite, "initial state is not finite");
  const auto segments = segment_schedule(pulse, initial.t, t_end, settings.dt);
  ArmTrajectory arm;
  arm.branch = branch;
  arm.dt_policy = settings;
  if (settings.record_every > 0) {
    std::int64_t total = 0;
    for (const auto& s : segments) total += s.steps;
    arm.samples.reserve(static_cast<std::size_t>(total / settings.record_every + 2 * segments.size() + 2));
  }
  arm.samples.push_back(initial);
  ParticleState state = initial;
  for (const auto& seg : segments) {
    const SegmentField field{&trap, seg.pulse_gradient, pulse.y_ref};
    const double h = (seg.t_end - seg.t_begin) / static_cast<double>(seg.steps);
    for (std::int64_t k = 1; k <= seg.steps; ++k) {
      state = step(state, branch, field, material, h, opt);
      // Times are regenerated from the segment origin so rounding never accumulates.
      state.t = k == seg.steps ? seg.t_end : seg.t_begin + static_cast<double>(k) * h;
      ++arm.steps;
      if (k == seg.steps || (settings.record_every > 0 && k % settings.record_every == 0))
        arm.samples.push_back(state);
    }
  }
  return arm;
}

} // namespace sglev
