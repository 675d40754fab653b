#pragma once

// Static diamagnetic trap, the pulsed linear-gradient field, and the derived
// quantities the dynamics need: B^2, its gradient and Hessian, trap
// frequencies and the gravitational rest position.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "material.hpp"
#include "vec3.hpp"

namespace sglev {

struct TrapCoefficients {
  double a2 = -1.3;    // T
  double a3 = 0.0183;  // T
  double a4 = 0.72;    // T
  double y0 = 75e-6;   // m, trap centre to pole pieces

  static TrapCoefficients paper_default() { return {}; }

  void validate(const std::string& prefix = "trap") const {
    if (!(y0 > 0.0) || !std::isfinite(y0)) throw Error(ErrorCode::validation, prefix + ".y0: must be positive");
    if (!std::isfinite(a2) || !std::isfinite(a3) || !std::isfinite(a4))
      throw Error(ErrorCode::validation, prefix + ": coefficients must be finite");
  }

  friend bool operator==(const TrapCoefficients&, const TrapCoefficients&) = default;
};

struct PulseWindow {
  double t_on = 0.0;
  double t_off = 0.0;
  // +1 applies B_p as given, -1 applies the field with reversed gradient.
  double polarity = 1.0;

  bool contains(double t) const { return t >= t_on && t < t_off; }
  friend bool operator==(const PulseWindow&, const PulseWindow&) = default;
};

struct PulseConfig {
  double eta = 0.0;    // T/m
  double y_ref = 0.0;  // m, zero crossing of the y component
  std::vector<PulseWindow> windows;

  const PulseWindow* window_at(double t) const {
    for (const auto& w : windows)
      if (w.contains(t)) return &w;
    return nullptr;
  }

  // Signed gradient in effect at time t; zero while switched off.
  double gradient_at(double t) const {
    const auto* w = window_at(t);
    return w ? w->polarity * eta : 0.0;
  }

  void validate(const std::string& prefix = "pulse") const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::validation, prefix + ".eta: must be positive");
    double last_off = -INFINITY;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      const std::string key = prefix + ".windows[" + std::to_string(i) + "]";
      if (!(w.t_on < w.t_off)) throw Error(ErrorCode::validation, key + ": t_on must precede t_off");
      if (w.t_on < last_off) throw Error(ErrorCode::validation, key + ": windows must be ordered and disjoint");
      if (w.polarity != 1.0 && w.polarity != -1.0) throw Error(ErrorCode::validation, key + ": polarity must be +1 or -1");
      last_off = w.t_off;
    }
  }

  friend bool operator==(const PulseConfig&, const PulseConfig&) = default;
};

struct FieldSample {
  Vec3 B;
  double B_squared = 0.0;
  Vec3 grad_B_squared;
};

// Field value together with its Jacobian J(i,j) = dB_i/dx_j.
struct LocalField {
  Vec3 B;
  Mat3 J;
};

// Precomputed coefficient combinations of the trap polynomial, with the field,
// its Jacobian and second derivatives in closed form.
class TrapModel {
 public:
  TrapModel() : TrapModel(TrapCoefficients{}) {}
  explicit TrapModel(const TrapCoefficients& c)
      : coeffs_(c),
        c4_(3.0 * c.a4 * std::sqrt(35.0 / constants::pi) / (c.y0 * c.y0 * c.y0)),
        c3_(c.a3 * std::sqrt(7.0 / (6.0 * constants::pi)) / (c.y0 * c.y0)),
        c2_(c.a2 * std::sqrt(15.0 / constants::pi) / (4.0 * c.y0)),
        c3z_(2.0 * c.a3 * std::sqrt(14.0 / (3.0 * constants::pi)) / (c.y0 * c.y0)) {}

  const TrapCoefficients& coefficients() const { return coeffs_; }

  // Written term by term in the same order as the published profile.
  Vec3 field(const Vec3& p) const {
    const double x = p.x, y = p.y, z = p.z;
    const double bx = -(c4_ * x * x * y / 8.0 + c4_ * y * (x * x - y * y) / 16.0 - c3_ * x * x + c2_ * y +
                        c3_ * (-x * x - y * y + 4.0 * z * z) / 2.0);
    const double by = -(-c4_ * x * y * y / 8.0 + c4_ * x * (x * x - y * y) / 16.0 - c3_ * x * y + c2_ * x);
    const double bz = -(c3z_ * x * z);
    return {bx, by, bz};
  }

  Mat3 jacobian(const Vec3& p) const {
    const double x = p.x, y = p.y, z = p.z;
    Mat3 j;
    const double shear = -(c4_ * (3.0 * x * x - 3.0 * y * y) / 16.0 - c3_ * y + c2_);
    j(0, 0) = -3.0 * c4_ * x * y / 8.0 + 3.0 * c3_ * x;
    j(0, 1) = shear;
    j(0, 2) = -4.0 * c3_ * z;
    j(1, 0) = shear;
    j(1, 1) = 3.0 * c4_ * x * y / 8.0 + c3_ * x;
    j(2, 0) = -c3z_ * z;
    j(2, 2) = -c3z_ * x;
    return j;
  }

  // second[i](j,k) = d^2 B_i / dx_j dx_k
  std::array<Mat3, 3> second_derivatives(const Vec3& p) const {
    const double x = p.x, y = p.y;
    std::array<Mat3, 3> h{};
    auto sym = [](Mat3& m, int a, int b, double v) {
      m(a, b) = v;
      m(b, a) = v;
    };
    h[0](0, 0) = -3.0 * c4_ * y / 8.0 + 3.0 * c3_;
    sym(h[0], 0, 1, -3.0 * c4_ * x / 8.0);
    h[0](1, 1) = 3.0 * c4_ * y / 8.0 + c3_;
    h[0](2, 2) = -4.0 * c3_;
    h[1](0, 0) = -3.0 * c4_ * x / 8.0;
    sym(h[1], 0, 1, 3.0 * c4_ * y / 8.0 + c3_);
    h[1](1, 1) = 3.0 * c4_ * x / 8.0;
    sym(h[2], 0, 2, -c3z_);
    return h;
  }

 private:
  TrapCoefficients coeffs_;
  double c4_, c3_, c2_, c3z_;
};

inline Vec3 eval_trap(const Vec3& p, const TrapCoefficients& c) { return TrapModel(c).field(p); }
inline Mat3 trap_jacobian(const Vec3& p, const TrapCoefficients& c) { return TrapModel(c).jacobian(p); }
inline std::array<Mat3, 3> trap_second_derivatives(const Vec3& p, const TrapCoefficients& c) {
  return TrapModel(c).second_derivatives(p);
}

// B_p for a given signed gradient (zero gradient means switched off).
inline Vec3 pulse_field(const Vec3& p, double gradient, double y_ref) {
  return {0.0, gradient * (y_ref - p.y), gradient * p.z};
}

inline Mat3 pulse_jacobian(double gradient) {
  Mat3 j;
  j(1, 1) = -gradient;
  j(2, 2) = gradient;
  return j;
}

inline Vec3 eval_pulse(const Vec3& p, const PulseConfig& pulse, double t) {
  return pulse_field(p, pulse.gradient_at(t), pulse.y_ref);
}

// Trap plus a pulse of fixed signed gradient. The integrator uses this
// directly: it knows which segment it is in and never looks the pulse up by time.
inline LocalField local_field(const Vec3& p, const TrapModel& trap, double gradient, double y_ref) {
  LocalField f{trap.field(p), trap.jacobian(p)};
  if (gradient != 0.0) {
    f.B += pulse_field(p, gradient, y_ref);
    f.J(1, 1) -= gradient;
    f.J(2, 2) += gradient;
  }
  return f;
}

inline LocalField local_field(const Vec3& p, const TrapCoefficients& c, double gradient, double y_ref) {
  return local_field(p, TrapModel(c), gradient, y_ref);
}

inline FieldSample sample_from(const LocalField& f) {
  return {f.B, dot(f.B, f.B), 2.0 * f.J.transpose_times(f.B)};
}

inline FieldSample eval_total(const Vec3& p, const TrapCoefficients& c, const PulseConfig& pulse, double t) {
  return sample_from(local_field(p, c, pulse.gradient_at(t), pulse.y_ref));
}

// Hessian of B^2 = 2 (J^T J + sum_i B_i d^2 B_i). The pulse is linear and adds
// no second-derivative terms.
inline Mat3 b_squared_hessian(const Vec3& p, const TrapCoefficients& c, double gradient, double y_ref) {
  const LocalField f = local_field(p, c, gradient, y_ref);
  const auto second = trap_second_derivatives(p, c);
  Mat3 h;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += f.J(i, a) * f.J(i, b) + f.B[i] * second[i](a, b);
      h(a, b) = 2.0 * s;
    }
  return h;
}

inline Mat3 b_squared_hessian(const Vec3& p, const TrapCoefficients& c, const PulseConfig& pulse, double t) {
  return b_squared_hessian(p, c, pulse.gradient_at(t), pulse.y_ref);
}

struct TrapFrequencies {
  double omega_x = 0.0;
  double omega_y = 0.0;
  double omega_z = 0.0;
};

// omega^2 = -(chi_rho / 2 mu0) d^2(B^2)/d zeta^2 along each axis.
inline TrapFrequencies trap_frequencies(const Vec3& hessian_diagonal, const MaterialParams& material) {
  const double scale = -material.chi_rho / (2.0 * constants::mu0);
  std::array<double, 3> w{};
  for (int i = 0; i < 3; ++i) {
    const double w2 = scale * hessian_diagonal[i];
    if (!(w2 > 0.0)) {
      throw Error(ErrorCode::non_confining,
                  std::string("axis ") + "xyz"[i] + " has omega^2 = " + std::to_string(w2));
    }
    w[i] = std::sqrt(w2);
  }
  return {w[0], w[1], w[2]};
}

inline TrapFrequencies trap_frequencies(const TrapCoefficients& c, const MaterialParams& material,
                                        const Vec3& equilibrium) {
  return trap_frequencies(b_squared_hessian(equilibrium, c, 0.0, 0.0).diagonal(), material);
}

struct EquilibriumOptions {
  double gravity = constants::standard_gravity;
  int max_iterations = 200;
  // Convergence when |grad U| < relative_tolerance * m * g_standard; the
  // weight sets the force scale even when gravity is switched off.
  double relative_tolerance = 1e-12;
};

// Gradient of U = -(chi_rho m / 2 mu0) B_T^2 + m g y.
inline Vec3 trap_potential_gradient(const Vec3& p, const TrapCoefficients& c, const MaterialParams& material,
                                    double gravity) {
  const FieldSample s = sample_from(local_field(p, c, 0.0, 0.0));
  Vec3 g = (-material.chi_rho * material.mass / (2.0 * constants::mu0)) * s.grad_B_squared;
  g.y += material.mass * gravity;
  return g;
}

// Levenberg-damped Newton iteration on grad U.
inline Vec3 find_equilibrium(const TrapCoefficients& c, const MaterialParams& material, const Vec3& initial_guess,
                             const EquilibriumOptions& opt = {}) {
  if (!(std::abs(initial_guess.y) < c.y0))
    throw Error(ErrorCode::validation, "initial guess must satisfy |y| < y0");
  const double hscale = -material.chi_rho * material.mass / (2.0 * constants::mu0);
  const double max_step = 0.1 * c.y0;
  Vec3 p = initial_guess;
  Vec3 grad = trap_potential_gradient(p, c, material, opt.gravity);
  const double tol = opt.relative_tolerance * material.mass * constants::standard_gravity;
  double damping = 0.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (norm(grad) < tol) return p;
    Mat3 h = b_squared_hessian(p, c, 0.0, 0.0);
    double hmax = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        h(i, j) *= hscale;
        hmax = std::max(hmax, std::abs(h(i, j)));
      }
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      Mat3 a = h;
      for (int i = 0; i < 3; ++i) a(i, i) += damping * hmax + 1e-300;
      Vec3 step;
      if (!solve3(a, -grad, step)) {
        damping = std::max(2.0 * damping, 1e-6);
        continue;
      }
      const double len = norm(step);
      if (len > max_step) step *= max_step / len;
      const Vec3 trial = p + step;
      const Vec3 trial_grad = trap_potential_gradient(trial, c, material, opt.gravity);
      if (norm(trial_grad) < norm(grad) || len < 1e-300) {
        p = trial;
        grad = trial_grad;
        damping *= 0.25;
        accepted = true;
      } else {
        damping = std::max(4.0 * damping, 1e-6);
      }
    }
    if (!accepted) break;
  }
  if (norm(grad) < tol) return p;
  throw Error(ErrorCode::no_convergence,
              "equilibrium search stalled with |grad U| = " + std::to_string(norm(grad)) + " N");
}

struct MaxwellResiduals {
  double div = 0.0;
  Vec3 curl;
  double gradient_scale = 0.0;  // Frobenius norm of the Jacobian
};

inline MaxwellResiduals maxwell_residuals(const Mat3& j) {
  MaxwellResiduals r;
  r.div = j.trace();
  r.curl = {j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1)};
  double f = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) f += j(a, b) * j(a, b);
  r.gradient_scale = std::sqrt(f);
  return r;
}

inline MaxwellResiduals maxwell_residuals(const Vec3& p, const TrapCoefficients& c) {
  return maxwell_residuals(trap_jacobian(p, c));
}

} // namespace sglev
