#pragma once

// Interaction potentials between the two nanocrystals, trajectory-integrated
// entanglement phases and the spin-correlation entanglement witness.

#include <cmath>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "interferometry.hpp"
#include "material.hpp"

namespace sglev {

enum class Interaction { casimir_polder, dipole_dipole };

constexpr std::string_view to_string(Interaction i) {
  return i == Interaction::casimir_polder ? "casimir_polder" : "dipole_dipole";
}

// Retarded Casimir-Polder energy of two identical dielectric spheres.
inline double u_cp(double d, const MaterialParams& m) {
  if (!(d > 0.0)) throw Error(ErrorCode::domain, "separation must be positive");
  const double volume_factor = 3.0 * m.mass / (4.0 * constants::pi * m.density);
  const double d7 = std::pow(d, 7);
  return -(23.0 * constants::hbar * constants::speed_of_light / (4.0 * constants::pi)) *
         ((m.epsilon - 1.0) / (m.epsilon + 2.0)) * volume_factor * volume_factor / d7;
}

// Interaction of the magnetic dipoles induced by a field of magnitude B_mag.
inline double u_dd(double d, double B_mag, const MaterialParams& m) {
  if (!(d > 0.0)) throw Error(ErrorCode::domain, "separation must be positive");
  if (!(B_mag >= 0.0)) throw Error(ErrorCode::domain, "field magnitude must be non-negative");
  return 2.0 * m.chi_rho * m.chi_rho * m.mass * m.mass * B_mag * B_mag /
         (4.0 * constants::pi * constants::mu0 * d * d * d);
}

struct PhaseOptions {
  // Use one field magnitude for the whole run instead of |B| along the trajectories.
  std::optional<double> frozen_field;
};

// One trapezoid panel of the phase integral. Rates are (U(d_far) - U(d_close)) / hbar.
struct PhasePanel {
  double t_begin = 0.0;
  double t_end = 0.0;
  double rate_begin = 0.0;  // rad/s
  double rate_end = 0.0;

  double contribution() const { return 0.5 * (t_end - t_begin) * (rate_begin + rate_end); }
};

struct PhaseResult {
  Interaction interaction = Interaction::casimir_polder;
  double delta_phi = 0.0;  // rad
  std::vector<PhasePanel> breakdown;

  // Phase accumulated over panels [first, last).
  double partial(std::size_t first, std::size_t last) const {
    double s = 0.0;
    for (std::size_t k = first; k < last && k < breakdown.size(); ++k) s += breakdown[k].contribution();
    return s;
  }
};

namespace detail {

// |B|^2 at a particle, in its own trap frame, for a given pulse gradient.
inline double field_squared(const Interferometer& ifo, const TrapModel& trap, const Vec3& p, double gradient) {
  const Vec3 b = trap.field(p) + pulse_field(p, gradient, ifo.pulse.y_ref);
  return dot(b, b);
}

} // namespace detail

// Delta phi = (1/hbar) int_0^T [U(d_far(t)) - U(d_close(t))] dt, by trapezoids on
// the shared trajectory grid. A pulse switch falls on a grid point; each panel
// uses the pulse state of its interior on both of its ends.
inline PhaseResult phase_integral(const InterferometerPair& pair, Interaction interaction,
                                  const PhaseOptions& opt = {}) {
  check_shared_grid(pair.left, pair.right);
  const auto n = pair.separations.size();
  if (n != pair.left.plus_arm.samples.size()) throw Error(ErrorCode::grid_mismatch, "separations do not cover the grid");
  PhaseResult out;
  out.interaction = interaction;
  if (n < 2) return out;

  const TrapModel left_trap(pair.left.trap);
  const TrapModel right_trap(pair.right.trap);
  const MaterialParams& mat = pair.left.material;

  auto rate = [&](std::size_t k, double gradient_left, double gradient_right) {
    const auto& s = pair.separations[k];
    if (interaction == Interaction::casimir_polder) return (u_cp(s.d_far, mat) - u_cp(s.d_close, mat)) / constants::hbar;
    // The pairings are referenced to the left + arm: (+,+) for same spin and
    // (+,-) for opposite spin. The field entering U_dd for a pairing is the mean
    // of |B|^2 at its two particles.
    double b2_close, b2_far;
    if (opt.frozen_field) {
      b2_close = b2_far = *opt.frozen_field * *opt.frozen_field;
    } else {
      const double lp = detail::field_squared(pair.left, left_trap, pair.left.plus_arm.samples[k].position, gradient_left);
      const double rp = detail::field_squared(pair.right, right_trap, pair.right.plus_arm.samples[k].position, gradient_right);
      const double rm = detail::field_squared(pair.right, right_trap, pair.right.minus_arm.samples[k].position, gradient_right);
      const double same = 0.5 * (lp + rp);
      const double cross = 0.5 * (lp + rm);
      const auto p = pairing_distances(pair, k);
      const bool same_is_close = p.plus_plus <= p.plus_minus;
      b2_close = same_is_close ? same : cross;
      b2_far = same_is_close ? cross : same;
    }
    return (u_dd(s.d_far, std::sqrt(b2_far), mat) - u_dd(s.d_close, std::sqrt(b2_close), mat)) / constants::hbar;
  };

  out.breakdown.reserve(n - 1);
  const auto& grid = pair.left.plus_arm.samples;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double t0 = grid[k].t;
    const double t1 = grid[k + 1].t;
    const double mid = 0.5 * (t0 + t1);
    const double gl = pair.left.pulse.gradient_at(mid);
    const double gr = pair.right.pulse.gradient_at(mid);
    PhasePanel panel{t0, t1, rate(k, gl, gr), rate(k + 1, gl, gr)};
    out.delta_phi += panel.contribution();
    out.breakdown.push_back(panel);
  }
  return out;
}

struct DecoherenceParams {
  double gamma_n = 0.0;  // noise, rate x interferometer time
  double gamma_d = 0.0;  // damping, rate x interferometer time
};

struct WitnessResult {
  std::optional<Interaction> interaction;
  double delta_phi = 0.0;
  DecoherenceParams gamma;
  double W = 0.0;
  bool entangled = false;
};

// W = 1 - (2 e^{-(G_n + G_d)/2} sin(dphi) + (e^{-2 G_n - G_d} + 1) / 2); W < 0 witnesses entanglement.
inline WitnessResult witness(double delta_phi, const DecoherenceParams& g,
                             std::optional<Interaction> interaction = std::nullopt) {
  if (g.gamma_n < 0.0 || g.gamma_d < 0.0) throw Error(ErrorCode::domain, "decoherence exponents must be non-negative");
  WitnessResult r;
  r.interaction = interaction;
  r.delta_phi = delta_phi;
  r.gamma = g;
  r.W = 1.0 - (2.0 * std::exp(-0.5 * (g.gamma_n + g.gamma_d)) * std::sin(delta_phi) +
               0.5 * (std::exp(-2.0 * g.gamma_n - g.gamma_d) + 1.0));
  r.entangled = r.W < 0.0;
  return r;
}

// Splits a total decoherence exponent between damping and noise.
inline DecoherenceParams split_gamma(double total, double damping_fraction) {
  return {(1.0 - damping_fraction) * total, damping_fraction * total};
}

struct GammaRow {
  double gamma = 0.0;
  double W = 0.0;
  bool entangled = false;
};

struct DecoherenceSweep {
  std::vector<GammaRow> rows;
  std::optional<double> threshold;  // total Gamma where W crosses zero
};

// Zero of W in total Gamma by bisection, if W starts negative.
inline std::optional<double> witness_threshold(double delta_phi, double damping_fraction = 0.0) {
  auto w = [&](double g) { return witness(delta_phi, split_gamma(g, damping_fraction)).W; };
  if (!(w(0.0) < 0.0)) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  while (w(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return std::nullopt;
  }
  for (int it = 0; it < 300 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (w(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline DecoherenceSweep sweep_decoherence(double delta_phi, const std::vector<double>& gamma_grid,
                                          double damping_fraction = 0.0) {
  if (damping_fraction < 0.0 || damping_fraction > 1.0)
    throw Error(ErrorCode::domain, "damping fraction must lie in [0, 1]");
  DecoherenceSweep s;
  s.rows.reserve(gamma_grid.size());
  for (double g : gamma_grid) {
    const auto r = witness(delta_phi, split_gamma(g, damping_fraction));
    s.rows.push_back({g, r.W, r.entangled});
  }
  s.threshold = witness_threshold(delta_phi, damping_fraction);
  return s;
}

struct DistanceRow {
  double d = 0.0;
  double dphi_cp = 0.0;
  double dphi_dd = 0.0;
};

struct DistanceSweep {
  std::vector<DistanceRow> rows;
  std::optional<double> crossover;  // d where |dphi_dd| = |dphi_cp|
};

inline DistanceRow phases_at(const Interferometer& one, double d, const PhaseOptions& opt = {}) {
  const auto pair = pair_interferometers(one, d);
  return {d, phase_integral(pair, Interaction::casimir_polder, opt).delta_phi,
          phase_integral(pair, Interaction::dipole_dipole, opt).delta_phi};
}

// Separations must keep the two crystals from touching.
inline void check_sweep_distance(const Interferometer& one, double d) {
  const double contact = 2.0 * one.material.radius();
  if (!(d > contact))
    throw Error(ErrorCode::domain, "separation " + std::to_string(d) + " m does not exceed the particle diameter");
}

// Finds d* with |dphi_dd(d*)| = |dphi_cp(d*)| by bisection on the log ratio,
// starting from a sign change between two sweep rows.
inline std::optional<double> find_crossover(const Interferometer& one, const std::vector<DistanceRow>& rows,
                                            const PhaseOptions& opt = {}) {
  auto log_ratio = [](const DistanceRow& r) { return std::log(std::abs(r.dphi_dd)) - std::log(std::abs(r.dphi_cp)); };
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double a = log_ratio(rows[k]);
    const double b = log_ratio(rows[k + 1]);
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (a == 0.0) return rows[k].d;
    if ((a < 0.0) == (b < 0.0)) continue;
    double lo = rows[k].d, hi = rows[k + 1].d;
    double flo = a;
    for (int it = 0; it < 80 && (hi - lo) > 1e-12 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = log_ratio(phases_at(one, mid, opt));
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

inline DistanceSweep sweep_distance(const Interferometer& one, const std::vector<double>& d_values,
                                    const PhaseOptions& opt = {}) {
  DistanceSweep s;
  s.rows.reserve(d_values.size());
  for (double d : d_values) {
    check_sweep_distance(one, d);
    s.rows.push_back(phases_at(one, d, opt));
  }
  s.crossover = find_crossover(one, s.rows, opt);
  return s;
}

// Least-squares slope of log|y| against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double lx = std::log(x[k]);
    const double ly = std::log(std::abs(y[k]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

} // namespace sglev
