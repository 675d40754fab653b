#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "golden_values.hpp"
#include "sglev/constants.hpp"
#include "sglev/fields.hpp"

using namespace sglev;

namespace {

const Vec3 kProbe{1e-6, -1.11e-6, 0.1e-6};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Vec3 fd_grad_b2(const TrapModel& trap, const Vec3& p, double gradient = 0.0, double y_ref = 0.0, double h = 1e-9) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 e{};
    e[i] = h;
    const auto bp = local_field(p + e, trap, gradient, y_ref).B;
    const auto bm = local_field(p - e, trap, gradient, y_ref).B;
    g[i] = (dot(bp, bp) - dot(bm, bm)) / (2.0 * h);
  }
  return g;
}

} // namespace

TEST(TrapField, MatchesTermByTermOracle) {
  const Vec3 b = eval_trap(kProbe, TrapCoefficients::paper_default());
  EXPECT_LT(rel(b.x, golden::trap_B_x), 1e-13);
  EXPECT_LT(rel(b.y, golden::trap_B_y), 1e-13);
  EXPECT_LT(rel(b.z, golden::trap_B_z), 1e-12);
}

TEST(TrapField, SampleCarriesSquareAndGradient) {
  const PulseConfig off{1e5, -1.11e-6, {}};
  const FieldSample s = eval_total(kProbe, TrapCoefficients::paper_default(), off, 0.0);
  EXPECT_LT(rel(s.B_squared, golden::trap_B2), 1e-13);
  EXPECT_LT(rel(s.grad_B_squared.x, golden::trap_gradB2_x), 1e-12);
  EXPECT_LT(rel(s.grad_B_squared.y, golden::trap_gradB2_y), 1e-12);
  EXPECT_LT(rel(s.grad_B_squared.z, golden::trap_gradB2_z), 1e-9);
}

TEST(TrapField, VanishesAtOrigin) {
  EXPECT_EQ(eval_trap({0, 0, 0}, TrapCoefficients::paper_default()), (Vec3{0, 0, 0}));
}

TEST(TrapField, JacobianAndHessianMatchFiniteDifferences) {
  const TrapModel trap(TrapCoefficients::paper_default());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20e-6, 20e-6);
  for (int k = 0; k < 20; ++k) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    const Mat3 j = trap.jacobian(p);
    const auto second = trap.second_derivatives(p);
    const double h = 1e-8;
    for (int c = 0; c < 3; ++c) {
      Vec3 e{};
      e[c] = h;
      const Vec3 col = (1.0 / (2.0 * h)) * (trap.field(p + e) - trap.field(p - e));
      const Mat3 jp = trap.jacobian(p + e), jm = trap.jacobian(p - e);
      for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(j(i, c), col[i], 1e-6 * (std::abs(j(i, c)) + 1.0));
        for (int r = 0; r < 3; ++r)
          EXPECT_NEAR(second[i](r, c), (jp(i, r) - jm(i, r)) / (2.0 * h), 1e-4 * (std::abs(second[i](r, c)) + 1.0));
      }
    }
  }
}

TEST(TrapField, GradientOfSquareMatchesFiniteDifferencesWithPulse) {
  const TrapModel trap(TrapCoefficients::paper_default());
  for (double gradient : {0.0, 1e5, -1e5}) {
    const Vec3 p{2e-6, -3e-6, 1e-6};
    const Vec3 analytic = sample_from(local_field(p, trap, gradient, -1.11e-6)).grad_B_squared;
    const Vec3 fd = fd_grad_b2(trap, p, gradient, -1.11e-6);
    EXPECT_LT(norm(analytic - fd) / norm(analytic), 1e-7) << gradient;
  }
}

TEST(TrapField, HessianOfSquareMatchesFiniteDifferences) {
  const TrapCoefficients c = TrapCoefficients::paper_default();
  const TrapModel trap(c);
  const Vec3 p{1e-6, -15e-6, 0.5e-6};
  const Mat3 h = b_squared_hessian(p, c, 5e4, -1.11e-6);
  const double step = 1e-9;
  for (int j = 0; j < 3; ++j) {
    Vec3 e{};
    e[j] = step;
    const Vec3 gp = sample_from(local_field(p + e, trap, 5e4, -1.11e-6)).grad_B_squared;
    const Vec3 gm = sample_from(local_field(p - e, trap, 5e4, -1.11e-6)).grad_B_squared;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(h(i, j), (gp[i] - gm[i]) / (2.0 * step), 1e-6 * std::abs(h(i, i)) + 1.0);
  }
}

TEST(PulseField, OffOutsideWindowsAndLinearInside) {
  const PulseConfig pulse{1e5, -1.11e-6, {{0.0, 1e-4, 1.0}}};
  const Vec3 p{0.0, -1.11e-6 - 1e-6, 2e-6};
  const Vec3 on = eval_pulse(p, pulse, 5e-5);
  EXPECT_DOUBLE_EQ(on.x, 0.0);
  EXPECT_NEAR(on.y, 0.1, 1e-15);
  EXPECT_NEAR(on.z, 0.2, 1e-15);
  EXPECT_EQ(eval_pulse(p, pulse, 1e-4), (Vec3{0, 0, 0}));  // windows are half open
  EXPECT_EQ(eval_pulse(p, pulse, -1e-9), (Vec3{0, 0, 0}));
  EXPECT_EQ(eval_pulse({0.0, -1.11e-6, 0.0}, pulse, 0.0), (Vec3{0, 0, 0}));
}

TEST(PulseField, ReversedWindowFlipsSign) {
  const PulseConfig pulse{1e5, 0.0, {{0.0, 1.0, 1.0}, {2.0, 3.0, -1.0}}};
  EXPECT_DOUBLE_EQ(pulse.gradient_at(0.5), 1e5);
  EXPECT_DOUBLE_EQ(pulse.gradient_at(1.5), 0.0);
  EXPECT_DOUBLE_EQ(pulse.gradient_at(2.5), -1e5);
}

TEST(PulseField, DominantPulseGradientOfSquare) {
  const TrapCoefficients none{0.0, 0.0, 0.0, 75e-6};
  const double eta = 1e5, y_ref = 1e-6;
  const Vec3 p{0.0, -4e-6, 3e-6};
  const Vec3 g = sample_from(local_field(p, none, eta, y_ref)).grad_B_squared;
  EXPECT_NEAR(g.x, 0.0, 1e-12);
  EXPECT_NEAR(g.y, -2.0 * eta * eta * (y_ref - p.y), 1e-6);
  EXPECT_NEAR(g.z, 2.0 * eta * eta * p.z, 1e-6);
}

TEST(Maxwell, PulseIsExactlyFreeOfSources) {
  const auto r = maxwell_residuals(pulse_jacobian(98831.0));
  EXPECT_EQ(r.div, 0.0);
  EXPECT_EQ(r.curl, (Vec3{0, 0, 0}));
}

TEST(Maxwell, TrapResidualsAtRoundoff) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30e-6, 30e-6);
  for (int k = 0; k < 50; ++k) {
    const auto r = maxwell_residuals({u(rng), u(rng), u(rng)}, TrapCoefficients::paper_default());
    EXPECT_LT(std::abs(r.div), 1e-12 * r.gradient_scale);
    EXPECT_LT(norm(r.curl), 1e-12 * r.gradient_scale);
  }
}

TEST(Equilibrium, MatchesOracleWithGravity) {
  const Vec3 eq = find_equilibrium(TrapCoefficients::paper_default(), MaterialParams{}, {0.0, -1.11e-6, 0.0});
  EXPECT_LT(rel(eq.y, golden::equilibrium_y), 1e-10);
  EXPECT_NEAR(eq.x, 0.0, 1e-15);
  EXPECT_NEAR(eq.z, 0.0, 1e-15);
}

TEST(Equilibrium, WithoutGravityAtTheFieldZero) {
  EquilibriumOptions opt;
  opt.gravity = 0.0;
  const Vec3 eq = find_equilibrium(TrapCoefficients::paper_default(), MaterialParams{}, {0.0, -1.11e-6, 0.0}, opt);
  EXPECT_NEAR(eq.y, golden::equilibrium_y_no_gravity, 1e-12);
  const Vec3 with_g = find_equilibrium(TrapCoefficients::paper_default(), MaterialParams{}, {0.0, -1.11e-6, 0.0});
  EXPECT_LT(with_g.y, eq.y);
}

TEST(Equilibrium, UniformScalingWithoutGravityKeepsPosition) {
  EquilibriumOptions opt;
  opt.gravity = 0.0;
  TrapCoefficients c{-1.3, 0.0183, 0.72, 75e-6};
  TrapCoefficients c2{-2.6, 0.0366, 1.44, 75e-6};
  const Vec3 guess{0.5e-6, -3e-6, 0.2e-6};
  const Vec3 a = find_equilibrium(c, MaterialParams{}, guess, opt);
  const Vec3 b = find_equilibrium(c2, MaterialParams{}, guess, opt);
  EXPECT_LT(norm(a - b), 1e-12);
}

TEST(Equilibrium, RejectsGuessOutsideTrap) {
  try {
    find_equilibrium(TrapCoefficients::paper_default(), MaterialParams{}, {0.0, -80e-6, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
  }
}

TEST(Frequencies, MatchNumericHessianOracle) {
  const auto c = TrapCoefficients::paper_default();
  const Vec3 eq = find_equilibrium(c, MaterialParams{}, {0.0, -1.11e-6, 0.0});
  const auto w = trap_frequencies(c, MaterialParams{}, eq);
  EXPECT_LT(rel(w.omega_x, golden::omega_x), 1e-9);
  EXPECT_LT(rel(w.omega_y, golden::omega_y), 1e-9);
  EXPECT_LT(rel(w.omega_z, golden::omega_z), 1e-9);
  // Regression value of the y/z frequency ratio at the default preset.
  EXPECT_NEAR(w.omega_y / w.omega_z, 9.5209, 1e-4);
}

TEST(Frequencies, PurePulseWell) {
  const MaterialParams m;
  const double eta = 98831.0;
  const TrapCoefficients none{0.0, 0.0, 0.0, 75e-6};
  const Mat3 h = b_squared_hessian({0.0, 1e-6, 0.0}, none, eta, 0.0);
  const double scale = -m.chi_rho / (2.0 * constants::mu0);
  const double expected = eta * std::sqrt(-m.chi_rho / constants::mu0);
  EXPECT_LT(rel(std::sqrt(scale * h(1, 1)), expected), 1e-14);
  EXPECT_LT(rel(std::sqrt(scale * h(2, 2)), expected), 1e-14);
  EXPECT_EQ(h(0, 0), 0.0);
}

TEST(Frequencies, NonConfiningAxisThrows) {
  try {
    trap_frequencies(Vec3{1.0, -1.0, 1.0}, MaterialParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_confining);
  }
}
