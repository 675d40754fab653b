#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"

namespace sglev {

// Nanocrystal properties. Susceptibility is per unit mass and negative for diamond.
struct MaterialParams {
  double mass = 3.8e-19;     // kg
  double density = 3500.0;   // kg/m^3
  double chi_rho = -6.2e-9;  // m^3/kg
  double epsilon = 5.7;      // relative permittivity
  double g_s = 2.0;          // Lande factor of the NV electron spin

  static MaterialParams nanodiamond() { return {}; }

  // Radius of the equivalent homogeneous sphere.
  double radius() const { return std::cbrt(3.0 * mass / (4.0 * 3.14159265358979323846 * density)); }

  void validate(const std::string& prefix = "material") const {
    auto fail = [&](const char* key, const char* why) {
      throw Error(ErrorCode::validation, prefix + "." + key + ": " + why);
    };
    if (!(mass > 0.0) || !std::isfinite(mass)) fail("mass", "must be positive");
    if (!(density > 0.0) || !std::isfinite(density)) fail("density", "must be positive");
    if (!(chi_rho < 0.0) || !std::isfinite(chi_rho)) fail("chi_rho", "must be negative (diamagnetic)");
    if (!(epsilon > 1.0) || !std::isfinite(epsilon)) fail("epsilon", "must exceed 1");
    if (!(g_s > 0.0) || !std::isfinite(g_s)) fail("g_s", "must be positive");
  }

  friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

} // namespace sglev
