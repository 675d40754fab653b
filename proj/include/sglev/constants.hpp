#pragma once

#include <numbers>

namespace sglev::constants {

// CODATA 2018
inline constexpr double pi = std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double speed_of_light = 299792458.0;     // m/s
inline constexpr double mu0 = 1.25663706212e-6;           // N/A^2
inline constexpr double bohr_magneton = 9.2740100783e-24; // J/T
inline constexpr double standard_gravity = 9.8;           // m/s^2, value used for the levitation scenario

} // namespace sglev::constants
