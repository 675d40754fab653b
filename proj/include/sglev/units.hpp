#pragma once

// Unit-suffixed quantities such as "1.11um", "160us" or "-1.3T", converted to
// SI at the configuration boundary.

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>

#include "errors.hpp"

namespace sglev::units {

enum class Dimension {
  dimensionless,
  length,
  time,
  field,
  gradient,
  mass,
  density,
  susceptibility,
  acceleration,
  velocity,
  time_squared,
};

struct UnitEntry {
  Dimension dimension;
  std::string_view symbol;
  int decade;  // value in SI = value * 10^decade
};

inline constexpr UnitEntry unit_table[] = {
    {Dimension::length, "m", 0},
    {Dimension::length, "mm", -3},
    {Dimension::length, "um", -6},
    {Dimension::length, "\xC2\xB5m", -6},
    {Dimension::length, "nm", -9},
    {Dimension::time, "s", 0},
    {Dimension::time, "ms", -3},
    {Dimension::time, "us", -6},
    {Dimension::time, "\xC2\xB5s", -6},
    {Dimension::time, "ns", -9},
    {Dimension::field, "T", 0},
    {Dimension::field, "mT", -3},
    {Dimension::field, "uT", -6},
    {Dimension::gradient, "T/m", 0},
    {Dimension::gradient, "T/mm", 3},
    {Dimension::gradient, "T/um", 6},
    {Dimension::mass, "kg", 0},
    {Dimension::mass, "g", -3},
    {Dimension::density, "kg/m3", 0},
    {Dimension::density, "kg/m^3", 0},
    {Dimension::density, "g/cm3", 3},
    {Dimension::susceptibility, "m3/kg", 0},
    {Dimension::susceptibility, "m^3/kg", 0},
    {Dimension::acceleration, "m/s2", 0},
    {Dimension::acceleration, "m/s^2", 0},
    {Dimension::velocity, "m/s", 0},
    {Dimension::velocity, "mm/s", -3},
    {Dimension::velocity, "um/s", -6},
    {Dimension::velocity, "nm/s", -9},
    {Dimension::time_squared, "s2", 0},
    {Dimension::time_squared, "s^2", 0},
};

// Canonical SI suffix used when writing a quantity back out.
constexpr std::string_view si_symbol(Dimension d) {
  switch (d) {
    case Dimension::dimensionless: return "";
    case Dimension::length: return "m";
    case Dimension::time: return "s";
    case Dimension::field: return "T";
    case Dimension::gradient: return "T/m";
    case Dimension::mass: return "kg";
    case Dimension::density: return "kg/m3";
    case Dimension::susceptibility: return "m3/kg";
    case Dimension::acceleration: return "m/s2";
    case Dimension::velocity: return "m/s";
    case Dimension::time_squared: return "s2";
  }
  return "";
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Reparses a decimal literal with its exponent shifted by `decade`, so that
// "50um" gives exactly the double nearest 50e-6.
inline double rescale(std::string_view number, int decade) {
  std::string text(number);
  int exponent = 0;
  if (const auto e = text.find_first_of("eE"); e != std::string::npos) {
    const char* first = text.data() + e + 1;
    if (*first == '+') ++first;
    std::from_chars(first, text.data() + text.size(), exponent);
    text.erase(e);
  }
  text += 'e' + std::to_string(exponent + decade);
  double out = 0.0;
  const char* begin = text.data();
  if (*begin == '+') ++begin;
  std::from_chars(begin, text.data() + text.size(), out);
  return out;
}

// Parses "<number><unit>" (whitespace between them allowed). Dimensional
// quantities must carry a unit; a bare number is rejected.
inline double parse_quantity(std::string_view text, Dimension expected, std::string_view key = "value") {
  const std::string_view s = trim(text);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  // from_chars rejects a leading '+'
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr == begin)
    throw Error(ErrorCode::parse, std::string(key) + ": expected a number, got '" + std::string(s) + "'");
  const std::string_view unit = trim(std::string_view(ptr, static_cast<std::size_t>(end - ptr)));
  if (expected == Dimension::dimensionless) {
    if (!unit.empty()) throw Error(ErrorCode::parse, std::string(key) + ": unexpected unit '" + std::string(unit) + "'");
    return value;
  }
  if (unit.empty())
    throw Error(ErrorCode::parse, std::string(key) + ": missing unit (expected e.g. " +
                                      std::string(si_symbol(expected)) + ")");
  for (const auto& u : unit_table)
    if (u.dimension == expected && u.symbol == unit)
      return u.decade == 0 ? value : rescale(s.substr(0, static_cast<std::size_t>(ptr - s.data())), u.decade);
  throw Error(ErrorCode::parse, std::string(key) + ": unit '" + std::string(unit) + "' does not fit this quantity");
}

// Shortest text that reads back to exactly the same double, plus the SI suffix.
inline std::string format_quantity(double value, Dimension d) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr) + std::string(si_symbol(d));
}

} // namespace sglev::units
