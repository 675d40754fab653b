#pragma once

#include <array>
#include <cmath>
#include <ostream>

namespace sglev {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
  }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline bool all_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Row-major 3x3; for a field Jacobian, m[i][j] = dB_i/dx_j.
struct Mat3 {
  std::array<std::array<double, 3>, 3> m{};

  constexpr double operator()(int i, int j) const { return m[i][j]; }
  constexpr double& operator()(int i, int j) { return m[i][j]; }

  constexpr Vec3 transpose_times(const Vec3& v) const {
    Vec3 r;
    for (int j = 0; j < 3; ++j) r[j] = m[0][j] * v.x + m[1][j] * v.y + m[2][j] * v.z;
    return r;
  }
  constexpr double trace() const { return m[0][0] + m[1][1] + m[2][2]; }
  constexpr Vec3 diagonal() const { return {m[0][0], m[1][1], m[2][2]}; }
};

// Solves (a) u = b by Cramer's rule; returns false for a singular matrix.
inline bool solve3(const Mat3& a, const Vec3& b, Vec3& u) {
  const auto& m = a.m;
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (det == 0.0 || !std::isfinite(det)) return false;
  for (int c = 0; c < 3; ++c) {
    Mat3 t = a;
    for (int r = 0; r < 3; ++r) t.m[r][c] = b[r];
    const auto& n = t.m;
    u[c] = (n[0][0] * (n[1][1] * n[2][2] - n[1][2] * n[2][1]) -
            n[0][1] * (n[1][0] * n[2][2] - n[1][2] * n[2][0]) +
            n[0][2] * (n[1][0] * n[2][1] - n[1][1] * n[2][0])) /
           det;
  }
  return true;
}

} // namespace sglev
