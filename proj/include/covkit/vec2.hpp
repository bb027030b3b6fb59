#pragma once

#include <array>
#include <cmath>
#include <ostream>

namespace covkit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  constexpr Vec2& operator/=(double s) { x /= s; y /= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

  friend std::ostream& operator<<(std::ostream& os, Vec2 v) {
    return os << '(' << v.x << ", " << v.y << ')';
  }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr double distance2(Vec2 a, Vec2 b) { return norm2(a - b); }

inline Vec2 rotate(Vec2 v, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Symmetric-or-general 2x2 matrix, row major: [a b; c d].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double p, double q) { return {p, 0.0, 0.0, q}; }
  static Mat2 rotation(double theta) {
    const double cs = std::cos(theta), sn = std::sin(theta);
    return {cs, -sn, sn, cs};
  }

  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }
  constexpr Mat2 transposed() const { return {a, c, b, d}; }
  constexpr Mat2 inverse() const {
    const double k = 1.0 / det();
    return {d * k, -b * k, -c * k, a * k};
  }

  friend constexpr Mat2 operator+(const Mat2& m, const Mat2& n) {
    return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
  }
  friend constexpr Mat2 operator-(const Mat2& m, const Mat2& n) {
    return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
  }
  friend constexpr Mat2 operator*(const Mat2& m, double s) { return {m.a * s, m.b * s, m.c * s, m.d * s}; }
  friend constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }
  friend constexpr Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
  }
  friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) { return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y}; }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

  /// R * M * R^T
  Mat2 rotated(double theta) const {
    const Mat2 r = rotation(theta);
    return r * (*this) * r.transposed();
  }

  bool is_symmetric(double tol = 1e-12) const { return std::abs(b - c) <= tol * (1.0 + std::abs(b)); }

  /// Cholesky succeeds iff symmetric positive definite.
  bool is_spd() const { return is_symmetric() && a > 0.0 && det() > 0.0; }

  /// Lower Cholesky factor [l11 0; l21 l22]; requires is_spd().
  Mat2 cholesky() const {
    const double l11 = std::sqrt(a);
    const double l21 = c / l11;
    const double l22 = std::sqrt(d - l21 * l21);
    return {l11, 0.0, l21, l22};
  }

  /// Eigenvalues of a symmetric matrix, descending.
  std::array<double, 2> eigenvalues() const {
    const double m = 0.5 * (a + d);
    const double r = std::hypot(0.5 * (a - d), b);
    return {m + r, m - r};
  }

  /// Angle of the principal (largest-eigenvalue) axis of a symmetric matrix, in [0, pi).
  double principal_angle() const {
    double t = 0.5 * std::atan2(2.0 * b, a - d);
    if (t < 0.0) t += M_PI;
    return t;
  }
};

}  // namespace covkit
