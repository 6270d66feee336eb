#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rigidhom {

// ---- errors ---------------------------------------------------------------

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedDirection : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfRegime : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AmbiguousProjection : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Internal consistency failure (a bug, not bad input).
struct InvariantBreach : std::logic_error {
  using std::logic_error::logic_error;
};

// ---- small linear algebra -------------------------------------------------

struct Vec2 {
  double x = 0.0, y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double a, double b) : x(a), y(b) {}

  constexpr double operator[](int i) const { return i == 0 ? x : y; }
  constexpr double &operator[](int i) { return i == 0 ? x : y; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
  Vec2 &operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2 &operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm_inf(Vec2 a) { return std::max(std::abs(a.x), std::abs(a.y)); }

/// Row-major 2x2 matrix.
struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  static constexpr Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
  }
  /// Skew matrix with upper-right entry m: [[0, m], [-m, 0]].
  static constexpr Mat2 skew(double m) { return {0, m, -m, 0}; }

  constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
  constexpr double det() const { return a11 * a22 - a12 * a21; }
  constexpr double trace() const { return a11 + a22; }

  friend constexpr Vec2 operator*(const Mat2 &m, Vec2 v) {
    return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
  }
  friend constexpr Mat2 operator*(const Mat2 &m, const Mat2 &n) {
    return {m.a11 * n.a11 + m.a12 * n.a21, m.a11 * n.a12 + m.a12 * n.a22,
            m.a21 * n.a11 + m.a22 * n.a21, m.a21 * n.a12 + m.a22 * n.a22};
  }
  friend constexpr Mat2 operator*(double s, const Mat2 &m) {
    return {s * m.a11, s * m.a12, s * m.a21, s * m.a22};
  }
  friend constexpr Mat2 operator+(const Mat2 &m, const Mat2 &n) {
    return {m.a11 + n.a11, m.a12 + n.a12, m.a21 + n.a21, m.a22 + n.a22};
  }
  friend constexpr Mat2 operator-(const Mat2 &m, const Mat2 &n) {
    return {m.a11 - n.a11, m.a12 - n.a12, m.a21 - n.a21, m.a22 - n.a22};
  }
  friend constexpr bool operator==(const Mat2 &m, const Mat2 &n) {
    return m.a11 == n.a11 && m.a12 == n.a12 && m.a21 == n.a21 && m.a22 == n.a22;
  }
};

inline double frob(const Mat2 &m) {
  return std::sqrt(m.a11 * m.a11 + m.a12 * m.a12 + m.a21 * m.a21 + m.a22 * m.a22);
}
inline double max_abs(const Mat2 &m) {
  return std::max({std::abs(m.a11), std::abs(m.a12), std::abs(m.a21), std::abs(m.a22)});
}
inline Mat2 skew_part(const Mat2 &m) { return 0.5 * (m - m.transpose()); }
inline Mat2 sym_part(const Mat2 &m) { return 0.5 * (m + m.transpose()); }

/// Rotation R_nu with R_nu e2 = nu.
inline Mat2 rotation_to(Vec2 nu) { return {nu.y, nu.x, -nu.x, nu.y}; }

inline constexpr Vec2 e1{1.0, 0.0};
inline constexpr Vec2 e2{0.0, 1.0};

// ---- summation ------------------------------------------------------------

/// Fixed-tree pairwise sum; the result depends only on the order of `v`.
inline double pairwise_sum(const double *v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}
inline double pairwise_sum(const std::vector<double> &v) { return pairwise_sum(v.data(), v.size()); }

inline bool is_unit(Vec2 nu, double tol = 1e-12) { return std::abs(norm(nu) - 1.0) <= tol; }

} // namespace rigidhom
