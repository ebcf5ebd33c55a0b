#pragma once

#include <cmath>

namespace parabem {

// Second-order forward-mode jet in two variables (u, v). Built-in charts are
// written once as templates and evaluated on Jet2 to get exact first and
// second derivatives.
struct Jet2 {
  double v = 0, du = 0, dv = 0, duu = 0, duv = 0, dvv = 0;

  Jet2() = default;
  Jet2(double c) : v(c) {}  // NOLINT(google-explicit-constructor)
  Jet2(double val, double d_u, double d_v, double d_uu, double d_uv,
       double d_vv)
      : v(val), du(d_u), dv(d_v), duu(d_uu), duv(d_uv), dvv(d_vv) {}

  static Jet2 var_u(double x) { return {x, 1, 0, 0, 0, 0}; }
  static Jet2 var_v(double x) { return {x, 0, 1, 0, 0, 0}; }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.du + b.du, a.dv + b.dv, a.duu + b.duu, a.duv + b.duv,
          a.dvv + b.dvv};
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.du - b.du, a.dv - b.dv, a.duu - b.duu, a.duv - b.duv,
          a.dvv - b.dvv};
}
inline Jet2 operator-(const Jet2& a) {
  return {-a.v, -a.du, -a.dv, -a.duu, -a.duv, -a.dvv};
}
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v,
          a.du * b.v + a.v * b.du,
          a.dv * b.v + a.v * b.dv,
          a.duu * b.v + 2 * a.du * b.du + a.v * b.duu,
          a.duv * b.v + a.du * b.dv + a.dv * b.du + a.v * b.duv,
          a.dvv * b.v + 2 * a.dv * b.dv + a.v * b.dvv};
}
inline Jet2 operator*(double s, const Jet2& a) {
  return {s * a.v, s * a.du, s * a.dv, s * a.duu, s * a.duv, s * a.dvv};
}
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }

// Chain rule for a scalar function f with f(a.v) = f0, f' = f1, f'' = f2.
inline Jet2 compose(const Jet2& a, double f0, double f1, double f2) {
  return {f0,
          f1 * a.du,
          f1 * a.dv,
          f2 * a.du * a.du + f1 * a.duu,
          f2 * a.du * a.dv + f1 * a.duv,
          f2 * a.dv * a.dv + f1 * a.dvv};
}

inline Jet2 inverse(const Jet2& a) {
  const double r = 1.0 / a.v;
  return compose(a, r, -r * r, 2 * r * r * r);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inverse(b); }
inline Jet2 operator/(const Jet2& a, double s) { return (1.0 / s) * a; }

inline Jet2 sqrt(const Jet2& a) {
  const double r = std::sqrt(a.v);
  return compose(a, r, 0.5 / r, -0.25 / (r * a.v));
}
inline Jet2 tan(const Jet2& a) {
  const double t = std::tan(a.v);
  const double sec2 = 1 + t * t;
  return compose(a, t, sec2, 2 * t * sec2);
}
inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, c, -s, -c);
}

}  // namespace parabem
