#pragma once

// Second-order forward-mode automatic differentiation over a fixed number of
// independent variables. Used for closed-form fields (exact solutions, level
// sets, velocities) where value, gradient and Hessian are all needed.

#include <array>
#include <cmath>
#include <cstddef>

namespace xipinn {

/// Number of independent variables a Jet2 tracks: up to three spatial
/// coordinates plus time.
inline constexpr std::size_t kJetVars = 4;

class Jet2 {
 public:
  static constexpr std::size_t N = kJetVars;

  double v = 0.0;
  std::array<double, N> g{};
  std::array<double, N * N> h{};

  constexpr Jet2() = default;
  constexpr Jet2(double value) : v(value) {}  // NOLINT(implicit constant)

  static Jet2 variable(double value, std::size_t index) {
    Jet2 j(value);
    j.g[index] = 1.0;
    return j;
  }

  double hess(std::size_t i, std::size_t j) const { return h[i * N + j]; }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) g[i] += o.g[i];
    for (std::size_t i = 0; i < N * N; ++i) h[i] += o.h[i];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) g[i] -= o.g[i];
    for (std::size_t i = 0; i < N * N; ++i) h[i] -= o.h[i];
    return *this;
  }
  Jet2& operator*=(double s) {
    v *= s;
    for (auto& x : g) x *= s;
    for (auto& x : h) x *= s;
    return *this;
  }
  Jet2& operator*=(const Jet2& o);
  Jet2& operator/=(const Jet2& o);

  /// this += s * o without temporaries.
  void axpy(double s, const Jet2& o) {
    v += s * o.v;
    for (std::size_t i = 0; i < N; ++i) g[i] += s * o.g[i];
    for (std::size_t i = 0; i < N * N; ++i) h[i] += s * o.h[i];
  }
};

/// Product that treats 0 * inf as 0, so constant jets stay finite when a
/// derivative of the outer function is singular at the evaluation point.
inline double jet_mul(double coef, double d) { return d == 0.0 ? 0.0 : coef * d; }

/// Apply a scalar function with known first and second derivative at x.v.
inline Jet2 chain(const Jet2& x, double f, double df, double d2f) {
  Jet2 r;
  r.v = f;
  for (std::size_t i = 0; i < Jet2::N; ++i) r.g[i] = jet_mul(df, x.g[i]);
  for (std::size_t i = 0; i < Jet2::N; ++i)
    for (std::size_t j = 0; j < Jet2::N; ++j)
      r.h[i * Jet2::N + j] =
          jet_mul(df, x.h[i * Jet2::N + j]) + jet_mul(d2f, x.g[i] * x.g[j]);
  return r;
}

/// Two-argument chain rule: f(a, b) with partials fa, fb and second partials.
inline Jet2 chain2(const Jet2& a, const Jet2& b, double f, double fa, double fb,
                   double faa, double fab, double fbb) {
  Jet2 r;
  r.v = f;
  constexpr auto N = Jet2::N;
  for (std::size_t i = 0; i < N; ++i) r.g[i] = jet_mul(fa, a.g[i]) + jet_mul(fb, b.g[i]);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      r.h[i * N + j] = jet_mul(fa, a.h[i * N + j]) + jet_mul(fb, b.h[i * N + j]) +
                       jet_mul(faa, a.g[i] * a.g[j]) + jet_mul(fbb, b.g[i] * b.g[j]) +
                       jet_mul(fab, a.g[i] * b.g[j] + b.g[i] * a.g[j]);
  return r;
}

inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator-(Jet2 a) { return a *= -1.0; }
inline Jet2 operator*(Jet2 a, double s) { return a *= s; }
inline Jet2 operator*(double s, Jet2 a) { return a *= s; }
inline Jet2 operator+(Jet2 a, double s) { a.v += s; return a; }
inline Jet2 operator+(double s, Jet2 a) { a.v += s; return a; }
inline Jet2 operator-(Jet2 a, double s) { a.v -= s; return a; }
inline Jet2 operator-(double s, Jet2 a) { a *= -1.0; a.v += s; return a; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return chain2(a, b, a.v * b.v, b.v, a.v, 0.0, 1.0, 0.0);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double ib = 1.0 / b.v;
  const double f = a.v * ib;
  return chain2(a, b, f, ib, -f * ib, 0.0, -ib * ib, 2.0 * f * ib * ib);
}
inline Jet2 operator/(Jet2 a, double s) { return a *= (1.0 / s); }
inline Jet2 operator/(double s, const Jet2& b) {
  const double ib = 1.0 / b.v;
  return chain(b, s * ib, -s * ib * ib, 2.0 * s * ib * ib * ib);
}

inline Jet2& Jet2::operator*=(const Jet2& o) { return *this = *this * o; }
inline Jet2& Jet2::operator/=(const Jet2& o) { return *this = *this / o; }

inline Jet2 sin(const Jet2& x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return chain(x, s, c, -s);
}
inline Jet2 cos(const Jet2& x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return chain(x, c, -s, -c);
}
inline Jet2 exp(const Jet2& x) {
  const double e = std::exp(x.v);
  return chain(x, e, e, e);
}
inline Jet2 sqrt(const Jet2& x) {
  const double s = std::sqrt(x.v);
  return chain(x, s, 0.5 / s, -0.25 / (s * x.v));
}
/// x^p for real p; requires x > 0 unless p is a small non-negative integer.
inline Jet2 pow(const Jet2& x, double p) {
  const double f = std::pow(x.v, p);
  const double df = p * std::pow(x.v, p - 1.0);
  const double d2f = p * (p - 1.0) * std::pow(x.v, p - 2.0);
  return chain(x, f, df, d2f);
}
inline Jet2 atan2(const Jet2& y, const Jet2& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  const double r4 = r2 * r2;
  return chain2(y, x, std::atan2(y.v, x.v), x.v / r2, -y.v / r2,
                -2.0 * x.v * y.v / r4, (y.v * y.v - x.v * x.v) / r4,
                2.0 * x.v * y.v / r4);
}
inline Jet2 square(const Jet2& x) { return chain(x, x.v * x.v, 2.0 * x.v, 2.0); }

inline double value_of(double x) { return x; }
inline double value_of(const Jet2& x) { return x.v; }

}  // namespace xipinn
