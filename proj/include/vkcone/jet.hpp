#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace vkcone {

/// Truncated Taylor series in one variable. Coefficient k holds f^(k)(x)/k!.
///
/// Used to get exact low-order derivatives of the closed-form smooth steps
/// and kernels without hand-expanding chain rules.
template <std::size_t K>
struct Jet {
  std::array<double, K + 1> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double x) {
    Jet j;
    j.c[0] = x;
    if constexpr (K >= 1) j.c[1] = 1.0;
    return j;
  }

  double value() const { return c[0]; }

  /// k-th derivative (not the normalized coefficient).
  double derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return c[k] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k <= K; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k <= K; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

template <std::size_t K>
Jet<K> operator+(Jet<K> a, const Jet<K>& b) { return a += b; }
template <std::size_t K>
Jet<K> operator-(Jet<K> a, const Jet<K>& b) { return a -= b; }
template <std::size_t K>
Jet<K> operator-(Jet<K> a) { return a *= -1.0; }
template <std::size_t K>
Jet<K> operator*(Jet<K> a, double s) { return a *= s; }
template <std::size_t K>
Jet<K> operator*(double s, Jet<K> a) { return a *= s; }
template <std::size_t K>
Jet<K> operator+(Jet<K> a, double s) { a.c[0] += s; return a; }
template <std::size_t K>
Jet<K> operator+(double s, Jet<K> a) { a.c[0] += s; return a; }
template <std::size_t K>
Jet<K> operator-(double s, Jet<K> a) { a *= -1.0; a.c[0] += s; return a; }

template <std::size_t K>
Jet<K> operator*(const Jet<K>& a, const Jet<K>& b) {
  Jet<K> r;
  for (std::size_t i = 0; i <= K; ++i)
    for (std::size_t j = 0; i + j <= K; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

template <std::size_t K>
Jet<K> operator/(const Jet<K>& a, const Jet<K>& b) {
  Jet<K> r;
  for (std::size_t k = 0; k <= K; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

template <std::size_t K>
Jet<K> operator/(double s, const Jet<K>& b) { return Jet<K>::constant(s) / b; }

template <std::size_t K>
Jet<K> exp(const Jet<K>& a) {
  Jet<K> r;
  r.c[0] = std::exp(a.c[0]);
  for (std::size_t k = 1; k <= K; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a.c[j] * r.c[k - j];
    r.c[k] = s / static_cast<double>(k);
  }
  return r;
}

}  // namespace vkcone
