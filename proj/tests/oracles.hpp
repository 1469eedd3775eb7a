#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's energy or gradient code.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vkcone/constructions.hpp"
#include "vkcone/radial.hpp"

namespace oracle {

// The 61-point Kronrod error estimate is far more pessimistic than the true
// error on smooth integrands; asking for less than ~1e-9 only buys roundoff
// driven bisection down to the depth limit.
inline double adaptive(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-9);
}

/// Integral over [0, 1] split at the given break points, each piece further
/// cut into `sub` equal parts.
inline double piecewise(const std::function<double(double)>& f, std::vector<double> breaks, int sub = 16) {
  breaks.insert(breaks.begin(), 0.0);
  breaks.push_back(1.0);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    if (!(b > a)) continue;
    for (int k = 0; k < sub; ++k) s += adaptive(f, a + (b - a) * k / sub, a + (b - a) * (k + 1) / sub);
  }
  return s;
}

struct Parts {
  double hoop_stretch, radial_stretch, radial_bend, hoop_bend, total;
};

/// Continuum energy of a closed-form configuration.
inline Parts closed_form_energy(const vkcone::ClosedFormField& cf, double h) {
  const auto& bp = cf.breakpoints;
  Parts p{};
  p.hoop_stretch = piecewise([&](double r) { return r > 0 ? std::pow(cf.u(r).value, 2) / r : 0.0; }, bp);
  p.radial_stretch = piecewise(
      [&](double r) {
        const auto w = cf.wp(r);
        const double e = cf.u(r).d1 + w.value * w.value - 1.0;
        return r * e * e;
      },
      bp);
  p.radial_bend = h * h * piecewise([&](double r) { return r * std::pow(cf.wp(r).d1, 2); }, bp);
  p.hoop_bend = h * h * piecewise([&](double r) { return r > 0 ? std::pow(cf.wp(r).value, 2) / r : 0.0; }, bp);
  p.total = p.hoop_stretch + p.radial_stretch + p.radial_bend + p.hoop_bend;
  return p;
}

/// Grid on [0, 1] with the given break points as nodes; piece i (between
/// consecutive break points, 0 and 1 included) has spacing at most
/// spacing[i].
inline vkcone::Grid banded_grid(const std::vector<double>& breaks, const std::vector<double>& spacing) {
  std::vector<double> b{0.0};
  b.insert(b.end(), breaks.begin(), breaks.end());
  b.push_back(1.0);
  std::vector<double> nodes{0.0};
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const int n = std::max(2, static_cast<int>(std::ceil((b[i + 1] - b[i]) / spacing.at(i))));
    for (int k = 1; k <= n; ++k) nodes.push_back(k == n ? b[i + 1] : b[i] + (b[i + 1] - b[i]) * k / n);
  }
  return vkcone::Grid(nodes);
}

/// Spacing `fine` on the odd-numbered pieces and `coarse` elsewhere.
inline vkcone::Grid banded_grid(const std::vector<double>& breaks, double coarse, double fine) {
  std::vector<double> sp(breaks.size() + 1);
  for (std::size_t i = 0; i < sp.size(); ++i) sp[i] = i % 2 == 1 ? fine : coarse;
  return banded_grid(breaks, sp);
}

/// Energy of a nodal field by brute-force Gauss-Kronrod on every cell.
/// Used to cross-check the exact per-cell formulas.
inline Parts discrete_energy(const vkcone::RadialField& f, double h) {
  const auto& r = f.grid.nodes();
  Parts p{};
  for (std::size_t c = 0; c + 1 < r.size(); ++c) {
    const double a = r[c], b = r[c + 1], d = b - a;
    const double u0 = f.u[c], u1 = f.u[c + 1], w0 = f.wp[c], w1 = f.wp[c + 1];
    auto u = [&](double x) { return u0 + (u1 - u0) * (x - a) / d; };
    auto wp = [&](double x) { return w0 + (w1 - w0) * (x - a) / d; };
    const double du = (u1 - u0) / d, dwp = (w1 - w0) / d;
    p.hoop_stretch += adaptive([&](double x) { return x > 0 ? u(x) * u(x) / x : 0.0; }, a, b);
    p.radial_stretch += adaptive([&](double x) { return x * std::pow(du + wp(x) * wp(x) - 1.0, 2); }, a, b);
    p.radial_bend += h * h * dwp * dwp * 0.5 * (b * b - a * a);
    p.hoop_bend += h * h * adaptive([&](double x) { return x > 0 ? wp(x) * wp(x) / x : 0.0; }, a, b);
  }
  p.total = p.hoop_stretch + p.radial_stretch + p.radial_bend + p.hoop_bend;
  return p;
}

/// Random smooth field with u(0) = wp(0) = 0, projected onto w(1) = 1 - delta.
inline vkcone::RadialField random_field(const vkcone::Grid& g, double delta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto& r = g.nodes();
  vkcone::RadialField f(g);
  double a[4], b[4];
  for (int k = 0; k < 4; ++k) {
    a[k] = 0.3 * U(rng);
    b[k] = 0.3 * U(rng);
  }
  for (std::size_t i = 1; i < r.size(); ++i) {
    double su = 0.0, sw = 1.0 - delta;
    for (int k = 0; k < 4; ++k) {
      su += a[k] * std::sin((k + 1) * M_PI * r[i]);
      sw += b[k] * std::sin((k + 1) * M_PI * r[i] / 2.0);
    }
    f.u[i] = su + 0.01 * U(rng);
    f.wp[i] = sw * (1.0 - std::exp(-r[i] / 0.05)) + 0.01 * U(rng);
  }
  vkcone::project_onto_constraint(f, delta);
  return f;
}

}  // namespace oracle
