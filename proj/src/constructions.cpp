#include "vkcone/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vkcone {

namespace {

// U0(s) = \int_{-1}^s (1 - W0'^2); W0' = +-1 outside |s| < 1/4 so U0 vanishes there.
const CumulativeTable& u0_table() {
  static const CumulativeTable table(-0.25, 0.25, 2048, [](double s) {
    static const SmoothProfile w0 = profile_w0();
    const auto v = w0(s);
    return std::array<double, 2>{1.0 - v.d1 * v.d1, -2.0 * v.d1 * v.d2};
  });
  return table;
}

ProfileSample eta_scaled(const SmoothProfile& eta, double r, double h) {
  const auto e = eta(r / h);
  return {e.value, e.d1 / h, e.d2 / (h * h)};
}

}  // namespace

ClosedFormField invert_closed_form(const Params& p) {
  p.validate();
  if (p.delta < p.h) throw std::invalid_argument("construct_invert requires h <= delta");
  const double h = p.h;
  const double R = 0.5 * p.delta;
  const double l = 0.1 * std::sqrt(h * p.delta);
  const auto eta = mollifier_eta();
  const auto w0 = profile_w0();
  const auto& U0 = u0_table();

  ClosedFormField cf;
  cf.wp = [=](double r) {
    if (r <= R - l) {
      const auto e = eta_scaled(eta, r, h);
      return ProfileSample{-e.value, -e.d1, -e.d2};
    }
    if (r < R + l) {
      const auto s = w0((r - R) / l);
      return ProfileSample{s.d1, s.d2 / l, 0.0};
    }
    return ProfileSample{1.0, 0.0, 0.0};
  };
  cf.u = [=, &U0](double r) {
    if (r <= R - l || r >= R + l) return ProfileSample{};
    const double s = (r - R) / l;
    const double d1 = w0(s).d1;
    return ProfileSample{l * U0(s), 1.0 - d1 * d1, 0.0};
  };
  cf.breakpoints = {0.2 * h, 0.4 * h, R - l, R - 0.25 * l, R + 0.25 * l, R + l};
  return cf;
}

ClosedFormField flatten_closed_form(const Params& p) {
  p.validate();
  const double h = p.h;
  const double L = std::sqrt(h);
  const double k = 2.0 * p.delta / (L * L);
  const auto eta = mollifier_eta();

  ClosedFormField cf;
  cf.wp = [=](double r) {
    if (r <= 1.0 - L) return eta_scaled(eta, r, h);
    const double s = r - (1.0 - L);
    return ProfileSample{1.0 - k * s, -k, 0.0};
  };
  cf.u = [=](double r) {
    if (r <= 1.0 - L) return ProfileSample{};
    const double s = r - (1.0 - L);
    const double wp = 1.0 - k * s;
    return ProfileSample{k * s * s - k * k * s * s * s / 3.0, 1.0 - wp * wp, 0.0};
  };
  cf.breakpoints = {0.2 * h, 0.4 * h, 1.0 - L};
  return cf;
}

void project_onto_constraint(RadialField& f, double delta) {
  const auto c = wp_integral_weights(f.grid);
  double cw = 0.0, cc = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    cw += c[i] * f.wp[i];
    cc += c[i] * c[i];
  }
  const double shift = ((1.0 - delta) - cw) / cc;
  for (std::size_t i = 1; i < c.size(); ++i) f.wp[i] += shift * c[i];
}

RadialField sample_closed_form(const ClosedFormField& cf, const Grid& grid, double delta) {
  RadialField f(grid);
  const auto& r = grid.nodes();
  for (std::size_t i = 1; i < r.size(); ++i) {
    f.wp[i] = cf.wp(r[i]).value;
    f.u[i] = cf.u(r[i]).value;
  }
  project_onto_constraint(f, delta);
  return f;
}

RadialField construct_invert(const Params& p, const Grid& grid) {
  return sample_closed_form(invert_closed_form(p), grid, p.delta);
}

RadialField construct_flatten(const Params& p, const Grid& grid) {
  return sample_closed_form(flatten_closed_form(p), grid, p.delta);
}

double predicted_bound(const Params& p) {
  p.validate();
  const double h = p.h, d = p.delta;
  return h * h * std::log(1.0 / h) +
         std::min(d * d * std::sqrt(h), std::sqrt(d) * std::pow(h, 1.5));
}

}  // namespace vkcone
