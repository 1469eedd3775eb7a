#include "vkcone/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace vkcone {

namespace {

const Mat2 kJ = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();

Vec2 perp(const Vec2& x) { return {-x.y(), x.x()}; }

// Full node/weight lists for an n-point Gauss-Legendre rule on [-1, 1].
template <int N>
std::pair<std::vector<double>, std::vector<double>> gauss_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  std::vector<double> x, w;
  const auto& a = G::abscissa();
  const auto& b = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      x.push_back(0.0);
      w.push_back(b[i]);
      continue;
    }
    x.push_back(-a[i]);
    w.push_back(b[i]);
    x.push_back(a[i]);
    w.push_back(b[i]);
  }
  return {x, w};
}

std::pair<std::vector<double>, std::vector<double>> gauss_nodes(int n) {
  switch (n) {
    case 4: return gauss_rule<4>();
    case 6: return gauss_rule<6>();
    case 8: return gauss_rule<8>();
    case 10: return gauss_rule<10>();
    case 12: return gauss_rule<12>();
    case 16: return gauss_rule<16>();
    case 20: return gauss_rule<20>();
    default: throw std::invalid_argument("quadrature points must be one of 4, 6, 8, 10, 12, 16, 20");
  }
}

// Composite Gauss-Legendre nodes and weights on [lo, hi].
void composite(double lo, double hi, int panels, const std::vector<double>& gx,
               const std::vector<double>& gw, std::vector<double>& x, std::vector<double>& w) {
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (std::size_t k = 0; k < gx.size(); ++k) {
      x.push_back(mid + 0.5 * width * gx[k]);
      w.push_back(0.5 * width * gw[k]);
    }
  }
}

Vec2 quadrant_v(const Vec2& x) {
  const double s = -0.5 * kPyramidAlpha * kPyramidAlpha;
  const double a = x.x(), b = x.y();
  if (a >= 0.0 && b >= 0.0) return s * Vec2(a + b, a + b);
  if (a < 0.0 && b >= 0.0) return s * Vec2(a + b, -3.0 * a + b);
  if (a < 0.0) return s * Vec2(a - 3.0 * b, 5.0 * a + b);
  return s * Vec2(a - 3.0 * b, a + b);
}

Mat2 quadrant_dv(const Vec2& x) {
  const double s = -0.5 * kPyramidAlpha * kPyramidAlpha;
  const double a = x.x(), b = x.y();
  Mat2 m;
  if (a >= 0.0 && b >= 0.0) m << 1, 1, 1, 1;
  else if (a < 0.0 && b >= 0.0) m << 1, 1, -3, 1;
  else if (a < 0.0) m << 1, -3, 5, 1;
  else m << 1, -3, 1, 1;
  return s * m;
}

PlanarSample pyramid_sample(const Vec2& x) {
  PlanarSample s;
  const double n1 = std::abs(x.x()) + std::abs(x.y());
  const Vec2 sg(x.x() >= 0.0 ? 1.0 : -1.0, x.y() >= 0.0 ? 1.0 : -1.0);
  if (n1 <= 0.5) {
    s.W = kPyramidAlpha * n1;
    s.DW = kPyramidAlpha * sg;
  } else {
    s.W = kPyramidAlpha * (1.0 - n1);
    s.DW = -kPyramidAlpha * sg;
  }
  s.V = quadrant_v(x);
  s.DV = quadrant_dv(x);
  return s;
}

double compat_scale(const std::array<double, 8>& A) {
  double m = 1.0;
  for (double a : A) m = std::max(m, std::abs(a));
  return m * m;
}

}  // namespace

Mat2 membrane_strain(const PlanarSample& s) {
  return s.DV + s.DV.transpose() + s.DW * s.DW.transpose();
}

double membrane_density(const PlanarSample& s) { return membrane_strain(s).squaredNorm(); }

double bending_density(const PlanarSample& s) { return s.D2W.squaredNorm(); }

PlanarMap::PlanarMap(Evaluator eval, std::string description)
    : eval_(std::move(eval)), description_(std::move(description)) {}

Vec2 sigma_correction(const Vec2& x) {
  if (x.y() > 0.0) return 4.0 * kPyramidAlpha * kPyramidAlpha * perp(x);
  return Vec2::Zero();
}

PlanarMap sharp_pyramid() {
  return PlanarMap(pyramid_sample,
                   "sharp pyramid: quadrants x diamond |x|_1 = 1/2, V jumps by 4 alpha^2 (0, x1) on "
                   "{x2 = 0, x1 < 0}");
}

PlanarMap sharp_pyramid_sigma_corrected() {
  return PlanarMap(
      [](const Vec2& x) {
        auto s = pyramid_sample(x);
        if (x.y() > 0.0) {
          s.V -= sigma_correction(x);
          s.DV -= 4.0 * kPyramidAlpha * kPyramidAlpha * kJ;
        }
        return s;
      },
      "sharp pyramid with V - 4 alpha^2 x^perp on x2 > 0: V jumps on {x2 = 0, x1 > 0}");
}

PlanarMap sharp_fold(double A6, double A7, double A8) {
  const double A1 = -0.5 * A6 * A6, A2 = -A6 * A7, A4 = -A6 * A8;
  const double A3 = -0.5 * A7 * A7, A5 = -0.5 * A8 * A8;
  return PlanarMap(
      [=](const Vec2& y) {
        PlanarSample s;
        const bool up = y.y() >= 0.0;
        const double b = up ? A2 : A4, c = up ? A3 : A5, w2 = up ? A7 : A8;
        s.V = {A1 * y.x() + b * y.y(), c * y.y()};
        s.DV << A1, b, 0.0, c;
        s.W = A6 * y.x() + w2 * y.y();
        s.DW = {A6, w2};
        return s;
      },
      "sharp fold along the x1-axis");
}

PlanarSample FoldFrame::to_global(const Vec2& y, const PlanarSample& local) const {
  PlanarSample g;
  const Vec2 vt = local.V - lambda * perp(y);
  const Mat2 dvt = local.DV - lambda * kJ;
  g.V = R * vt + V0;
  g.DV = R * dvt * R.transpose();
  g.W = local.W + W0;
  g.DW = R * local.DW;
  g.D2W = R * local.D2W * R.transpose();
  return g;
}

RidgePatch fold_coeffs(const PlanarMap& map, const std::array<Vec2, 4>& quad) {
  Vec2 a = quad[0], b = quad[1], c = quad[2], d = quad[3];
  const double l = (c - a).norm();
  if (!(l > 0.0)) throw std::invalid_argument("fold_coeffs: fold endpoints coincide");
  const Vec2 e = (c - a) / l;
  const Vec2 n = perp(e);
  const double sb = (b - a).dot(n), sd = (d - a).dot(n);
  if (!(sb * sd < 0.0)) {
    throw std::invalid_argument("fold_coeffs: b and d must lie on opposite sides of [ac]");
  }
  if (sb < 0.0) std::swap(b, d);

  RidgePatch p;
  p.vertices = {a, b, c, d};
  p.length = l;
  FoldFrame& fr = p.frame;
  fr.origin = a;
  fr.R.col(0) = e;
  fr.R.col(1) = n;

  // Each triangle is probed at its centroid; the affine extension must
  // reproduce the map at a second interior point and along the fold.
  const Vec2 cu = (a + b + c) / 3.0, cl = (a + c + d) / 3.0;
  const auto su = map(cu), sl = map(cl);
  const double tol = 1e-9 * std::max(1.0, su.DV.norm() + su.DW.norm() + sl.DV.norm() + sl.DW.norm());
  auto check_affine = [&](const PlanarSample& s0, const Vec2& x0, const Vec2& x1) {
    const auto s1 = map(x1);
    const Vec2 dx = x1 - x0;
    if ((s1.V - s0.V - s0.DV * dx).norm() > tol || std::abs(s1.W - s0.W - s0.DW.dot(dx)) > tol ||
        (s1.DV - s0.DV).norm() > tol || (s1.DW - s0.DW).norm() > tol) {
      throw std::invalid_argument("fold_coeffs: map is not affine on the triangles of the quadrilateral");
    }
  };
  check_affine(su, cu, (0.5 * a + 0.25 * b + 0.25 * c));
  check_affine(sl, cl, (0.5 * c + 0.25 * d + 0.25 * a));

  fr.V0 = su.V + su.DV * (a - cu);
  fr.W0 = su.W + su.DW.dot(a - cu);
  const Vec2 mid = 0.5 * (a + c);
  const Vec2 vu = su.V + su.DV * (mid - cu), vl = sl.V + sl.DV * (mid - cl);
  const double wu = su.W + su.DW.dot(mid - cu), wl = sl.W + sl.DW.dot(mid - cl);
  const Vec2 v0l = sl.V + sl.DV * (a - cl);
  const double w0l = sl.W + sl.DW.dot(a - cl);
  if ((vu - vl).norm() > tol || std::abs(wu - wl) > tol || (fr.V0 - v0l).norm() > tol ||
      std::abs(fr.W0 - w0l) > tol) {
    throw std::invalid_argument("fold_coeffs: map is discontinuous across the fold");
  }

  const Mat2 Rt = fr.R.transpose();
  const Mat2 du = Rt * su.DV * fr.R, dl = Rt * sl.DV * fr.R;
  const Vec2 gu = Rt * su.DW, gl = Rt * sl.DW;
  fr.lambda = -du(1, 0);
  const Mat2 pu = du + fr.lambda * kJ, pl = dl + fr.lambda * kJ;
  p.A = {pu(0, 0), pu(0, 1), pu(1, 1), pl(0, 1), pl(1, 1), gu(0), gu(1), gl(1)};

  if (compatibility_residual(p) > 1e-9 * compat_scale(p.A)) {
    throw std::invalid_argument("fold_coeffs: map violates DV + DV^T + DW DW^T = 0");
  }

  const Vec2 yb = Rt * (b - a), yd = Rt * (d - a);
  double tau = 1.0;
  if (yb.x() > 0.0) tau = std::min(tau, yb.y() / yb.x());
  if (l - yb.x() > 0.0) tau = std::min(tau, yb.y() / (l - yb.x()));
  if (yd.x() > 0.0) tau = std::min(tau, -yd.y() / yd.x());
  if (l - yd.x() > 0.0) tau = std::min(tau, -yd.y() / (l - yd.x()));
  if (!(tau > 0.0)) throw std::invalid_argument("fold_coeffs: degenerate quadrilateral");
  p.tau = tau;
  return p;
}

double compatibility_residual(const RidgePatch& p) {
  const auto& A = p.A;
  const double r[5] = {2 * A[0] + A[5] * A[5], A[1] + A[5] * A[6], A[3] + A[5] * A[7],
                       2 * A[2] + A[6] * A[6], 2 * A[4] + A[7] * A[7]};
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

PlanarSample sharp_fold_local(const RidgePatch& p, const Vec2& y) {
  PlanarSample s;
  const bool up = y.y() >= 0.0;
  const double b = up ? p.a(2) : p.a(4), c = up ? p.a(3) : p.a(5), w2 = up ? p.a(7) : p.a(8);
  s.V = {p.a(1) * y.x() + b * y.y(), c * y.y()};
  s.DV << p.a(1), b, 0.0, c;
  s.W = p.a(6) * y.x() + w2 * y.y();
  s.DW = {p.a(6), w2};
  return s;
}

FoldProfile::FoldProfile(double A7, double A8) : A7_(A7), A8_(A8), kernel_(0.125) {
  const double eps = kernel_.half_width();
  const double jump = A7 - A8;
  const BumpKernel k = kernel_;
  // M(t) = \int_{-eps}^t s phi(s) ds
  moment_ = std::make_shared<CumulativeTable>(-eps, eps, 1024, [k](double s) {
    const auto j = k.cdf(s);
    return std::array<double, 2>{s * j.derivative(1), j.derivative(1) + s * j.derivative(2)};
  });

  auto [gx, gw] = gauss_nodes(20);
  std::vector<double> tx, tw;
  composite(-eps, eps, 64, gx, gw, tx, tw);
  double P = 0.0, phi2 = 0.0, G = 0.875 * (A7 * A7 + A8 * A8);
  for (std::size_t i = 0; i < tx.size(); ++i) {
    const auto j = k.cdf(tx[i]);
    const double g0 = A8 + jump * j.value();
    P += tw[i] * j.derivative(2) * j.derivative(2);
    phi2 += tw[i] * j.derivative(1) * j.derivative(1);
    G += tw[i] * g0 * g0;
  }
  const double Q = -jump * phi2;
  const double c0 = G - A7 * A7 - A8 * A8;
  if (jump != 0.0) {
    const double disc = Q * Q - P * c0;
    if (!(disc >= 0.0)) throw std::runtime_error("gamma_profiles: amplitude quadratic has no real root");
    const double r1 = (-Q + std::sqrt(disc)) / P, r2 = (-Q - std::sqrt(disc)) / P;
    lambda_ = std::abs(r1) <= std::abs(r2) ? r1 : r2;
  }

  const double lam = lambda_;
  auto g3p = [k, A8, jump, lam](double t) {
    const auto j = k.cdf(t);
    return std::array<double, 2>{A8 + jump * j.value() + lam * j.derivative(2),
                                 jump * j.derivative(1) + lam * j.derivative(3)};
  };
  g3sq_ = std::make_shared<CumulativeTable>(-eps, eps, 2048, [g3p](double t) {
    const auto d = g3p(t);
    return std::array<double, 2>{d[0] * d[0], 2.0 * d[0] * d[1]};
  });
  // omega' = eta2 + gamma3' eta3, omega'' = gamma3'' eta3
  omega_ = std::make_shared<CumulativeTable>(-eps, eps, 2048, [this](double t) {
    const auto s = (*this)(t);
    return std::array<double, 2>{s.eta2 + s.g3p * s.eta3, s.g3pp * s.eta3};
  });
}

double FoldProfile::omega_end() const { return omega_ ? omega_->total() : 0.0; }

FoldProfile::Sample FoldProfile::operator()(double t) const {
  Sample s;
  const double eps = kernel_.half_width();
  if (t >= eps || t <= -eps) {
    const double a = t > 0.0 ? A7_ : A8_;
    s.g3 = a * t;
    s.g3p = a;
    s.g2 = -0.5 * a * a * t;
    s.g2p = -0.5 * a * a;
    return s;
  }
  const double jump = A7_ - A8_;
  const auto j = kernel_.cdf(t);
  s.g3 = A8_ * t + jump * (t * j.value() - (*moment_)(t)) + lambda_ * j.derivative(1);
  s.g3p = A8_ + jump * j.value() + lambda_ * j.derivative(2);
  s.g3pp = jump * j.derivative(1) + lambda_ * j.derivative(3);
  s.g2 = A8_ * A8_ * (0.5 - 0.5 * (1.0 - eps)) - 0.5 * (*g3sq_)(t);
  s.g2p = -0.5 * s.g3p * s.g3p;
  s.eta2 = s.g2 - t * s.g2p;
  s.eta3 = s.g3 - t * s.g3p;
  s.eta3p = -t * s.g3pp;
  if (omega_) {
    s.omega = (*omega_)(t);
    s.omegap = s.eta2 + s.g3p * s.eta3;
    s.xi = t * s.omegap - s.omega;
  }
  return s;
}

FoldProfile gamma_profiles(double A7, double A8) { return FoldProfile(A7, A8); }

SmoothProfile width_profile(double tau, double h, double l) {
  if (!(h > 0.0) || !(h < l / 8.0)) throw std::invalid_argument("width_profile: requires 0 < h < l/8");
  if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("width_profile: requires tau in (0, 1]");
  const double k = tau * std::cbrt(h);
  auto f0 = [=](double x) {
    Jet<2> j;
    const double p = std::cbrt(h + x);
    j.c[0] = k * p * p - tau * h;
    j.c[1] = (2.0 / 3.0) * k / p;
    j.c[2] = 0.5 * (-2.0 / 9.0) * k / (p * p * p * p);
    return j;
  };
  auto eval = [=](double x) {
    x = std::clamp(x, 0.0, l);
    const auto a = f0(x);
    auto b = f0(l - x);
    b.c[1] = -b.c[1];
    const auto f = (a * b) / (a + b);
    return ProfileSample{f.derivative(0), f.derivative(1), f.derivative(2)};
  };
  return SmoothProfile(0.0, l, eval, {{"tau", tau}, {"h", h}, {"l", l}});
}

RidgeField::RidgeField(RidgePatch patch, FoldProfile profile, SmoothProfile width, double h)
    : patch_(std::move(patch)), profile_(std::move(profile)), width_(std::move(width)), h_(h) {}

bool RidgeField::in_strip(const Vec2& x) const {
  const Vec2 y = patch_.frame.to_local(x);
  if (!(y.x() > 0.0 && y.x() < patch_.length)) return false;
  return std::abs(y.y()) < width_.value(y.x());
}

PlanarSample RidgeField::local_strip(double y1, const ProfileSample& f, double t,
                                     const FoldProfile::Sample& g) const {
  const auto& p = patch_;
  const double A1 = p.a(1), A6 = p.a(6);
  const double fp = f.d1, fpp = f.d2, fv = f.value;
  PlanarSample s;
  s.W = A6 * y1 + fv * g.g3;
  s.DW = {A6 + fp * g.eta3, g.g3p};
  s.D2W << fpp * g.eta3 - fp * fp * t * g.eta3p / fv, fp * g.eta3p / fv, fp * g.eta3p / fv,
      g.g3pp / fv;
  s.V = {A1 * y1 - A6 * fv * g.g3 - fv * fp * g.omega, fv * g.g2};
  s.DV << A1 - A6 * fp * g.eta3 + fp * fp * g.xi - fv * fpp * g.omega, -A6 * g.g3p - fp * g.omegap,
      fp * g.eta2, g.g2p;
  return s;
}

PlanarSample RidgeField::local(const Vec2& y) const {
  if (y.x() > 0.0 && y.x() < patch_.length) {
    const auto f = width_(y.x());
    if (std::abs(y.y()) < f.value) {
      const double t = y.y() / f.value;
      return local_strip(y.x(), f, t, profile_(t));
    }
  }
  return sharp_fold_local(patch_, y);
}

PlanarSample RidgeField::global(const Vec2& x) const {
  const Vec2 y = patch_.frame.to_local(x);
  return patch_.frame.to_global(y, local(y));
}

PlanarMap RidgeField::map() const {
  auto self = std::make_shared<RidgeField>(*this);
  return PlanarMap([self](const Vec2& x) { return self->global(x); }, "ridged fold");
}

RidgeField ridge_fields(const RidgePatch& patch, const FoldProfile& profile,
                        const SmoothProfile& width, double h) {
  const double scale = std::max(1.0, std::abs(patch.a(7)) + std::abs(patch.a(8)));
  if (std::abs(profile.A7() - patch.a(7)) > 1e-12 * scale ||
      std::abs(profile.A8() - patch.a(8)) > 1e-12 * scale) {
    throw std::invalid_argument("ridge_fields: profile slopes do not match the patch");
  }
  if (!(h > 0.0) || !(h < patch.length / 8.0)) throw std::invalid_argument("ridge_fields: requires h < l/8");
  if (std::abs(width.hi() - patch.length) > 1e-12 * patch.length) {
    throw std::invalid_argument("ridge_fields: width profile length differs from the fold length");
  }
  if (width.param("tau") > patch.tau * (1.0 + 1e-12)) {
    throw std::invalid_argument("ridge_fields: strip leaves the quadrilateral (tau too large)");
  }
  return RidgeField(patch, profile, width, h);
}

namespace {

struct LevelEnergy {
  double membrane = 0.0, bending = 0.0;
};

LevelEnergy integrate_strip(const RidgeField& rf, double h, int points, int refine, double clip) {
  const auto& p = rf.patch();
  const double l = p.length;
  const double lo = h / std::sqrt(2.0), mid = 0.5 * l;
  const double eps = rf.profile().support();
  auto [gx, gw] = gauss_nodes(points);

  // x1: cells geometric in log(x + h) on [lo, l/2], mirrored onto [l/2, l - lo].
  const double s0 = std::log(lo + h), s1 = std::log(mid + h);
  const int cells = std::max(4, static_cast<int>(std::ceil(4.0 * refine * (s1 - s0))));
  std::vector<double> xs, xw;
  std::vector<double> sx, sw;
  composite(s0, s1, cells, gx, gw, sx, sw);
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const double e = std::exp(sx[i]);
    xs.push_back(e - h);
    xw.push_back(sw[i] * e);
    xs.push_back(l - (e - h));
    xw.push_back(sw[i] * e);
  }
  std::vector<double> ts, tw;
  composite(-eps, eps, 4 * refine, gx, gw, ts, tw);
  std::vector<FoldProfile::Sample> gs;
  gs.reserve(ts.size());
  for (double t : ts) gs.push_back(rf.profile()(t));

  const bool clipped = std::isfinite(clip);
  LevelEnergy e;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto f = rf.width()(xs[i]);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (clipped) {
        const Vec2 x = p.frame.to_global(Vec2(xs[i], ts[k] * f.value));
        if (x.norm() > clip) continue;
      }
      const auto s = rf.local_strip(xs[i], f, ts[k], gs[k]);
      const double w = xw[i] * tw[k] * f.value;
      e.membrane += w * membrane_density(s);
      e.bending += w * bending_density(s);
    }
  }
  e.bending *= h * h;
  return e;
}

}  // namespace

PatchEnergy patch_energy(const RidgeField& fields, double h, const PatchQuadrature& q) {
  if (q.refine < 1) throw std::invalid_argument("patch_energy: refine must be at least 1");
  if (!(h > 0.0) || !(h < fields.patch().length / 8.0)) {
    throw std::invalid_argument("patch_energy: requires 0 < h < l/8");
  }
  const auto coarse = integrate_strip(fields, h, q.points, q.refine, q.clip_radius);
  const auto fine = integrate_strip(fields, h, q.points, 2 * q.refine, q.clip_radius);
  PatchEnergy out;
  out.membrane = fine.membrane;
  out.bending = fine.bending;
  out.total = fine.membrane + fine.bending;
  const double tc = coarse.membrane + coarse.bending;
  out.relative_change = out.total > 0.0 ? std::abs(out.total - tc) / out.total : std::abs(tc);
  out.converged = out.total > 0.0 ? out.relative_change <= 0.01 : std::abs(tc) <= 1e-12;
  return out;
}

}  // namespace vkcone
