#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vkcone/ridge.hpp"
#include "vkcone/scaling.hpp"

using namespace vkcone;

namespace {

constexpr double kAlpha = 0.88622692545275801365;  // sqrt(pi)/2

const std::array<Vec2, 4> kSquare = {Vec2(0, 0), Vec2(0.5, 0.5), Vec2(1, 0), Vec2(0.5, -0.5)};

RidgeField canonical_ridge(double h, double A6 = 0.3, double A7 = kAlpha, double A8 = -kAlpha) {
  const auto patch = fold_coeffs(sharp_fold(A6, A7, A8), kSquare);
  return ridge_fields(patch, gamma_profiles(patch.a(7), patch.a(8)), width_profile(patch.tau, h, patch.length), h);
}

// Rigidly moved copy x -> R^T (x - z) of a map, with V -> R^T V(R y + z).
PlanarMap moved(const PlanarMap& m, const Mat2& R, const Vec2& z) {
  return PlanarMap(
      [=](const Vec2& y) {
        const auto s = m(R * y + z);
        PlanarSample o;
        o.V = R.transpose() * s.V;
        o.DV = R.transpose() * s.DV * R;
        o.W = s.W;
        o.DW = R.transpose() * s.DW;
        o.D2W = R.transpose() * s.D2W * R;
        return o;
      },
      "moved");
}

}  // namespace

TEST_CASE("alpha") { CHECK(kPyramidAlpha == doctest::Approx(kAlpha).epsilon(1e-15)); }

TEST_CASE("sharp pyramid satisfies the compatibility identity in every quadrant") {
  const auto m = sharp_pyramid();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int q = 0; q < 4; ++q) {
    const double sx = q == 0 || q == 3 ? 1.0 : -1.0, sy = q < 2 ? 1.0 : -1.0;
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const double r = std::sqrt(U(rng)), th = 0.5 * M_PI * U(rng);
      const Vec2 x(sx * r * std::cos(th), sy * r * std::sin(th));
      worst = std::max(worst, membrane_strain(m(x)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("sharp pyramid: values, continuity and the jump across the negative axis") {
  const auto m = sharp_pyramid();
  CHECK(m(Vec2(0.5, 0.0)).W == doctest::Approx(kAlpha / 2).epsilon(1e-15));
  CHECK(m(Vec2(0.0, 0.0)).W == 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = U(rng), b = 1.0 - a;
    const double s = 0.999 * U(rng);
    CHECK(m(Vec2(s * a, s * b)).W >= 0.0);
    CHECK(m(Vec2(-s * a, -s * b)).W >= 0.0);
  }
  const double e = 1e-13;
  for (int k = 1; k < 50; ++k) {
    const double t = k / 50.0;
    for (double y : {t, -t}) CHECK((m(Vec2(e, y)).V - m(Vec2(-e, y)).V).norm() <= 1e-10);
    CHECK((m(Vec2(t, e)).V - m(Vec2(t, -e)).V).norm() <= 1e-10);
    const Vec2 jump = m(Vec2(-t, e)).V - m(Vec2(-t, -e)).V;
    CHECK((jump - 4 * kAlpha * kAlpha * Vec2(0.0, -t)).norm() <= 1e-10);
  }
  const auto c = sharp_pyramid_sigma_corrected();
  for (int k = 1; k < 50; ++k) {
    const double t = k / 50.0;
    CHECK((c(Vec2(-t, e)).V - c(Vec2(-t, -e)).V).norm() <= 1e-10);
    CHECK((c(Vec2(t, e)).V - c(Vec2(t, -e)).V).norm() > 0.1 * t);
  }
}

TEST_CASE("fold coefficients of the canonical fold and the pyramid patches") {
  for (double s : {0.3, kAlpha, 1.7}) {
    const auto p = fold_coeffs(sharp_fold(0.2, s, -s), kSquare);
    CHECK(p.a(3) == doctest::Approx(-s * s / 2).epsilon(1e-12));
    CHECK(p.a(5) == doctest::Approx(-s * s / 2).epsilon(1e-12));
    CHECK(p.a(6) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(p.length == doctest::Approx(1.0));
    CHECK(p.tau == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(compatibility_residual(p) <= 1e-12);
  }
  const auto plain = sharp_pyramid(), corr = sharp_pyramid_sigma_corrected();
  const auto quads = pyramid_quads();
  CHECK(quads.size() == 12);
  int corrected = 0;
  for (const auto& q : quads) {
    const auto p = fold_coeffs(q.sigma_corrected ? corr : plain, q.quad);
    CHECK(compatibility_residual(p) <= 1e-12);
    CHECK(p.tau > 0.0);
    CHECK(p.tau <= 1.0);
    corrected += q.sigma_corrected;
  }
  CHECK(corrected == 2);
  CHECK(pyramid_vertices().size() == 9);
}

TEST_CASE("fold coefficient errors") {
  const auto m = sharp_fold(0.0, 1.0, -1.0);
  CHECK_THROWS_AS(fold_coeffs(m, {Vec2(0, 0), Vec2(0.5, 0.5), Vec2(1, 0), Vec2(0.5, 0.2)}), std::invalid_argument);
  CHECK_THROWS_AS(fold_coeffs(m, {Vec2(0, 0), Vec2(0.5, 0.5), Vec2(0, 0), Vec2(0.5, -0.5)}), std::invalid_argument);
}

TEST_CASE("gamma profiles without a fold are affine") {
  const double s = 0.7;
  const auto g = gamma_profiles(s, s);
  CHECK(g.lambda() == 0.0);
  for (int k = 0; k <= 100; ++k) {
    const double t = -1.0 + 2.0 * k / 100.0;
    const auto x = g(t);
    CHECK(x.g3 == doctest::Approx(s * t).epsilon(1e-12));
    CHECK(x.g2 == doctest::Approx(-s * s * t / 2).epsilon(1e-12));
    CHECK(std::abs(x.eta2) <= 1e-12);
    CHECK(std::abs(x.eta3) <= 1e-12);
    CHECK(std::abs(x.omega) <= 1e-12);
    CHECK(std::abs(x.xi) <= 1e-12);
  }
}

TEST_CASE("gamma profiles: identities for random slope pairs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double A7 = U(rng), A8 = U(rng);
    const auto g = gamma_profiles(A7, A8);
    CHECK(std::abs(g.omega_end()) <= 1e-10);
    CHECK(std::abs(g(1.0).omega) <= 1e-10);
    double worst = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double t = -1.0 + 2.0 * k / 1000.0;
      const auto x = g(t);
      worst = std::max(worst, std::abs(2 * x.g2p + x.g3p * x.g3p));
      if (std::abs(t) >= 0.75) {
        const double s = t > 0 ? A7 : A8;
        CHECK(x.g3 == doctest::Approx(s * t).epsilon(1e-10));
        CHECK(x.g2 == doctest::Approx(-s * s * t / 2).epsilon(1e-10));
        CHECK(std::abs(x.eta2) <= 1e-10);
        CHECK(std::abs(x.eta3) <= 1e-10);
        CHECK(std::abs(x.omega) <= 1e-10);
        CHECK(std::abs(x.xi) <= 1e-10);
      }
    }
    CHECK(worst <= 1e-10);
    const double energy = oracle::adaptive([&](double t) { return std::pow(g(t).g3p, 2); }, -1.0, 1.0);
    CHECK(energy == doctest::Approx(A7 * A7 + A8 * A8).epsilon(1e-9));
  }
}

TEST_CASE("width profile bounds") {
  for (const auto& [tau, h, l] : {std::tuple{1.0, 1e-3, 1.0}, std::tuple{0.4142, 1e-2, 0.5}, std::tuple{0.9, 1e-4, 0.7}}) {
    const auto f = width_profile(tau, h, l);
    auto f0 = [&](double x) { return tau * std::cbrt(h) * std::pow(h + x, 2.0 / 3.0) - tau * h; };
    auto f0p = [&](double x) { return tau * (2.0 / 3.0) * std::cbrt(h) * std::pow(h + x, -1.0 / 3.0); };
    auto f0pp = [&](double x) { return -tau * (2.0 / 9.0) * std::cbrt(h) * std::pow(h + x, -4.0 / 3.0); };
    CHECK(std::abs(f.value(0.0)) <= 1e-15);
    CHECK(std::abs(f.value(l)) <= 1e-15);
    CHECK(f.value(l / 4) == doctest::Approx(f.value(3 * l / 4)).epsilon(1e-12));
    double c1 = 0.0, c2 = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double x = h + (l / 2 - h) * k / 1000.0;
      const auto s = f(x);
      const double r = s.value / f0(x);
      CHECK(r >= 0.5 - 1e-12);
      CHECK(r <= 1.0 + 1e-12);
      CHECK(s.value <= tau * std::min(x, l - x) + 1e-15);
      c1 = std::max(c1, std::abs(s.d1) / std::abs(f0p(x)));
      c2 = std::max(c2, std::abs(s.d2) / std::abs(f0pp(x)));
    }
    MESSAGE("derivative constants " << c1 << " " << c2);
    CHECK(c1 <= 8.0);
    CHECK(c2 <= 8.0);
  }
  CHECK_THROWS_AS(width_profile(1.0, 0.2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(width_profile(0.0, 1e-3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(width_profile(1.5, 1e-3, 1.0), std::invalid_argument);
}

TEST_CASE("ridge fields: strain identities in the strip") {
  for (const auto& [A6, A7, A8] : {std::tuple{0.3, kAlpha, -kAlpha}, std::tuple{-0.4, 0.9, -0.3}}) {
    const double h = 1e-3;
    const auto rf = canonical_ridge(h, A6, A7, A8);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double e12 = 0.0, e22 = 0.0, e11 = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const double y1 = 1e-3 + 0.998 * U(rng), t = 2.0 * U(rng) - 1.0;
      const auto f = rf.width()(y1);
      const auto g = rf.profile()(t);
      const Mat2 S = membrane_strain(rf.local_strip(y1, f, t, g));
      e12 = std::max(e12, std::abs(S(0, 1)));
      e22 = std::max(e22, std::abs(S(1, 1)));
      const double pred = 2 * (f.d1 * f.d1 * g.xi - f.value * f.d2 * g.omega) + f.d1 * f.d1 * g.eta3 * g.eta3;
      e11 = std::max(e11, std::abs(S(0, 0) - pred));
    }
    CHECK(e12 <= 1e-9);
    CHECK(e22 <= 1e-9);
    CHECK(e11 <= 1e-8);
  }
}

TEST_CASE("ridge fields: closed-form derivatives match finite differences") {
  const double h = 1e-2;
  const auto rf = canonical_ridge(h, -0.4, 0.9, -0.3);
  const auto map = rf.map();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double s = 1e-6;
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    const double y1 = 0.05 + 0.9 * U(rng);
    const double w = rf.width().value(y1);
    const Vec2 x = rf.patch().frame.to_global(Vec2(y1, (1.6 * U(rng) - 0.8) * w));
    if (!rf.in_strip(x)) continue;
    ++checked;
    const auto c = map(x);
    for (int j = 0; j < 2; ++j) {
      Vec2 e = Vec2::Zero();
      e[j] = s;
      const auto p = map(x + e), m = map(x - e);
      const Vec2 dV = (p.V - m.V) / (2 * s);
      const double dW = (p.W - m.W) / (2 * s);
      // The Hessian varies on the kernel scale f/8, so it needs a finer step.
      const auto pp = map(x + 0.1 * e), mm = map(x - 0.1 * e);
      const Vec2 d2W = (pp.DW - mm.DW) / (0.2 * s);
      for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(dV[i] - c.DV(i, j)) <= 1e-6 * std::max(1.0, std::abs(c.DV(i, j))));
        CHECK(std::abs(d2W[i] - c.D2W(i, j)) <= 1e-5 * std::max(1.0, std::abs(c.D2W(i, j))));
      }
      CHECK(std::abs(dW - c.DW[j]) <= 1e-6);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("ridge fields agree with the sharp fold on the patch boundary") {
  const double h = 1e-2;
  const auto sharp = sharp_fold(0.3, kAlpha, -kAlpha);
  const auto rf = canonical_ridge(h);
  const auto map = rf.map();
  const auto& q = rf.patch().vertices;
  for (int e = 0; e < 4; ++e) {
    const Vec2 p0 = q[static_cast<std::size_t>(e)], p1 = q[static_cast<std::size_t>((e + 1) % 4)];
    for (int k = 1; k < 100; ++k) {
      const Vec2 x = p0 + (p1 - p0) * (k / 100.0);
      if (std::min((x - q[0]).norm(), (x - q[2]).norm()) < h) continue;
      const auto a = map(x), b = sharp(x);
      CHECK((a.V - b.V).norm() <= 1e-9);
      CHECK(std::abs(a.W - b.W) <= 1e-9);
      CHECK((a.DW - b.DW).norm() <= 1e-9);
    }
  }
}

TEST_CASE("ridge fields: gradients stay bounded as h shrinks") {
  std::vector<double> sup;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const auto rf = canonical_ridge(h, -0.4, 0.9, -0.3);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double m = 0.0;
    for (int k = 0; k < 5000; ++k) {
      const double y1 = h + (1.0 - 2 * h) * U(rng), t = 2.0 * U(rng) - 1.0;
      const auto s = rf.local_strip(y1, rf.width()(y1), t, rf.profile()(t));
      m = std::max(m, s.DV.norm() + s.DW.norm());
    }
    sup.push_back(m);
  }
  MESSAGE("sup |DV| + |DW|: " << sup[0] << " " << sup[1] << " " << sup[2]);
  for (double m : sup) CHECK(m <= 10.0);
}

TEST_CASE("ridge field preconditions") {
  const auto patch = fold_coeffs(sharp_fold(0.3, kAlpha, -kAlpha), kSquare);
  const auto prof = gamma_profiles(patch.a(7), patch.a(8));
  CHECK_THROWS_AS(ridge_fields(patch, gamma_profiles(0.1, -0.2), width_profile(patch.tau, 1e-3, 1.0), 1e-3),
                  std::invalid_argument);
  CHECK_THROWS_AS(ridge_fields(patch, prof, width_profile(patch.tau, 0.1, 1.0), 0.2), std::invalid_argument);
}

TEST_CASE("patch energy vanishes without a fold") {
  const auto patch = fold_coeffs(sharp_fold(0.3, 0.5, 0.5), kSquare);
  const double h = 1e-3;
  const auto rf = ridge_fields(patch, gamma_profiles(0.5, 0.5), width_profile(patch.tau, h, 1.0), h);
  const auto e = patch_energy(rf, h);
  CHECK(std::abs(e.membrane) <= 1e-12);
  CHECK(std::abs(e.bending) <= 1e-12);
}

TEST_CASE("ridge energy scales like h^(5/3) at unit length") {
  std::vector<double> hs, tot, bend;
  for (double e10 = -4.0; e10 <= -2.0 + 1e-9; e10 += 0.5) {
    const double h = std::pow(10.0, e10);
    const auto e = patch_energy(canonical_ridge(h), h);
    CHECK(e.converged);
    hs.push_back(h);
    tot.push_back(e.total);
    bend.push_back(e.bending);
  }
  const auto ft = fit_exponent(hs, tot), fb = fit_exponent(hs, bend);
  MESSAGE("ridge slopes: total " << ft.slope << ", bending " << fb.slope);
  CHECK(ft.slope >= 1.55);
  CHECK(ft.slope <= 1.80);
  CHECK(fb.slope >= 1.55);
  CHECK(fb.slope <= 1.80);
}

TEST_CASE("patch energy is invariant under rigid motions") {
  const double h = 1e-3;
  const auto base_map = sharp_fold(-0.4, 0.9, -0.3);
  const auto p0 = fold_coeffs(base_map, kSquare);
  const auto e0 = patch_energy(ridge_fields(p0, gamma_profiles(p0.a(7), p0.a(8)), width_profile(p0.tau, h, p0.length), h), h);
  const double th = 0.7;
  Mat2 R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Vec2 z(0.3, -1.1);
  std::array<Vec2, 4> q;
  for (std::size_t i = 0; i < 4; ++i) q[i] = R.transpose() * (kSquare[i] - z);
  const auto p1 = fold_coeffs(moved(base_map, R, z), q);
  const auto e1 = patch_energy(ridge_fields(p1, gamma_profiles(p1.a(7), p1.a(8)), width_profile(p1.tau, h, p1.length), h), h);
  CHECK(e1.membrane == doctest::Approx(e0.membrane).epsilon(1e-9));
  CHECK(e1.bending == doctest::Approx(e0.bending).epsilon(1e-9));
}

TEST_CASE("vertex smoothing of a smooth field") {
  const PlanarMap smooth(
      [](const Vec2& x) {
        PlanarSample s;
        s.W = x[0] * x[0] + x[0] * x[1];
        s.DW = Vec2(2 * x[0] + x[1], x[0]);
        s.D2W << 2, 1, 1, 0;
        return s;
      },
      "quadratic");
  const double h = 1e-2;
  const Vec2 c(0.2, -0.1);
  const auto b = vertex_smooth(smooth, c, h);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec2 d(U(rng), U(rng));
    if (d.norm() > 1.0) continue;
    const Vec2 x = c + 0.5 * h * d;
    CHECK(std::abs(b.map(x).W - smooth(x).W) <= 2 * h * h);
    const Vec2 y = c + (1.0 + 0.5 * std::abs(U(rng))) * h * d.normalized();
    CHECK(b.map(y).W == smooth(y).W);
  }
}

TEST_CASE("vertex smoothing of the pyramid tip has h-independent curvature") {
  std::vector<double> hs;
  for (double h : {1e-2, std::pow(10.0, -2.5), 1e-3}) hs.push_back(vertex_smooth(sharp_pyramid(), Vec2(0, 0), h).hessian_sq);
  for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
    const double r = hs[k + 1] / hs[k];
    CHECK(r >= 1.0 / 3.0);
    CHECK(r <= 3.0);
  }
  const auto b = vertex_smooth(sharp_pyramid(), Vec2(0, 0), 1e-2);
  CHECK(b.membrane <= 10.0 * 1e-4);
}

TEST_CASE("pyramid energy is the sum of its parts") {
  const double h = 1e-2;
  const auto r = pyramid_energy(h);
  CHECK(r.converged);
  CHECK(r.patches.size() == 12);
  CHECK(r.balls.size() == 9);
  double ps = 0.0, bs = 0.0;
  for (const auto& p : r.patches) ps += p.energy.total;
  for (const auto& b : r.balls) bs += b.membrane + b.bending;
  CHECK(ps == doctest::Approx(r.patch_sum).epsilon(1e-12));
  CHECK(bs == doctest::Approx(r.ball_sum).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(ps + bs).epsilon(1e-12));
  CHECK_THROWS_AS(pyramid_energy(1.01 * pyramid_h_max()), std::invalid_argument);
}

TEST_CASE("pyramid constant at h = 1e-2") {
  const double h = 1e-2;
  const auto r = pyramid_energy(h);
  const double C = r.total / std::pow(h, 5.0 / 3.0);
  MESSAGE("pyramid energy " << r.total << ", C = " << C);
  CHECK(C <= 1e3);
}

TEST_CASE("pyramid W grid") {
  const auto g = pyramid_w_grid(1e-2, 33);
  CHECK(g.n == 33);
  CHECK(g.w.size() == 33u * 33u);
  CHECK(g.x.front() == -1.0);
  CHECK(g.x.back() == 1.0);
}
