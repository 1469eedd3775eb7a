#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "vkcone/constructions.hpp"
#include "vkcone/io.hpp"
#include "vkcone/radial.hpp"

using namespace vkcone;

TEST_CASE("params validation") {
  CHECK_NOTHROW((Params{0.5, 1.0}.validate()));
  CHECK_NOTHROW((Params{1e-6, 0.0}.validate()));
  CHECK_THROWS_AS((Params{0.0, 0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Params{0.6, 0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Params{0.1, -0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Params{0.1, 1.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Params{NAN, 0.1}.validate()), std::invalid_argument);
}

TEST_CASE("make_grid contract") {
  const auto g16 = make_grid(16, 0.5);
  CHECK(g16.n_cells() == 16);
  CHECK(g16.node(0) == 0.0);
  CHECK(g16.node(16) == 1.0);
  for (int i = 0; i < 16; ++i) CHECK(g16.node(i + 1) > g16.node(i));

  const double h = 1e-3;
  const auto g = make_grid(4096, h);
  int inside = 0;
  for (double r : g.nodes()) inside += r <= h;
  CHECK(inside >= 8);
  CHECK(g.node(1) <= h / 20.0 * (1 + 1e-12));
  CHECK(g.min_width() <= h / 10.0);

  CHECK_THROWS_AS(make_grid(8, 1e-4), std::invalid_argument);
  CHECK_THROWS_AS(Grid({0.0, 0.5, 0.4, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid({0.0, 0.5, 0.9}), std::invalid_argument);
}

TEST_CASE("flat state has total 1/2") {
  for (double h : {0.5, 1e-2, 1e-4}) {
    const auto g = make_grid(512, h);
    RadialField f(g);
    const auto e = energy(f, {h, 1.0});
    CHECK(e.hoop_stretch == 0.0);
    CHECK(e.radial_bend == 0.0);
    CHECK(e.hoop_bend == 0.0);
    CHECK(std::abs(e.radial_stretch - 0.5) <= 1e-12);
    CHECK(std::abs(e.total - 0.5) <= 1e-12);
  }
}

TEST_CASE("ramped cone: hoop bending is h^2 (1/2 + log(1/r1))") {
  const double h = 0.05;
  const auto g = make_grid(256, h);
  RadialField f(g);
  for (std::size_t i = 1; i < f.wp.size(); ++i) f.wp[i] = 1.0;
  const double r1 = g.node(1);
  const auto e = energy(f, {h, 0.0});
  CHECK(e.hoop_bend == doctest::Approx(h * h * (0.5 + std::log(1.0 / r1))).epsilon(1e-12));
  // Radial stretch only on [0, r1] where wp = r / r1.
  const double rs = oracle::adaptive([&](double r) { return r * std::pow(r * r / (r1 * r1) - 1.0, 2); }, 0.0, r1);
  CHECK(e.radial_stretch == doctest::Approx(rs).epsilon(1e-10));
  CHECK(e.radial_bend == doctest::Approx(h * h * 0.5 * r1 * r1 / (r1 * r1)).epsilon(1e-12));
}

TEST_CASE("per-cell formulas agree with brute-force quadrature") {
  std::mt19937_64 rng(7);
  for (double h : {0.3, 1e-2}) {
    const auto g = make_grid(64, h);
    for (int trial = 0; trial < 3; ++trial) {
      const auto f = oracle::random_field(g, 0.3, rng);
      const auto e = energy(f, {h, 0.3});
      const auto o = oracle::discrete_energy(f, h);
      CHECK(e.hoop_stretch == doctest::Approx(o.hoop_stretch).epsilon(1e-10));
      CHECK(e.radial_stretch == doctest::Approx(o.radial_stretch).epsilon(1e-10));
      CHECK(e.radial_bend == doctest::Approx(o.radial_bend).epsilon(1e-10));
      CHECK(e.hoop_bend == doctest::Approx(o.hoop_bend).epsilon(1e-10));
      CHECK(e.total == doctest::Approx(e.hoop_stretch + e.radial_stretch + e.radial_bend + e.hoop_bend).epsilon(1e-15));
    }
  }
}

TEST_CASE("invert construction energy matches the continuum oracle") {
  const Params p{1e-3, 0.25};
  const auto cf = invert_closed_form(p);
  const auto o = oracle::closed_form_energy(cf, p.h);
  const double R = p.delta / 2.0, l = 0.1 * std::sqrt(p.h * p.delta);
  const auto g = oracle::banded_grid({0.2 * p.h, 0.4 * p.h, R - l, R + l}, 1e-4, 1.5e-4 * p.h);
  const auto e = energy(construct_invert(p, g), p);
  CHECK(std::abs(e.total - o.total) / o.total <= 1e-6);
}

TEST_CASE("grid refinement converges with second order") {
  const Params p{0.01, 0.3};
  const auto cf = invert_closed_form(p);
  const auto o = oracle::closed_form_energy(cf, p.h);
  const double R = p.delta / 2.0, l = 0.1 * std::sqrt(p.h * p.delta);
  std::vector<double> err, width;
  for (double s : {4.0, 2.0, 1.0}) {
    const auto g = oracle::banded_grid({0.2 * p.h, 0.4 * p.h, R - l, R + l}, 4e-3 * s, 4e-3 * p.h * s);
    const auto e = energy(construct_invert(p, g), p);
    err.push_back(std::abs(e.total - o.total));
    width.push_back(s);
  }
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double order = std::log(err[k] / err[k + 1]) / std::log(width[k] / width[k + 1]);
    CHECK(order >= 1.9);
  }
}

TEST_CASE("energy parts are nonnegative and depend on wp only through wp^2 and wp'^2") {
  std::mt19937_64 rng(11);
  const auto g = make_grid(128, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = oracle::random_field(g, 0.4, rng);
    const auto e = energy(f, {0.05, 0.4});
    CHECK(e.hoop_stretch >= 0.0);
    CHECK(e.radial_stretch >= 0.0);
    CHECK(e.radial_bend >= 0.0);
    CHECK(e.hoop_bend >= 0.0);
    for (double& v : f.wp) v = -v;
    const auto m = energy(f, {0.05, 0.4});
    CHECK(m.total == doctest::Approx(e.total).epsilon(1e-14));
    CHECK(m.radial_stretch == doctest::Approx(e.radial_stretch).epsilon(1e-14));
  }
}

TEST_CASE("energy rejects non-finite values and nonzero origin values") {
  const auto g = make_grid(32, 0.1);
  RadialField f(g);
  f.u[3] = NAN;
  CHECK_THROWS_AS(energy(f, {0.1, 0.0}), std::invalid_argument);
  RadialField f2(g);
  f2.u[0] = 0.1;
  CHECK_THROWS_AS(energy(f2, {0.1, 0.0}), std::invalid_argument);
}

TEST_CASE("diverged marker") {
  const auto g = make_grid(32, 0.1);
  RadialField f(g);
  for (std::size_t i = 1; i < f.u.size(); ++i) f.u[i] = 1e8;
  const auto e = energy(f, {0.1, 0.0});
  CHECK(e.diverged);
}

namespace {

double central_difference(RadialField f, const Params& p, bool u, std::size_t i, double step) {
  auto& v = u ? f.u : f.wp;
  const double x0 = v[i];
  v[i] = x0 + step;
  const double ep = energy(f, p).total;
  v[i] = x0 - step;
  const double em = energy(f, p).total;
  return (ep - em) / (2.0 * step);
}

}  // namespace

TEST_CASE("gradient at the flat state matches central differences") {
  const Params p{0.05, 1.0};
  const auto g = make_grid(256, p.h);
  RadialField f(g);
  const auto grad = energy_gradient(f, p);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> node(1, f.u.size() - 1);
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = node(rng);
    const double fd_u = central_difference(f, p, true, i, 1e-6);
    const double fd_w = central_difference(f, p, false, i, 1e-6);
    CHECK(grad.du[i] == doctest::Approx(fd_u).epsilon(1e-5));
    CHECK(std::abs(grad.dwp[i] - fd_w) <= 1e-5 * std::max(1e-8, std::abs(fd_w)) + 1e-12);
  }
  CHECK(grad.du[0] == 0.0);
  CHECK(grad.dwp[0] == 0.0);
}

TEST_CASE("gradient matches central differences on random fields") {
  const Params p{0.02, 0.3};
  const auto g = make_grid(128, p.h);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = oracle::random_field(g, p.delta, rng);
    const auto grad = energy_gradient(f, p);
    for (std::size_t i = 1; i < f.u.size(); i += 7) {
      const double fu = central_difference(f, p, true, i, 1e-6);
      const double fw = central_difference(f, p, false, i, 1e-6);
      CHECK(std::abs(grad.du[i] - fu) <= 1e-5 * std::abs(fu) + 1e-9);
      CHECK(std::abs(grad.dwp[i] - fw) <= 1e-5 * std::abs(fw) + 1e-9);
    }
  }
}

TEST_CASE("Gauss-Newton Hessian is symmetric positive semidefinite along random directions") {
  const Params p{0.05, 0.3};
  const auto g = make_grid(64, p.h);
  std::mt19937_64 rng(9);
  const auto f = oracle::random_field(g, p.delta, rng);
  const auto H = gauss_newton_hessian(f, p);
  const std::size_t n = pack_dofs(f).size();
  std::normal_distribution<double> N;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> v(n);
    for (double& x : v) x = N(rng);
    double q = 0.0;
    for (const auto& e : H) {
      CHECK(e.row >= e.col);
      const double t = e.value * v[static_cast<std::size_t>(e.row)] * v[static_cast<std::size_t>(e.col)];
      q += e.row == e.col ? t : 2.0 * t;
    }
    CHECK(q >= -1e-12);
  }
}

TEST_CASE("admissibility report") {
  const Params p{0.01, 0.1};
  const auto g = make_grid(1024, p.h);
  const auto rep = check_admissible(construct_flatten(p, g), p.delta);
  CHECK(rep.w0_residual <= 1e-12);
  CHECK(rep.w1_residual <= 1e-12);
  CHECK(rep.admissible());
  CHECK(std::isfinite(rep.u_norm_inv_r));
  CHECK(std::isfinite(rep.d2w_norm_r));

  RadialField zero(g);
  const auto z = check_admissible(zero, 0.5);
  CHECK(z.w1_residual == doctest::Approx(0.5));
  CHECK_FALSE(z.admissible());

  RadialField bad(g);
  bad.u[0] = 0.2;
  const auto b = check_admissible(bad, 1.0);
  CHECK_FALSE(b.admissible());
  CHECK(std::isinf(b.u_norm_inv_r));
  bool flagged = false;
  for (const auto& s : b.flags) flagged |= s.find("hoop-stretch") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("w is the exact integral of the piecewise linear wp") {
  const auto g = make_grid(64, 0.1);
  RadialField f(g);
  for (std::size_t i = 0; i < f.wp.size(); ++i) f.wp[i] = g.node(static_cast<int>(i));
  const auto w = f.w();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = g.node(static_cast<int>(i));
    CHECK(w[i] == doctest::Approx(0.5 * r * r).epsilon(1e-13));
  }
  const auto c = wp_integral_weights(g);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * f.wp[i];
  CHECK(s == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("field CSV round trip") {
  const Params p{1e-3, 0.5};
  const auto g = make_grid(512, p.h);
  const auto f = construct_invert(p, g);
  std::stringstream ss;
  write_field_csv(ss, f);
  const auto back = read_field_csv(ss);
  CHECK(back.grid == f.grid);
  CHECK(back.u == f.u);
  CHECK(back.wp == f.wp);
  CHECK(energy(back, p).total == energy(f, p).total);

  std::stringstream bad_header("r,u,wp\n0,0,0\n");
  CHECK_THROWS_AS(read_field_csv(bad_header), std::invalid_argument);
  std::stringstream bad_row("r,u,w,wp\n0,0,0,0\n1,0,x,0\n");
  CHECK_THROWS_AS(read_field_csv(bad_row), std::invalid_argument);
  std::stringstream short_row("r,u,w,wp\n0,0,0,0\n1,0,0\n");
  CHECK_THROWS_AS(read_field_csv(short_row), std::invalid_argument);
}
