#include "vkcone/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace vkcone {

namespace {

// 3-point Gauss-Legendre on [0, 1]; exact for the degree-5 radial stretch integrand.
constexpr std::array<double, 3> kGaussT = {0.1127016653792583114820735, 0.5,
                                           0.8872983346207416885179265};
constexpr std::array<double, 3> kGaussW = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// m_k = \int_0^1 t^k / (1 + rho t) dt for k = 0, 1, 2.
std::array<double, 3> inverse_moments(double rho) {
  std::array<double, 3> m{};
  if (rho <= 0.5) {
    for (int k = 0; k < 3; ++k) {
      double sum = 0.0, term = 1.0;
      for (int j = 0; j < 200; ++j) {
        const double add = term / (k + j + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= -rho;
      }
      m[static_cast<std::size_t>(k)] = sum;
    }
  } else {
    m[0] = std::log1p(rho) / rho;
    m[1] = (1.0 - m[0]) / rho;
    m[2] = (0.5 - m[1]) / rho;
  }
  return m;
}

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite ") + what + " value");
  }
}

void require_origin(const RadialField& f) {
  if (f.u.size() != f.grid.nodes().size() || f.wp.size() != f.grid.nodes().size()) {
    throw std::invalid_argument("field size does not match grid");
  }
  require_finite(f.u, "u");
  require_finite(f.wp, "wp");
  if (f.u.front() != 0.0) throw std::invalid_argument("u(0) must be 0");
  if (f.wp.front() != 0.0) throw std::invalid_argument("wp(0) must be 0");
}

double quad_form(const CellData& c, double a, double b, bool first) {
  const double q = c.m11 * b * b;
  if (first) return q;
  return c.m00 * a * a + 2.0 * c.m01 * a * b + q;
}

}  // namespace

void Params::validate() const {
  if (!(h > 0.0 && h <= 0.5)) throw std::invalid_argument("h must lie in (0, 1/2]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
}

Grid::Grid(std::vector<double> nodes, Grading grading)
    : nodes_(std::move(nodes)), grading_(grading) {
  if (nodes_.size() < 2) throw std::invalid_argument("grid needs at least one cell");
  if (nodes_.front() != 0.0 || nodes_.back() != 1.0) {
    throw std::invalid_argument("grid must start at 0 and end at 1");
  }
  cells_.resize(nodes_.size() - 1);
  for (std::size_t c = 0; c + 1 < nodes_.size(); ++c) {
    auto& cell = cells_[c];
    cell.a = nodes_[c];
    cell.b = nodes_[c + 1];
    cell.d = cell.b - cell.a;
    if (!(cell.d > 0.0)) throw std::invalid_argument("grid nodes must be strictly increasing");
    if (c == 0) {
      cell.inv_r[0] = std::numeric_limits<double>::infinity();
      cell.inv_r[1] = 1.0;
      cell.inv_r[2] = 0.5;
      cell.m00 = std::numeric_limits<double>::infinity();
      cell.m01 = 0.5;  // \int t(1-t)/r dr with r = d t
      cell.m11 = 0.5;
      continue;
    }
    const double rho = cell.d / cell.a;
    const auto m = inverse_moments(rho);
    for (int k = 0; k < 3; ++k) cell.inv_r[k] = rho * m[static_cast<std::size_t>(k)];
    cell.m00 = cell.inv_r[0] - 2.0 * cell.inv_r[1] + cell.inv_r[2];
    cell.m01 = cell.inv_r[1] - cell.inv_r[2];
    cell.m11 = cell.inv_r[2];
  }
}

double Grid::max_width() const {
  double w = 0.0;
  for (const auto& c : cells_) w = std::max(w, c.d);
  return w;
}

double Grid::min_width() const {
  double w = 1.0;
  for (const auto& c : cells_) w = std::min(w, c.d);
  return w;
}

Grid make_grid(int n_cells, double h) {
  if (!(h > 0.0 && h <= 0.5)) throw std::invalid_argument("make_grid: h must lie in (0, 1/2]");
  if (n_cells < 16) throw std::invalid_argument("make_grid: n_cells must be at least 16");

  const double first = h / 20.0;
  if (1.0 / n_cells <= first) {
    std::vector<double> nodes(static_cast<std::size_t>(n_cells) + 1);
    for (int i = 0; i <= n_cells; ++i) nodes[static_cast<std::size_t>(i)] = double(i) / n_cells;
    nodes.back() = 1.0;
    return Grid(std::move(nodes), {1.0 / n_cells, 1.0, 0, 1.0 / n_cells, h});
  }

  const double X = std::min(4.0 * h, 0.5);
  for (int m = 2; m < n_cells; ++m) {
    if (m * first >= X) break;
    auto excess = [&](double q) {
      double s = 0.0, p = 1.0;
      for (int k = 0; k < m; ++k, p *= q) s += p;
      return first * s - X;
    };
    double hi = 2.0;
    while (excess(hi) < 0.0) hi *= 2.0;
    boost::math::tools::eps_tolerance<double> tol(52);
    const auto bracket = boost::math::tools::bisect(excess, 1.0, hi, tol);
    const double q = 0.5 * (bracket.first + bracket.second);
    const double last = first * std::pow(q, m - 1);
    const double uniform = (1.0 - X) / (n_cells - m);
    if (last > uniform) continue;

    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n_cells) + 1);
    nodes.push_back(0.0);
    double r = 0.0, w = first;
    for (int k = 0; k < m - 1; ++k, w *= q) {
      r += w;
      nodes.push_back(r);
    }
    nodes.push_back(X);
    for (int k = 1; k < n_cells - m; ++k) nodes.push_back(X + k * uniform);
    nodes.push_back(1.0);

    int inside = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i) inside += nodes[i] <= h * (1.0 + 1e-12);
    if (inside < 8) continue;
    return Grid(std::move(nodes), {first, q, m, uniform, h});
  }
  throw std::invalid_argument("make_grid: too few cells to resolve the boundary layer at this h");
}

RadialField::RadialField(Grid g)
    : grid(std::move(g)), u(grid.nodes().size(), 0.0), wp(grid.nodes().size(), 0.0) {}

RadialField::RadialField(Grid g, std::vector<double> u_, std::vector<double> wp_)
    : grid(std::move(g)), u(std::move(u_)), wp(std::move(wp_)) {
  if (u.size() != grid.nodes().size() || wp.size() != grid.nodes().size()) {
    throw std::invalid_argument("field size does not match grid");
  }
}

std::vector<double> RadialField::w() const {
  std::vector<double> out(wp.size(), 0.0);
  for (int c = 0; c < grid.n_cells(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    out[i + 1] = out[i] + 0.5 * grid.cell(c).d * (wp[i] + wp[i + 1]);
  }
  return out;
}

double RadialField::w_end() const { return w().back(); }

std::vector<double> wp_integral_weights(const Grid& grid) {
  std::vector<double> c(grid.nodes().size(), 0.0);
  for (int k = 0; k < grid.n_cells(); ++k) {
    const double half = 0.5 * grid.cell(k).d;
    c[static_cast<std::size_t>(k)] += half;
    c[static_cast<std::size_t>(k) + 1] += half;
  }
  return c;
}

EnergyBreakdown energy(const RadialField& f, const Params& p) {
  require_origin(f);
  const double h2 = p.h * p.h;
  EnergyBreakdown e;
  for (int k = 0; k < f.grid.n_cells(); ++k) {
    const auto& c = f.grid.cell(k);
    const auto i = static_cast<std::size_t>(k);
    const double ua = f.u[i], ub = f.u[i + 1], pa = f.wp[i], pb = f.wp[i + 1];
    e.hoop_stretch += quad_form(c, ua, ub, k == 0);
    e.hoop_bend += h2 * quad_form(c, pa, pb, k == 0);
    const double sigma = (pb - pa) / c.d;
    e.radial_bend += h2 * sigma * sigma * c.d * 0.5 * (c.a + c.b);
    const double s = (ub - ua) / c.d;
    for (std::size_t q = 0; q < 3; ++q) {
      const double t = kGaussT[q];
      const double pw = pa + (pb - pa) * t;
      const double ex = s - 1.0 + pw * pw;
      e.radial_stretch += kGaussW[q] * c.d * (c.a + c.d * t) * ex * ex;
    }
  }
  e.total = e.hoop_stretch + e.radial_stretch + e.radial_bend + e.hoop_bend;
  e.diverged = !(e.hoop_stretch <= kDivergenceThreshold && e.radial_stretch <= kDivergenceThreshold &&
                 e.radial_bend <= kDivergenceThreshold && e.hoop_bend <= kDivergenceThreshold);
  return e;
}

FieldCovector energy_gradient(const RadialField& f, const Params& p) {
  require_origin(f);
  const double h2 = p.h * p.h;
  const std::size_t n = f.u.size();
  FieldCovector g{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (int k = 0; k < f.grid.n_cells(); ++k) {
    const auto& c = f.grid.cell(k);
    const auto i = static_cast<std::size_t>(k);
    const double ua = f.u[i], ub = f.u[i + 1], pa = f.wp[i], pb = f.wp[i + 1];
    double gua = 0.0, gub = 0.0, gpa = 0.0, gpb = 0.0;
    if (k > 0) {
      gua += 2.0 * (c.m00 * ua + c.m01 * ub);
      gpa += 2.0 * h2 * (c.m00 * pa + c.m01 * pb);
    }
    gub += 2.0 * (c.m01 * ua + c.m11 * ub);
    gpb += 2.0 * h2 * (c.m01 * pa + c.m11 * pb);
    const double sigma = (pb - pa) / c.d;
    const double bend = h2 * sigma * (c.a + c.b);
    gpa -= bend;
    gpb += bend;
    const double s = (ub - ua) / c.d;
    for (std::size_t q = 0; q < 3; ++q) {
      const double t = kGaussT[q];
      const double r = c.a + c.d * t;
      const double pw = pa + (pb - pa) * t;
      const double ex = s - 1.0 + pw * pw;
      const double wre = kGaussW[q] * r * ex;
      gua -= 2.0 * wre;
      gub += 2.0 * wre;
      gpa += 4.0 * wre * c.d * pw * (1.0 - t);
      gpb += 4.0 * wre * c.d * pw * t;
    }
    g.du[i] += gua;
    g.du[i + 1] += gub;
    g.dwp[i] += gpa;
    g.dwp[i + 1] += gpb;
  }
  g.du[0] = 0.0;
  g.dwp[0] = 0.0;
  return g;
}

bool AdmissibilityReport::admissible(double tol) const {
  return w0_residual <= tol && w1_residual <= tol && u_origin == 0.0 && wp_origin == 0.0 &&
         std::isfinite(u_norm_inv_r) && std::isfinite(du_norm_r) && std::isfinite(dw_norm_inv_r) &&
         std::isfinite(d2w_norm_r);
}

AdmissibilityReport check_admissible(const RadialField& f, double delta) {
  AdmissibilityReport rep;
  const auto w = f.w();
  rep.w0_residual = std::abs(w.front());
  rep.w1_residual = std::abs(w.back() - (1.0 - delta));
  rep.u_origin = std::abs(f.u.front());
  rep.wp_origin = std::abs(f.wp.front());
  double un = 0.0, dun = 0.0, dwn = 0.0, d2wn = 0.0;
  for (int k = 0; k < f.grid.n_cells(); ++k) {
    const auto& c = f.grid.cell(k);
    const auto i = static_cast<std::size_t>(k);
    un += quad_form(c, f.u[i], f.u[i + 1], k == 0);
    dwn += quad_form(c, f.wp[i], f.wp[i + 1], k == 0);
    const double s = (f.u[i + 1] - f.u[i]) / c.d;
    const double sigma = (f.wp[i + 1] - f.wp[i]) / c.d;
    dun += s * s * c.d * 0.5 * (c.a + c.b);
    d2wn += sigma * sigma * c.d * 0.5 * (c.a + c.b);
  }
  if (rep.u_origin != 0.0) {
    un = std::numeric_limits<double>::infinity();
    rep.flags.push_back("u(0) != 0: hoop-stretch weight 1/r diverges");
  }
  if (rep.wp_origin != 0.0) {
    dwn = std::numeric_limits<double>::infinity();
    rep.flags.push_back("wp(0) != 0: hoop-bend weight 1/r diverges");
  }
  rep.u_norm_inv_r = std::sqrt(un);
  rep.du_norm_r = std::sqrt(dun);
  rep.dw_norm_inv_r = std::sqrt(dwn);
  rep.d2w_norm_r = std::sqrt(d2wn);
  if (!std::isfinite(rep.du_norm_r) || !std::isfinite(rep.d2w_norm_r) ||
      (rep.u_origin == 0.0 && !std::isfinite(rep.u_norm_inv_r)) ||
      (rep.wp_origin == 0.0 && !std::isfinite(rep.dw_norm_inv_r))) {
    rep.flags.push_back("non-finite nodal values");
  }
  if (rep.w1_residual > 1e-10) rep.flags.push_back("w(1) != 1 - delta");
  return rep;
}

std::vector<double> pack_dofs(const RadialField& f) {
  const std::size_t n = f.u.size() - 1;
  std::vector<double> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[2 * i] = f.u[i + 1];
    x[2 * i + 1] = f.wp[i + 1];
  }
  return x;
}

void unpack_dofs(const std::vector<double>& x, RadialField& f) {
  const std::size_t n = f.u.size() - 1;
  if (x.size() != 2 * n) throw std::invalid_argument("unpack_dofs: size mismatch");
  f.u[0] = 0.0;
  f.wp[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f.u[i + 1] = x[2 * i];
    f.wp[i + 1] = x[2 * i + 1];
  }
}

std::vector<double> pack_covector(const FieldCovector& g) {
  const std::size_t n = g.du.size() - 1;
  std::vector<double> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[2 * i] = g.du[i + 1];
    x[2 * i + 1] = g.dwp[i + 1];
  }
  return x;
}

std::vector<HessianEntry> gauss_newton_hessian(const RadialField& f, const Params& p, bool exact) {
  require_origin(f);
  const double h2 = p.h * p.h;
  std::vector<HessianEntry> out;
  out.reserve(static_cast<std::size_t>(f.grid.n_cells()) * 10);
  for (int k = 0; k < f.grid.n_cells(); ++k) {
    const auto& c = f.grid.cell(k);
    const auto i = static_cast<std::size_t>(k);
    const double ua = f.u[i], ub = f.u[i + 1], pa = f.wp[i], pb = f.wp[i + 1];
    // Local ordering (ua, pa, ub, pb).
    double H[4][4] = {};
    if (k > 0) {
      H[0][0] += 2.0 * c.m00;
      H[0][2] += 2.0 * c.m01;
      H[1][1] += 2.0 * h2 * c.m00;
      H[1][3] += 2.0 * h2 * c.m01;
    }
    H[2][2] += 2.0 * c.m11;
    H[3][3] += 2.0 * h2 * c.m11;
    const double bend = 2.0 * h2 * (c.a + c.b) / (2.0 * c.d);
    H[1][1] += bend;
    H[1][3] -= bend;
    H[3][3] += bend;
    const double s = (ub - ua) / c.d;
    for (std::size_t q = 0; q < 3; ++q) {
      const double t = kGaussT[q];
      const double r = c.a + c.d * t;
      const double pw = pa + (pb - pa) * t;
      const double ex = s - 1.0 + pw * pw;
      const double wdr = 2.0 * kGaussW[q] * c.d * r;
      const double J[4] = {-1.0 / c.d, 2.0 * pw * (1.0 - t), 1.0 / c.d, 2.0 * pw * t};
      for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) H[a][b] += wdr * J[a] * J[b];
      const double curv = wdr * (exact ? ex : std::max(ex, 0.0)) * 2.0;
      H[1][1] += curv * (1.0 - t) * (1.0 - t);
      H[1][3] += curv * t * (1.0 - t);
      H[3][3] += curv * t * t;
    }
    // Global packed indices; node 0 is not a DOF.
    const int base = 2 * (k - 1);
    const int idx[4] = {base, base + 1, base + 2, base + 3};
    for (int a = 0; a < 4; ++a) {
      if (k == 0 && a < 2) continue;
      for (int b = a; b < 4; ++b) {
        if (k == 0 && b < 2) continue;
        const int r = std::max(idx[a], idx[b]);
        const int cc = std::min(idx[a], idx[b]);
        out.push_back({r, cc, H[a][b]});
      }
    }
  }
  return out;
}

}  // namespace vkcone
