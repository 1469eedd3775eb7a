#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "vkcone/ridge.hpp"

namespace vkcone {

namespace {

constexpr int kCellsPerH = 32;

const Mat2 kSigmaGrad = 4.0 * kPyramidAlpha * kPyramidAlpha * (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();

// Radial bump exp(-1/(1 - rho^2)) and its derivative in rho.
double bump(double rho) { return rho < 1.0 ? std::exp(-1.0 / (1.0 - rho * rho)) : 0.0; }
double bump_d(double rho) {
  if (rho >= 1.0) return 0.0;
  const double q = 1.0 - rho * rho;
  return bump(rho) * (-2.0 * rho / (q * q));
}

// Mollified W on the nodes of a uniform grid around the vertex, with
// bilinear interpolation in between.
struct Mollified {
  Vec2 z;
  double h = 0.0, dx = 0.0;
  int n = kCellsPerH + 2;
  std::vector<double> M;
  std::vector<Vec2> DM;
  std::vector<Mat2> D2M;

  int stride() const { return 2 * n + 1; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>((i + n) * stride() + (j + n)); }

  void at(const Vec2& x, double& m, Vec2& dm, Mat2& d2m) const {
    const Vec2 u = (x - z) / dx;
    const int i0 = std::clamp(static_cast<int>(std::floor(u.x())), -n, n - 1);
    const int j0 = std::clamp(static_cast<int>(std::floor(u.y())), -n, n - 1);
    const double a = u.x() - i0, b = u.y() - j0;
    const double w[4] = {(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
    const std::size_t k[4] = {idx(i0, j0), idx(i0 + 1, j0), idx(i0, j0 + 1), idx(i0 + 1, j0 + 1)};
    m = 0.0;
    dm.setZero();
    d2m.setZero();
    for (int q = 0; q < 4; ++q) {
      m += w[q] * M[k[q]];
      dm += w[q] * DM[k[q]];
      d2m += w[q] * D2M[k[q]];
    }
  }
};

std::shared_ptr<Mollified> mollify(const PlanarMap& fields, const Vec2& z, double h) {
  auto out = std::make_shared<Mollified>();
  out->z = z;
  out->h = h;
  out->dx = h / kCellsPerH;
  const double dx = out->dx;
  const int n = out->n;
  const int K = kCellsPerH;
  const int S = n + K;
  const int ss = 2 * S + 1;

  std::vector<double> W(static_cast<std::size_t>(ss * ss));
  std::vector<Vec2> DW(W.size());
  for (int i = -S; i <= S; ++i) {
    for (int j = -S; j <= S; ++j) {
      const auto s = fields(z + dx * Vec2(i, j));
      const auto k = static_cast<std::size_t>((i + S) * ss + (j + S));
      W[k] = s.W;
      DW[k] = s.DW;
    }
  }

  // Kernel tabulated at integer offsets. The taps are quadrature weights:
  // sum phi = 1 and sum y_1 dphi_1 = -1, so constants and linear
  // functions are reproduced exactly.
  struct Tap {
    int i, j;
    double phi;
    Vec2 dphi;
  };
  std::vector<Tap> taps;
  double mass = 0.0, moment = 0.0;
  for (int i = -K; i <= K; ++i) {
    for (int j = -K; j <= K; ++j) {
      const double rho = std::hypot(i, j) / K;
      if (rho >= 1.0) continue;
      Tap t{i, j, bump(rho), Vec2::Zero()};
      if (rho > 0.0) t.dphi = bump_d(rho) / (h * rho * K) * Vec2(i, j);
      mass += t.phi;
      moment += dx * i * t.dphi.x();
      taps.push_back(t);
    }
  }
  for (auto& t : taps) {
    t.phi /= mass;
    t.dphi *= -1.0 / moment;
  }

  const auto m = static_cast<std::size_t>(out->stride() * out->stride());
  out->M.assign(m, 0.0);
  out->DM.assign(m, Vec2::Zero());
  out->D2M.assign(m, Mat2::Zero());
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      double acc = 0.0;
      Vec2 dacc = Vec2::Zero();
      Mat2 hacc = Mat2::Zero();
      for (const auto& t : taps) {
        const auto k = static_cast<std::size_t>((i - t.i + S) * ss + (j - t.j + S));
        acc += W[k] * t.phi;
        dacc += DW[k] * t.phi;
        hacc += DW[k] * t.dphi.transpose();
      }
      const auto o = out->idx(i, j);
      out->M[o] = acc;
      out->DM[o] = dacc;
      out->D2M[o] = hacc;
    }
  }
  return out;
}

PlanarSample blended(const PlanarMap& fields, const Mollified& mo, const Vec2& x) {
  auto s = fields(x);
  const Vec2 rv = x - mo.z;
  const double r = rv.norm();
  if (r >= mo.h) return s;
  // psi = 1 - S(2 (r/h - 1/2)): one on B_{h/2}, zero outside B_h.
  const auto st = smooth_step(2.0 * (r / mo.h - 0.5));
  const double psi = 1.0 - st.value();
  const double dpsi = -st.derivative(1) * 2.0 / mo.h;
  const double d2psi = -st.derivative(2) * 4.0 / (mo.h * mo.h);
  Vec2 gpsi = Vec2::Zero();
  Mat2 hpsi = Mat2::Zero();
  if (r > 0.0 && dpsi != 0.0) {
    const Vec2 e = rv / r;
    gpsi = dpsi * e;
    hpsi = d2psi * e * e.transpose() + (dpsi / r) * (Mat2::Identity() - e * e.transpose());
  }
  double m;
  Vec2 dm;
  Mat2 d2m;
  mo.at(x, m, dm, d2m);
  const double dw0 = m - s.W;
  const Vec2 dgrad = dm - s.DW;
  PlanarSample out = s;
  out.W = psi * m + (1.0 - psi) * s.W;
  out.DW = psi * dm + (1.0 - psi) * s.DW + dw0 * gpsi;
  out.D2W = psi * d2m + (1.0 - psi) * s.D2W + gpsi * dgrad.transpose() + dgrad * gpsi.transpose() +
            dw0 * hpsi;
  return out;
}

}  // namespace

VertexBall vertex_smooth(const PlanarMap& fields, const Vec2& center, double h, double clip_radius) {
  if (!(h > 0.0)) throw std::invalid_argument("vertex_smooth: radius must be positive");
  const auto mo = mollify(fields, center, h);
  PlanarMap smoothed(
      [fields, mo](const Vec2& x) { return blended(fields, *mo, x); },
      "vertex-smoothed: " + fields.description());

  // Polar Gauss quadrature on B_h(center); the angular resolution follows
  // the ridges, whose angular width stays bounded below near the vertex.
  using G = boost::math::quadrature::gauss<double, 8>;
  std::vector<double> gx, gw;
  for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
    gx.push_back(-G::abscissa()[i]);
    gw.push_back(G::weights()[i]);
    gx.push_back(G::abscissa()[i]);
    gw.push_back(G::weights()[i]);
  }
  constexpr int kRadialPanels = 4, kAngularPanels = 128;
  VertexBall out{center, h, 0.0, 0.0, 0.0, smoothed};
  const double dr = h / kRadialPanels, dt = 2.0 * std::numbers::pi / kAngularPanels;
  for (int pr = 0; pr < kRadialPanels; ++pr) {
    for (std::size_t a = 0; a < gx.size(); ++a) {
      const double r = dr * (pr + 0.5 + 0.5 * gx[a]);
      const double wr = 0.5 * dr * gw[a] * r;
      for (int pt = 0; pt < kAngularPanels; ++pt) {
        for (std::size_t b = 0; b < gx.size(); ++b) {
          const double th = dt * (pt + 0.5 + 0.5 * gx[b]);
          const Vec2 x = center + r * Vec2(std::cos(th), std::sin(th));
          if (x.norm() > clip_radius) continue;
          const auto s = blended(fields, *mo, x);
          const double w = wr * 0.5 * dt * gw[b];
          out.membrane += w * membrane_density(s);
          out.hessian_sq += w * bending_density(s);
        }
      }
    }
  }
  out.bending = h * h * out.hessian_sq;
  return out;
}

std::vector<PyramidQuad> pyramid_quads() {
  const double r = (2.0 - std::sqrt(2.0)) / 4.0;     // incenter of an inner face
  const double t = (std::sqrt(2.0) + 0.5) / 4.0;     // center of the largest disc in an outer face
  const Vec2 O(0, 0);
  const Vec2 e1(0.5, 0), e2(0, 0.5), f1(1, 0), f2(0, 1);
  auto in = [&](double s1, double s2) { return Vec2(s1 * r, s2 * r); };
  auto out = [&](double s1, double s2) { return Vec2(s1 * t, s2 * t); };
  return {
      {"inner +x1", {O, in(1, 1), e1, in(1, -1)}, false},
      {"inner +x2", {O, in(-1, 1), e2, in(1, 1)}, false},
      {"inner -x1", {O, in(-1, 1), -e1, in(-1, -1)}, true},
      {"inner -x2", {O, in(1, -1), -e2, in(-1, -1)}, false},
      {"outer +x1", {e1, out(1, 1), f1, out(1, -1)}, false},
      {"outer +x2", {e2, out(-1, 1), f2, out(1, 1)}, false},
      {"outer -x1", {-e1, out(-1, 1), -f1, out(-1, -1)}, true},
      {"outer -x2", {-e2, out(1, -1), -f2, out(-1, -1)}, false},
      {"diamond Q1", {e1, in(1, 1), e2, out(1, 1)}, false},
      {"diamond Q2", {e2, in(-1, 1), -e1, out(-1, 1)}, false},
      {"diamond Q3", {-e1, in(-1, -1), -e2, out(-1, -1)}, false},
      {"diamond Q4", {-e2, in(1, -1), e1, out(1, -1)}, false},
  };
}

std::vector<Vec2> pyramid_vertices() {
  return {Vec2(0, 0),  Vec2(0.5, 0), Vec2(0, 0.5), Vec2(-0.5, 0), Vec2(0, -0.5),
          Vec2(1, 0),  Vec2(0, 1),   Vec2(-1, 0),  Vec2(0, -1)};
}

double pyramid_h_max() {
  double lmin = std::numeric_limits<double>::infinity();
  for (const auto& q : pyramid_quads()) lmin = std::min(lmin, (q.quad[2] - q.quad[0]).norm());
  return lmin / 8.0;
}

namespace {

struct RidgedPyramid {
  std::vector<RidgeField> fields;
  std::vector<bool> corrected;
  std::vector<std::string> labels;

  PlanarSample operator()(const Vec2& x) const {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!fields[k].in_strip(x)) continue;
      auto s = fields[k].global(x);
      if (corrected[k] && x.y() > 0.0) {
        s.V += sigma_correction(x);
        s.DV += kSigmaGrad;
      }
      return s;
    }
    return sharp_pyramid()(x);
  }
};

std::shared_ptr<RidgedPyramid> build_ridged(double h) {
  if (!(h > 0.0) || !(h < pyramid_h_max())) {
    throw std::invalid_argument("pyramid: requires 0 < h < " + std::to_string(pyramid_h_max()));
  }
  auto out = std::make_shared<RidgedPyramid>();
  const auto plain = sharp_pyramid();
  const auto corr = sharp_pyramid_sigma_corrected();
  for (const auto& q : pyramid_quads()) {
    const auto patch = fold_coeffs(q.sigma_corrected ? corr : plain, q.quad);
    const auto prof = gamma_profiles(patch.a(7), patch.a(8));
    const auto f = width_profile(patch.tau, h, patch.length);
    out->fields.push_back(ridge_fields(patch, prof, f, h));
    out->corrected.push_back(q.sigma_corrected);
    out->labels.push_back(q.label);
  }
  return out;
}

}  // namespace

PlanarMap pyramid_ridged_map(double h) {
  auto rp = build_ridged(h);
  return PlanarMap([rp](const Vec2& x) { return (*rp)(x); }, "ridged pyramid");
}

PyramidResult pyramid_energy(double h, const PyramidOptions& opts) {
  auto rp = build_ridged(h);
  const PlanarMap map([rp](const Vec2& x) { return (*rp)(x); }, "ridged pyramid");
  const double clip = opts.quadrature.clip_radius;
  const auto verts = pyramid_vertices();
  const std::size_t np = rp->fields.size(), nb = verts.size();

  std::vector<PatchEnergy> pe(np);
  std::vector<std::pair<double, double>> be(nb);
  auto run_patch = [&](std::size_t k) { pe[k] = patch_energy(rp->fields[k], h, opts.quadrature); };
  auto run_ball = [&](std::size_t k) {
    const auto b = vertex_smooth(map, verts[k], h, clip);
    be[k] = {b.membrane, b.bending};
  };
  const std::size_t tasks = np + nb;
  auto run = [&](std::size_t k) { k < np ? run_patch(k) : run_ball(k - np); };
  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    for (std::size_t k = 0; k < tasks; ++k) run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < tasks;) run(k);
      }));
    }
    for (auto& f : pool) f.get();
  }

  PyramidResult res;
  res.h = h;
  res.converged = true;
  for (std::size_t k = 0; k < np; ++k) {
    const auto& p = rp->fields[k].patch();
    res.patches.push_back({rp->labels[k], p.vertices[0], p.vertices[2], p.length, p.tau, rp->corrected[k], pe[k]});
    res.patch_sum += pe[k].total;
    res.converged = res.converged && pe[k].converged;
  }
  for (std::size_t k = 0; k < nb; ++k) {
    res.balls.push_back({verts[k], be[k].first, be[k].second});
    res.ball_sum += be[k].first + be[k].second;
  }
  res.total = res.patch_sum + res.ball_sum;
  return res;
}

FieldGrid pyramid_w_grid(double h, int n) {
  if (n < 2) throw std::invalid_argument("pyramid_w_grid: need at least 2 points per side");
  const auto ridged = pyramid_ridged_map(h);
  std::vector<std::shared_ptr<Mollified>> mol;
  const auto verts = pyramid_vertices();
  for (const auto& z : verts) mol.push_back(mollify(ridged, z, h));
  FieldGrid g;
  g.n = n;
  for (int i = 0; i < n; ++i) g.x.push_back(-1.0 + 2.0 * i / (n - 1));
  g.y = g.x;
  g.w.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 x(g.x[static_cast<std::size_t>(i)], g.y[static_cast<std::size_t>(j)]);
      double w = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t k = 0; k < verts.size(); ++k) {
        if ((x - verts[k]).norm() < h) {
          w = blended(ridged, *mol[k], x).W;
          break;
        }
      }
      if (std::isnan(w)) w = ridged(x).W;
      g.w[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = w;
    }
  }
  return g;
}

}  // namespace vkcone
