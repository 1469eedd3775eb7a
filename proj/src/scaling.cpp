#include "vkcone/scaling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>

#include "vkcone/constructions.hpp"
#include "vkcone/io.hpp"

namespace vkcone {

namespace {

bool in_wells(double v) { return (v > 0.5 && v < 1.5) || (v > -1.5 && v < -0.5); }

// Piecewise linear wp at an arbitrary radius, with the slope of the cell
// containing (r_lo + r_hi)/2 for a sub-interval that lies inside one cell.
struct WpEval {
  const std::vector<double>& r;
  const std::vector<double>& wp;

  std::size_t cell(double x) const {
    auto it = std::upper_bound(r.begin(), r.end(), x);
    std::size_t c = it == r.begin() ? 0 : static_cast<std::size_t>(it - r.begin()) - 1;
    return std::min(c, r.size() - 2);
  }
  double slope(std::size_t c) const { return (wp[c + 1] - wp[c]) / (r[c + 1] - r[c]); }
  double value(double x, std::size_t c) const { return wp[c] + slope(c) * (x - r[c]); }
};

// Break points of [lo, hi] at grid nodes, so each piece lies in one cell.
std::vector<double> pieces(const std::vector<double>& r, double lo, double hi) {
  std::vector<double> p{lo};
  for (double x : r) {
    if (x > lo && x < hi) p.push_back(x);
  }
  p.push_back(hi);
  return p;
}

double trapezoid_sq(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 0.5 * (x[i + 1] - x[i]) * (f[i] * f[i] + f[i + 1] * f[i + 1]);
  }
  return s;
}

}  // namespace

double strain_floor(const RadialField& field) {
  using boost::math::quadrature::gauss;
  const auto& r = field.grid.nodes();
  const auto& wp = field.wp;
  double s = 0.0;
  for (std::size_t c = 0; c + 1 < r.size(); ++c) {
    const double a = r[c], d = r[c + 1] - a, p = wp[c], q = wp[c + 1];
    auto sq = [&](double t) { return std::pow(p + (q - p) * t, 2); };
    const double m = gauss<double, 4>::integrate([&](double t) { return (a + d * t) * sq(t); }, 0.0, 1.0) /
                     (a + 0.5 * d);
    s += d * gauss<double, 4>::integrate([&](double t) { return (a + d * t) * std::pow(sq(t) - m, 2); }, 0.0, 1.0);
  }
  return s;
}

double well_exit_radius(const RadialField& field) {
  const auto& r = field.grid.nodes();
  for (std::size_t i = r.size() - 1; i >= 1; --i) {
    if (!in_wells(field.wp[i])) return r[i];
  }
  return 0.0;
}

ExcessSample excess_function(const RadialField& field, double a) {
  if (!(a > 0.0 && a <= 0.5)) throw std::invalid_argument("excess_function: a must lie in (0, 1/2]");
  const auto& r = field.grid.nodes();
  const WpEval wp{r, field.wp};
  const auto p = pieces(r, a, 2.0 * a);

  ExcessSample out;
  out.a = a;
  const std::size_t n = 2 * (p.size() - 1) + 1;
  out.r.resize(n);
  out.g.resize(n);
  out.g2.resize(n);
  std::vector<double> slope(p.size() - 1);

  auto excess = [](double v) { return 1.0 - v * v; };
  double acc = 0.0;
  out.r[0] = p[0];
  out.g[0] = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double lo = p[k], hi = p[k + 1], mid = 0.5 * (lo + hi);
    const std::size_t c = wp.cell(mid);
    slope[k] = wp.slope(c);
    const double v0 = wp.value(lo, c), vm = wp.value(mid, c), v1 = wp.value(hi, c);
    // 1 - wp^2 is quadratic on the piece, so Simpson is exact on both halves.
    const double q1 = wp.value(0.5 * (lo + mid), c), q3 = wp.value(0.5 * (mid + hi), c);
    const double half = 0.5 * (hi - lo);
    const double to_mid = half / 6.0 * (excess(v0) + 4.0 * excess(q1) + excess(vm));
    const double to_end = to_mid + half / 6.0 * (excess(vm) + 4.0 * excess(q3) + excess(v1));
    out.r[2 * k + 1] = mid;
    out.g[2 * k + 1] = acc + to_mid;
    out.g2[2 * k + 1] = -2.0 * vm * slope[k];
    acc += to_end;
    out.r[2 * k + 2] = hi;
    out.g[2 * k + 2] = acc;
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    const std::size_t c = wp.cell(std::min(p[k], r.back()));
    const double v = wp.value(p[k], c);
    const double sl = k == 0 ? slope.front()
                      : k + 1 == p.size() ? slope.back()
                                          : 0.5 * (slope[k - 1] + slope[k]);
    out.g2[2 * k] = -2.0 * v * sl;
  }

  // g is cubic on each piece: Simpson gives the exact mean.
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    integral += (p[k + 1] - p[k]) / 6.0 * (out.g[2 * k] + 4.0 * out.g[2 * k + 1] + out.g[2 * k + 2]);
  }
  const double c_a = -integral / a;
  for (double& v : out.g) v += c_a;

  double sq = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double g0 = out.g[2 * k], gm = out.g[2 * k + 1], g1 = out.g[2 * k + 2];
    sq += (p[k + 1] - p[k]) / 6.0 * (g0 * g0 + 4.0 * gm * gm + g1 * g1);
  }
  out.l2_norm = std::sqrt(std::max(sq, 0.0));
  return out;
}

double oscillation_check(const std::vector<double>& x, const std::vector<double>& f,
                         const std::vector<double>& f2) {
  if (x.size() < 2 || f.size() != x.size() || f2.size() != x.size()) {
    throw std::invalid_argument("oscillation_check: need at least 2 samples of x, f, f'' of equal length");
  }
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (!(x[i + 1] > x[i])) throw std::invalid_argument("oscillation_check: x must be increasing");
  }
  const auto [mn, mx] = std::minmax_element(f.begin(), f.end());
  const double osc = *mx - *mn;
  if (osc == 0.0) return 0.0;
  const double nf = std::sqrt(trapezoid_sq(x, f));
  const double nf2 = std::sqrt(trapezoid_sq(x, f2));
  const double len = x.back() - x.front();
  const double den = std::pow(nf, 0.75) * std::pow(nf2, 0.25) + nf / std::sqrt(len);
  if (!(den > 0.0)) throw std::invalid_argument("oscillation_check: zero denominator with nonzero oscillation");
  return osc / den;
}

std::map<std::string, double> diagnostics(const RadialField& field, const Params& params,
                                          double energy) {
  const auto& r = field.grid.nodes();
  const auto& wp = field.wp;
  std::map<std::string, double> d;

  double jump = 0.0;
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) jump = std::max(jump, std::abs(wp[i + 1] - wp[i]));
  d["max_wp_jump"] = jump;
  if (energy > 0.0) d["strain_floor_ratio"] = strain_floor(field) / energy;

  double wmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] >= params.delta / 8.0) wmin = std::min(wmin, wp[i]);
  }
  d["wp_min_outer"] = wmin;

  // \int_0^{4h} |wp|, exact for the piecewise linear wp.
  const double R = std::min(4.0 * params.h, 1.0);
  const WpEval ev{r, wp};
  double l1 = 0.0;
  for (std::size_t c = 0; c + 1 < r.size() && r[c] < R; ++c) {
    const double b = std::min(r[c + 1], R);
    const double p = wp[c], q = ev.value(b, c), len = b - r[c];
    l1 += p * q >= 0.0 ? 0.5 * (std::abs(p) + std::abs(q)) * len
                       : 0.5 * (p * p + q * q) / (std::abs(p) + std::abs(q)) * len;
  }
  d["wp_l1_origin"] = l1 / R;

  auto resolved = [&](double a) {
    const auto lo = std::upper_bound(r.begin(), r.end(), a);
    const auto hi = std::lower_bound(r.begin(), r.end(), 2.0 * a);
    return hi - lo >= 4;
  };
  const double sqrtE = std::sqrt(std::max(energy, 0.0));
  auto excess_ratio = [&](const ExcessSample& g) { return g.l2_norm / (std::sqrt(g.a) * sqrtE); };
  auto oscillation_ratio = [&](const ExcessSample& g) { return oscillation_check(g.r, g.g, g.g2); };

  using boost::math::quadrature::gauss;
  double excess = 0.0, osc = 0.0, l1max = 0.0;
  for (double a = 0.5; a >= params.h; a *= 0.5) {
    if (!resolved(a)) break;
    const auto g = excess_function(field, a);
    if (sqrtE > 0.0) excess = std::max(excess, excess_ratio(g));
    osc = std::max(osc, oscillation_ratio(g));
    const auto p = pieces(r, a, 2.0 * a);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      const std::size_t c = ev.cell(0.5 * (p[k] + p[k + 1]));
      s += gauss<double, 5>::integrate([&](double x) { return std::abs(1.0 - std::pow(ev.value(x, c), 2)); },
                                       p[k], p[k + 1]);
    }
    l1max = std::max(l1max, s / a);
  }
  if (sqrtE > 0.0) d["excess_max"] = excess;
  d["oscillation_max"] = osc;
  d["excess_l1_max"] = l1max;

  const double a = params.delta / 4.0;
  if (a > 0.0 && a <= 0.5 && resolved(a)) {
    const auto g = excess_function(field, a);
    if (sqrtE > 0.0) d["excess_ratio"] = excess_ratio(g);
    d["oscillation_ratio"] = oscillation_ratio(g);
  }
  return d;
}

std::string SweepRecord::key() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "h=%.17g;delta=%.17g;cells=%d;seed=%llu", params.h, params.delta, cells,
                static_cast<unsigned long long>(seed));
  return buf;
}

std::optional<std::string> classify_regime(const SweepRecord& rec) {
  if (!rec.error.empty() || !rec.converged) return std::nullopt;
  if (rec.params.delta <= rec.params.h) return "cone";
  const auto it = rec.diagnostics.find("wp_min_outer");
  const bool inverted = it != rec.diagnostics.end() && it->second < -0.5;
  if (rec.tau > rec.params.delta / 8.0 && inverted) return "inversion";
  return "boundary-layer";
}

SweepRecord run_point(const Params& params, int cells, const MinimizeOptions& opts) {
  SweepRecord rec;
  rec.params = params;
  rec.cells = cells;
  rec.seed = opts.seed;
  rec.tol = opts.tol;
  rec.max_iter = opts.max_iter;
  try {
    params.validate();
    const Grid grid = make_grid(cells, params.h);
    rec.bound = predicted_bound(params);
    rec.e_flatten = energy(construct_flatten(params, grid), params).total;
    if (params.delta >= params.h) rec.e_invert = energy(construct_invert(params, grid), params).total;
    MinimizeOptions o = opts;
    o.jobs = 1;
    const auto m = minimize(params, grid, o);
    rec.e_min = m.breakdown.total;
    rec.converged = m.converged;
    rec.kkt_residual = m.kkt_residual;
    rec.best_start = m.starts[static_cast<std::size_t>(m.best_start)].label;
    rec.tau = well_exit_radius(m.field);
    rec.diagnostics = diagnostics(m.field, params, rec.e_min);
    const auto floor = rec.diagnostics.find("strain_floor_ratio");
    rec.resolution_warning = rec.diagnostics.at("max_wp_jump") > kResolutionJump ||
                             (floor != rec.diagnostics.end() && floor->second > kResolutionFloor);
    rec.regime = classify_regime(rec);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j, const char* k) {
  const auto& v = j.at(k);
  if (v.is_null()) return kNaN;
  return v.get<double>();
}

}  // namespace

std::string record_to_json_line(const SweepRecord& r) {
  json d = json::object();
  for (const auto& [k, v] : r.diagnostics) d[k] = num(v);
  json j = {{"key", r.key()},
            {"h", r.params.h},
            {"delta", r.params.delta},
            {"cells", r.cells},
            {"seed", r.seed},
            {"tol", r.tol},
            {"max_iter", r.max_iter},
            {"e_min", num(r.e_min)},
            {"e_invert", num(r.e_invert)},
            {"e_flatten", num(r.e_flatten)},
            {"bound", num(r.bound)},
            {"tau", num(r.tau)},
            {"regime", r.regime ? json(*r.regime) : json(nullptr)},
            {"converged", r.converged},
            {"kkt_residual", num(r.kkt_residual)},
            {"best_start", r.best_start},
            {"resolution_warning", r.resolution_warning},
            {"diagnostics", d},
            {"error", r.error}};
  return j.dump();
}

SweepRecord record_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    SweepRecord r;
    r.params = {j.at("h").get<double>(), j.at("delta").get<double>()};
    r.cells = j.at("cells").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tol = j.at("tol").get<double>();
    r.max_iter = j.at("max_iter").get<int>();
    r.e_min = get_num(j, "e_min");
    r.e_invert = get_num(j, "e_invert");
    r.e_flatten = get_num(j, "e_flatten");
    r.bound = get_num(j, "bound");
    r.tau = get_num(j, "tau");
    if (!j.at("regime").is_null()) r.regime = j.at("regime").get<std::string>();
    r.converged = j.at("converged").get<bool>();
    r.kkt_residual = get_num(j, "kkt_residual");
    r.best_start = j.at("best_start").get<std::string>();
    r.resolution_warning = j.at("resolution_warning").get<bool>();
    for (const auto& [k, v] : j.at("diagnostics").items()) r.diagnostics[k] = v.is_null() ? kNaN : v.get<double>();
    r.error = j.at("error").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("sweep record: ") + e.what());
  }
}

std::vector<SweepRecord> sweep(const SweepConfig& cfg) {
  if (cfg.h_list.empty() || cfg.delta_list.empty()) throw std::invalid_argument("sweep: h and delta lists must be nonempty");
  std::vector<Params> points;
  for (double h : cfg.h_list) {
    for (double d : cfg.delta_list) {
      Params p{h, d};
      p.validate();
      points.push_back(p);
    }
  }

  std::map<std::string, SweepRecord> existing;
  if (cfg.resume && !cfg.output.empty()) {
    std::ifstream is(cfg.output);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      try {
        auto r = record_from_json_line(line);
        existing.emplace(r.key(), std::move(r));
      } catch (const std::invalid_argument&) {
        // A truncated trailing line from an interrupted run is recomputed.
      }
    }
  }

  std::ofstream out;
  if (!cfg.output.empty()) {
    out.open(cfg.output, std::ios::app);
    if (!out) throw std::runtime_error("sweep: cannot open " + cfg.output);
  }

  std::vector<SweepRecord> records(points.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < points.size(); ++i) {
    SweepRecord probe;
    probe.params = points[i];
    probe.cells = cfg.cells;
    probe.seed = cfg.minimize.seed;
    const auto it = existing.find(probe.key());
    if (it != existing.end()) {
      records[i] = it->second;
    } else {
      todo.push_back(i);
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const std::size_t i = todo[k];
      auto rec = run_point(points[i], cfg.cells, cfg.minimize);
      std::lock_guard<std::mutex> lock(mu);
      if (out.is_open()) out << record_to_json_line(rec) << '\n' << std::flush;
      records[i] = std::move(rec);
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(todo.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

void write_summary_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << "h,delta,e_min,e_invert,e_flatten,bound,tau,regime\n";
  for (const auto& r : records) {
    os << format_double(r.params.h) << ',' << format_double(r.params.delta) << ',' << format_double(r.e_min) << ','
       << format_double(r.e_invert) << ',' << format_double(r.e_flatten) << ',' << format_double(r.bound) << ','
       << format_double(r.tau) << ',' << r.regime.value_or("") << '\n';
  }
}

ExponentFit fit_exponent(const std::vector<double>& x, const std::vector<double>& y, FitAxis axis) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_exponent: x and y differ in length");
  if (x.size() < 4) throw std::invalid_argument("fit_exponent: need at least 4 points");
  const auto n = static_cast<double>(x.size());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_exponent: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_exponent: predictor values are all equal");
  ExponentFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - f.intercept - f.slope * lx[i];
    sse += e * e;
  }
  f.stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
  f.points = static_cast<int>(x.size());
  f.axis = axis;
  f.window_lo = *std::min_element(x.begin(), x.end());
  f.window_hi = *std::max_element(x.begin(), x.end());
  return f;
}

namespace {

double column(const SweepRecord& r, const std::string& name) {
  if (name == "e_min") return r.e_min;
  if (name == "e_invert") return r.e_invert;
  if (name == "e_flatten") return r.e_flatten;
  if (name == "bound") return r.bound;
  throw std::invalid_argument("fit_exponent: unknown response column " + name);
}

}  // namespace

ExponentFit fit_exponent(const std::vector<SweepRecord>& records, FitAxis axis, const std::string& response,
                         double lo, double hi) {
  std::vector<const SweepRecord*> sel;
  for (const auto& r : records) {
    const double x = axis == FitAxis::h ? r.params.h : r.params.delta;
    if (r.error.empty() && x >= lo && x <= hi) sel.push_back(&r);
  }
  auto pred = [axis](const SweepRecord* r) { return axis == FitAxis::h ? r->params.h : r->params.delta; };
  std::sort(sel.begin(), sel.end(), [&](auto* a, auto* b) { return pred(a) < pred(b); });
  int excluded = 0;
  if (axis == FitAxis::h) {
    while (!sel.empty() && sel.front()->resolution_warning) {
      sel.erase(sel.begin());
      ++excluded;
    }
  }
  std::vector<double> x, y;
  for (const auto* r : sel) {
    x.push_back(pred(r));
    y.push_back(column(*r, response));
  }
  auto f = fit_exponent(x, y, axis);
  f.excluded = excluded;
  return f;
}

double cone_ratio_spread(const std::vector<SweepRecord>& records) {
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  for (const auto& r : records) {
    if (!std::isfinite(r.e_min)) continue;
    const double h = r.params.h;
    const double ratio = r.e_min / (h * h * std::log(1.0 / h));
    mn = std::min(mn, ratio);
    mx = std::max(mx, ratio);
  }
  if (!(mx > 0.0)) throw std::invalid_argument("cone_ratio_spread: no usable records");
  return mx / mn;
}

double transition_delta(const std::vector<SweepRecord>& records, double h) {
  std::vector<const SweepRecord*> sel;
  for (const auto& r : records) {
    if (r.params.h == h && r.regime && (*r.regime == "inversion" || *r.regime == "boundary-layer")) sel.push_back(&r);
  }
  std::sort(sel.begin(), sel.end(), [](auto* a, auto* b) { return a->params.delta < b->params.delta; });
  const auto inv = std::find_if(sel.begin(), sel.end(), [](auto* r) { return *r->regime == "inversion"; });
  if (inv == sel.end()) return kNaN;
  for (auto it = inv; it != sel.begin();) {
    --it;
    if (*(*it)->regime == "boundary-layer") return std::sqrt((*it)->params.delta * (*inv)->params.delta);
  }
  return kNaN;
}

}  // namespace vkcone
