#include "vkcone/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vkcone {

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return {buf, static_cast<std::size_t>(n)};
}

void write_field_csv(std::ostream& os, const RadialField& f) {
  const auto w = f.w();
  const auto& r = f.grid.nodes();
  os << "r,u,w,wp\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    os << format_double(r[i]) << ',' << format_double(f.u[i]) << ',' << format_double(w[i]) << ','
       << format_double(f.wp[i]) << '\n';
  }
}

void write_field_csv(const std::string& path, const RadialField& field) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_field_csv(os, field);
}

namespace {

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) {
    throw std::invalid_argument("field CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

RadialField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("field CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "r,u,w,wp") throw std::invalid_argument("field CSV: expected header r,u,w,wp");
  std::vector<double> r, u, wp;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(parse_number(cell, n));
    if (v.size() != 4) throw std::invalid_argument("field CSV line " + std::to_string(n) + ": expected 4 columns");
    r.push_back(v[0]);
    u.push_back(v[1]);
    wp.push_back(v[3]);
  }
  return RadialField(Grid(std::move(r)), std::move(u), std::move(wp));
}

RadialField read_field_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open field CSV " + path);
  return read_field_csv(is);
}

json to_json(const EnergyBreakdown& e) {
  return {{"hoop_stretch", e.hoop_stretch}, {"radial_stretch", e.radial_stretch},
          {"radial_bend", e.radial_bend},   {"hoop_bend", e.hoop_bend},
          {"total", e.total},               {"diverged", e.diverged}};
}

json to_json(const Params& p) { return {{"h", p.h}, {"delta", p.delta}}; }

json to_json(const MinResult& r) {
  json starts = json::array();
  for (const auto& s : r.starts) {
    starts.push_back({{"label", s.label},
                      {"energy", s.energy},
                      {"kkt_residual", s.kkt_residual},
                      {"iterations", s.iterations},
                      {"converged", s.converged}});
  }
  return {{"breakdown", to_json(r.breakdown)},
          {"kkt_residual", r.kkt_residual},
          {"starts", starts},
          {"best_start", r.best_start},
          {"best_label", r.best_start >= 0 ? r.starts[static_cast<std::size_t>(r.best_start)].label : ""},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"tol", r.tol},
          {"seed", r.seed},
          {"cells", r.field.grid.n_cells()}};
}

json to_json(const PyramidResult& r) {
  json patches = json::array();
  for (const auto& p : r.patches) {
    patches.push_back({{"label", p.label},
                       {"a", {p.a.x(), p.a.y()}},
                       {"c", {p.c.x(), p.c.y()}},
                       {"length", p.length},
                       {"tau", p.tau},
                       {"sigma_corrected", p.sigma_corrected},
                       {"membrane", p.energy.membrane},
                       {"bending", p.energy.bending},
                       {"total", p.energy.total},
                       {"relative_change", p.energy.relative_change},
                       {"converged", p.energy.converged}});
  }
  json balls = json::array();
  for (const auto& b : r.balls) {
    balls.push_back({{"center", {b.center.x(), b.center.y()}}, {"membrane", b.membrane}, {"bending", b.bending}});
  }
  return {{"h", r.h},           {"total", r.total},         {"patch_sum", r.patch_sum},
          {"ball_sum", r.ball_sum}, {"converged", r.converged}, {"patches", patches},
          {"balls", balls}};
}

void write_grid_csv(std::ostream& os, const FieldGrid& g) {
  os << "x,y,w\n";
  const auto n = static_cast<std::size_t>(g.n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      os << format_double(g.x[i]) << ',' << format_double(g.y[j]) << ',' << format_double(g.w[j * n + i]) << '\n';
    }
  }
}

}  // namespace vkcone
