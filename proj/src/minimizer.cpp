#include "vkcone/minimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "vkcone/constructions.hpp"

namespace vkcone {

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Solver = Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>>;

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), Eigen::Index(v.size())); }

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

// Constraint normal in the packed ordering: only wp entries carry weight.
Vec constraint_normal(const Grid& grid) {
  const auto c = wp_integral_weights(grid);
  Vec n = Vec::Zero(2 * grid.n_cells());
  for (int i = 1; i <= grid.n_cells(); ++i) n[2 * (i - 1) + 1] = c[static_cast<std::size_t>(i)];
  return n;
}

struct Problem {
  const Params& params;
  RadialField field;
  Vec normal;
  double target;
  bool analyzed = false;

  double value(const Vec& x, EnergyBreakdown* out = nullptr) {
    unpack_dofs(to_std(x), field);
    const auto e = energy(field, params);
    if (out) *out = e;
    return e.diverged ? std::numeric_limits<double>::infinity() : e.total;
  }
  Vec gradient(const Vec& x) {
    unpack_dofs(to_std(x), field);
    return to_vec(pack_covector(energy_gradient(field, params)));
  }
  Vec project(const Vec& g) const { return g - normal * (normal.dot(g) / normal.squaredNorm()); }
  void restore(Vec& x) const { x += normal * ((target - normal.dot(x)) / normal.squaredNorm()); }

  bool factor(const Vec& x, Solver& solver, bool exact) {
    unpack_dofs(to_std(x), field);
    const auto entries = gauss_newton_hessian(field, params, exact);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(entries.size());
    for (const auto& e : entries) trips.emplace_back(e.row, e.col, e.value);
    SpMat H(x.size(), x.size());
    H.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed) {
      solver.analyzePattern(H);
      analyzed = true;
    }
    solver.factorize(H);
    return solver.info() == Eigen::Success && (solver.vectorD().array() > 0.0).all();
  }
};

}  // namespace

double kkt_residual(const RadialField& field, const Params& params) {
  const Vec g = to_vec(pack_covector(energy_gradient(field, params)));
  const Vec n = constraint_normal(field.grid);
  return (g - n * (n.dot(g) / n.squaredNorm())).lpNorm<Eigen::Infinity>();
}

DescentResult descend(const Params& params, RadialField start, const MinimizeOptions& opts) {
  Problem pb{params, start, constraint_normal(start.grid), 1.0 - params.delta};
  Vec x = to_vec(pack_dofs(start));
  pb.restore(x);

  DescentResult res{start, {}, 0.0, 0, false, {}};
  double f = pb.value(x, &res.breakdown);
  Vec g = pb.project(pb.gradient(x));
  std::deque<std::pair<Vec, Vec>> mem;
  Solver solver;
  Vec Pn;  // P^{-1} normal

  auto apply_h0 = [&](const Vec& q) -> Vec {
    Vec r = solver.solve(q);
    return r - Pn * (Pn.dot(q) / pb.normal.dot(Pn));
  };

  auto refresh = [&] {
    if (!pb.factor(x, solver, false)) throw std::runtime_error("preconditioner factorization failed");
    Pn = solver.solve(pb.normal);
  };
  // Max-norm alone cannot certify convergence along the soft O(h^2) bending
  // directions, so the preconditioned decrement g^T P^{-1} g must be small too.
  auto stationary = [&](double kkt, double dec) {
    return kkt <= opts.tol * std::max(1.0, f) && dec <= opts.tol * std::abs(f);
  };

  int it = 0;
  double kkt = g.lpNorm<Eigen::Infinity>();
  double dec = 0.0;
  for (; it < opts.max_iter; ++it) {
    refresh();
    dec = g.dot(apply_h0(g));
    if (stationary(kkt, dec)) {
      res.converged = true;
      break;
    }

    // Two-loop recursion with the projected preconditioner as initial inverse Hessian.
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
      const auto& [s, y] = mem[k];
      alpha[k] = s.dot(q) / y.dot(s);
      q -= alpha[k] * y;
    }
    Vec r = apply_h0(q);
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const auto& [s, y] = mem[k];
      const double beta = y.dot(r) / y.dot(s);
      r += (alpha[k] - beta) * s;
    }
    Vec dir = -pb.project(r);
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      mem.clear();
      dir = -apply_h0(g);
      slope = g.dot(dir);
      if (!(slope < 0.0)) break;
    }

    double step = 1.0;
    Vec xn;
    double fn = f;
    EnergyBreakdown bn;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      xn = x + step * dir;
      pb.restore(xn);
      fn = pb.value(xn, &bn);
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      break;
    }
    const Vec gn = pb.project(pb.gradient(xn));
    const Vec s = xn - x, y = gn - g;
    if (y.dot(s) > 1e-16 * s.norm() * y.norm()) {
      mem.emplace_back(s, y);
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    x = xn;
    f = fn;
    g = gn;
    res.breakdown = bn;
    kkt = g.lpNorm<Eigen::Infinity>();
    if (opts.record_history) res.history.push_back(f);
  }
  if (!res.converged) {
    refresh();
    dec = g.dot(apply_h0(g));
    res.converged = stationary(kkt, dec);
  }
  unpack_dofs(to_std(x), res.field);
  res.breakdown = energy(res.field, params);
  res.kkt_residual = kkt;
  res.decrement = dec;
  res.iterations = it;
  return res;
}

std::vector<LabeledStart> initial_set(const Params& params, const Grid& grid, std::uint64_t seed) {
  params.validate();
  std::vector<LabeledStart> out;
  out.push_back({"flatten", construct_flatten(params, grid)});
  if (params.h <= params.delta) out.push_back({"invert", construct_invert(params, grid)});

  RadialField cone(grid);
  const auto& r = grid.nodes();
  for (std::size_t i = 1; i < r.size(); ++i) cone.wp[i] = 1.0 - params.delta;
  project_onto_constraint(cone, params.delta);
  for (int c = 0; c < grid.n_cells(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double a = cone.wp[i], b = cone.wp[i + 1];
    // exact \int (1 - wp^2) over the cell for linear wp
    cone.u[i + 1] = cone.u[i] + grid.cell(c).d * (1.0 - (a * a + a * b + b * b) / 3.0);
  }
  out.push_back({"cone", std::move(cone)});

  RadialField pert = out.front().field;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::array<double, 4> amp{};
  for (auto& a : amp) a = unif(rng);
  for (std::size_t i = 1; i < r.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < amp.size(); ++k) {
      s += amp[k] * std::sin(double(k + 1) * std::numbers::pi * r[i]);
    }
    pert.wp[i] += 0.1 * params.delta * s;
  }
  project_onto_constraint(pert, params.delta);
  out.push_back({"perturbed", std::move(pert)});
  return out;
}

MinResult minimize(const Params& params, const Grid& grid, const MinimizeOptions& opts) {
  params.validate();
  if (!(opts.tol > 0.0)) throw std::invalid_argument("minimize: tol must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("minimize: max_iter must be at least 1");
  auto starts = initial_set(params, grid, opts.seed);

  std::vector<DescentResult> runs;
  runs.reserve(starts.size());
  if (opts.jobs > 1) {
    std::vector<std::future<DescentResult>> fut;
    for (auto& s : starts) {
      fut.push_back(std::async(std::launch::async, [&params, &opts, f = s.field] {
        return descend(params, f, opts);
      }));
    }
    for (auto& f : fut) runs.push_back(f.get());
  } else {
    for (auto& s : starts) runs.push_back(descend(params, s.field, opts));
  }

  MinResult out{runs.front().field, {}, 0.0, {}, -1, 0, false, opts.tol, opts.seed};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    out.starts.push_back({starts[i].label, r.breakdown.total, r.kkt_residual, r.iterations, r.converged});
  }
  // Prefer converged runs; among them lowest energy, then KKT residual, then index.
  auto better = [&](std::size_t a, std::size_t b) {
    const auto& A = runs[a];
    const auto& B = runs[b];
    if (A.converged != B.converged) return A.converged;
    const double ea = A.breakdown.total, eb = B.breakdown.total;
    if (std::abs(ea - eb) > 1e-12 * std::max(std::abs(ea), std::abs(eb))) return ea < eb;
    if (A.kkt_residual != B.kkt_residual) return A.kkt_residual < B.kkt_residual;
    return a < b;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (better(i, best)) best = i;
  }
  const auto& w = runs[best];
  out.field = w.field;
  out.breakdown = w.breakdown;
  out.kkt_residual = w.kkt_residual;
  out.best_start = static_cast<int>(best);
  out.iterations = w.iterations;
  out.converged = w.converged;
  return out;
}

}  // namespace vkcone
