#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vkcone/radial.hpp"

namespace vkcone {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

struct StartSummary {
  std::string label;
  double energy = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct MinResult {
  RadialField field;
  EnergyBreakdown breakdown;
  double kkt_residual = 0.0;   // max-norm of the constraint-projected gradient
  std::vector<StartSummary> starts;
  int best_start = -1;
  int iterations = 0;          // of the winning start
  bool converged = false;
  double tol = 0.0;
  std::uint64_t seed = kDefaultSeed;
};

struct MinimizeOptions {
  double tol = 1e-9;
  int max_iter = 5000;
  std::uint64_t seed = kDefaultSeed;
  int memory = 10;
  int jobs = 1;
  bool record_history = false;
};

struct LabeledStart {
  std::string label;
  RadialField field;
};

/// Starting configurations: the flattening construction, the inversion
/// construction when h <= delta, the straight cone w' = 1 - delta with
/// u' = 1 - w'^2, and a seeded smooth perturbation of the flattening start.
std::vector<LabeledStart> initial_set(const Params& params, const Grid& grid,
                                      std::uint64_t seed = kDefaultSeed);

/// Result of a single descent run.
struct DescentResult {
  RadialField field;
  EnergyBreakdown breakdown;
  double kkt_residual = 0.0;
  double decrement = 0.0;  // g^T P^{-1} g with the projected preconditioner
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // energies after each accepted step
};

/// Preconditioned limited-memory quasi-Newton descent restricted to the
/// affine set \int wp = 1 - delta. Converged when the projected gradient
/// max-norm is at most tol * max(1, E) and the preconditioned decrement is
/// at most tol * E.
DescentResult descend(const Params& params, RadialField start, const MinimizeOptions& opts);

/// Multi-start minimization over the admissible class. Converged runs beat
/// unconverged ones; then lowest energy wins, ties within 1e-12 going to the
/// smaller KKT residual, then the earlier start.
/// Throws std::invalid_argument for tol <= 0 or max_iter < 1.
MinResult minimize(const Params& params, const Grid& grid, const MinimizeOptions& opts = {});

/// Max-norm of the gradient projected onto the constraint tangent space.
double kkt_residual(const RadialField& field, const Params& params);

}  // namespace vkcone
