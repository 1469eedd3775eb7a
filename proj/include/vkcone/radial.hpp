#pragma once

#include <string>
#include <vector>

namespace vkcone {

/// Dimensionless thickness h in (0, 1/2] and indentation delta in [0, 1].
struct Params {
  double h = 0.01;
  double delta = 0.0;

  /// Throws std::invalid_argument naming the violated bound.
  void validate() const;
};

/// Per-cell integrals that depend only on geometry. t = (r - a)/d is the
/// local coordinate; inv_r[k] = \int_a^b t^k / r dr (inv_r[0] is infinite on
/// the cell touching r = 0).
struct CellData {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double inv_r[3] = {0.0, 0.0, 0.0};
  /// \int phi_p phi_q / r dr for the hat pieces phi_0 = 1 - t, phi_1 = t.
  double m00 = 0.0, m01 = 0.0, m11 = 0.0;
};

/// How a grid was built: geometric cells near r = 0, then a uniform tail.
struct GridGrading {
  double first_width = 0.0;
  double ratio = 1.0;
  int geometric_cells = 0;
  double uniform_width = 0.0;
  double h_target = 0.0;  // thickness the grid was built for (0 if unknown)
};

/// Radial grid 0 = r_0 < r_1 < ... < r_N = 1.
class Grid {
 public:
  using Grading = GridGrading;

  /// Validates monotonicity and the exact end points.
  explicit Grid(std::vector<double> nodes, Grading grading = {});

  int n_cells() const { return static_cast<int>(nodes_.size()) - 1; }
  const std::vector<double>& nodes() const { return nodes_; }
  double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const CellData& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
  const Grading& grading() const { return grading_; }
  double max_width() const;
  double min_width() const;

  bool operator==(const Grid& o) const { return nodes_ == o.nodes_; }

 private:
  std::vector<double> nodes_;
  std::vector<CellData> cells_;
  Grading grading_;
};

/// Geometric refinement toward r = 0 (first cell <= h/20) joined to a uniform
/// tail beyond r = 4h. Requires n_cells >= 16 and at least 8 cells in [0, h];
/// throws std::invalid_argument otherwise.
Grid make_grid(int n_cells, double h);

/// Radially symmetric configuration. u and wp are nodal values of piecewise
/// linear functions; w is the exact piecewise quadratic integral of wp with
/// w(0) = 0.
struct RadialField {
  Grid grid;
  std::vector<double> u;
  std::vector<double> wp;

  explicit RadialField(Grid g);
  RadialField(Grid g, std::vector<double> u_, std::vector<double> wp_);

  std::vector<double> w() const;
  double w_end() const;
};

/// Nodal weights c with \int_0^1 wp dr = c . wp for the piecewise linear wp.
std::vector<double> wp_integral_weights(const Grid& grid);

struct EnergyBreakdown {
  double hoop_stretch = 0.0;    // \int u^2/r
  double radial_stretch = 0.0;  // \int r (u' + w'^2 - 1)^2
  double radial_bend = 0.0;     // h^2 \int r w''^2
  double hoop_bend = 0.0;       // h^2 \int w'^2 / r
  double total = 0.0;
  bool diverged = false;        // some term exceeded the divergence threshold
};

/// Terms above this value mark the breakdown as diverged.
inline constexpr double kDivergenceThreshold = 1e12;

/// Exact per-cell integration of the radial energy for the piecewise linear
/// (u, wp) representation. Throws std::invalid_argument on non-finite values
/// or u(0), wp(0) != 0 (the 1/r weighted terms would be infinite).
EnergyBreakdown energy(const RadialField& field, const Params& params);

/// Gradient of the discrete energy w.r.t. the nodal values. Entries for the
/// fixed u_0 and wp_0 are zero.
struct FieldCovector {
  std::vector<double> du;
  std::vector<double> dwp;
};

FieldCovector energy_gradient(const RadialField& field, const Params& params);

/// Residuals and weighted norms that decide membership in the admissible class.
struct AdmissibilityReport {
  double w0_residual = 0.0;          // |w(0)|
  double w1_residual = 0.0;          // |w(1) - (1 - delta)|
  double u_origin = 0.0;             // |u(0)|; nonzero means \int u^2/r diverges
  double wp_origin = 0.0;            // |wp(0)|; nonzero means \int w'^2/r diverges
  double u_norm_inv_r = 0.0;         // ||u||_{L^2(r^-1 dr)}
  double du_norm_r = 0.0;            // ||u'||_{L^2(r dr)}
  double dw_norm_inv_r = 0.0;        // ||w'||_{L^2(r^-1 dr)}
  double d2w_norm_r = 0.0;           // ||w''||_{L^2(r dr)}
  std::vector<std::string> flags;

  bool admissible(double tol = 1e-10) const;
};

AdmissibilityReport check_admissible(const RadialField& field, double delta);

/// Interleaved free degrees of freedom [u_1, wp_1, ..., u_N, wp_N].
std::vector<double> pack_dofs(const RadialField& field);
void unpack_dofs(const std::vector<double>& x, RadialField& field);
std::vector<double> pack_covector(const FieldCovector& g);

/// Lower triangle (row >= col) entries of the energy Hessian in the packed
/// ordering. With exact = false the radial stretch curvature term is kept
/// only where the strain is tensile, giving a positive semidefinite
/// Gauss-Newton matrix. The sparsity pattern does not depend on the field.
struct HessianEntry {
  int row;
  int col;
  double value;
};
std::vector<HessianEntry> gauss_newton_hessian(const RadialField& field, const Params& params,
                                               bool exact = false);

}  // namespace vkcone
