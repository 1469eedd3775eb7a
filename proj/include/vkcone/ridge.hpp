#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vkcone/profiles.hpp"

namespace vkcone {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Fields of a planar configuration at a point: in-plane displacement V with
/// its gradient (DV(i, j) = dV_i/dx_j), out-of-plane W with gradient and Hessian.
struct PlanarSample {
  Vec2 V = Vec2::Zero();
  Mat2 DV = Mat2::Zero();
  double W = 0.0;
  Vec2 DW = Vec2::Zero();
  Mat2 D2W = Mat2::Zero();
};

/// DV + DV^T + DW (x) DW.
Mat2 membrane_strain(const PlanarSample& s);

/// |DV + DV^T + DW (x) DW|^2 and |D^2 W|^2 (Frobenius).
double membrane_density(const PlanarSample& s);
double bending_density(const PlanarSample& s);

class PlanarMap {
 public:
  using Evaluator = std::function<PlanarSample(const Vec2&)>;

  PlanarMap(Evaluator eval, std::string description);

  PlanarSample operator()(const Vec2& x) const { return eval_(x); }
  const std::string& description() const { return description_; }

 private:
  Evaluator eval_;
  std::string description_;
};

/// alpha = sqrt(pi/4) makes the pyramid's displacement jump across the
/// negative x1-axis equal to the angular deficit of the cone.
inline const double kPyramidAlpha = std::sqrt(std::numbers::pi / 4.0);

/// The jump set of the pyramid's V is the ray {x2 = 0, x1 < 0}; V^+ - V^- = 4 alpha^2 (0, x1).
/// This returns 4 alpha^2 x^perp when x2 > 0 and zero otherwise.
Vec2 sigma_correction(const Vec2& x);

/// W = alpha min(|x1|+|x2|, 1-|x1|-|x2|) with the quadrant-wise affine V.
PlanarMap sharp_pyramid();

/// V - 4 alpha^2 x^perp chi_{x2>0}: continuous across the negative x1-axis,
/// discontinuous across the positive one.
PlanarMap sharp_pyramid_sigma_corrected();

/// Rigid frame taking the fold [a, c] to [0, l] x {0}, plus the skew and
/// constant shifts that remove V(a), W(a) and V_{2,1}.
struct FoldFrame {
  Vec2 origin = Vec2::Zero();   // a
  Mat2 R = Mat2::Identity();    // columns: fold direction, its left normal
  double lambda = 0.0;          // added skew V' = V~ + lambda y^perp
  Vec2 V0 = Vec2::Zero();       // V(a)
  double W0 = 0.0;              // W(a)

  Vec2 to_local(const Vec2& x) const { return R.transpose() * (x - origin); }
  Vec2 to_global(const Vec2& y) const { return R * y + origin; }
  /// Maps a canonical-frame sample back to the original coordinates.
  PlanarSample to_global(const Vec2& y, const PlanarSample& local) const;
};

/// Quadrilateral [abcd] with fold diagonal [ac], the eight fold coefficients
/// A1..A8 (stored A[0]..A[7]) and the maximal rhombus slope tau.
struct RidgePatch {
  std::array<Vec2, 4> vertices;  // a, b, c, d with b on the left of a -> c
  double length = 0.0;
  std::array<double, 8> A{};
  double tau = 0.0;
  FoldFrame frame;

  double a(int k) const { return A[static_cast<std::size_t>(k - 1)]; }
};

/// Extracts the fold coefficients of a map affine on [abc] and [adc].
/// Throws std::invalid_argument if b and d lie on the same side of [ac],
/// the quadrilateral is degenerate, or the map is not compatible.
RidgePatch fold_coeffs(const PlanarMap& map, const std::array<Vec2, 4>& quad);

/// Largest |residual| of the compatibility relations among A1..A8.
double compatibility_residual(const RidgePatch& patch);

/// Canonical sharp fold in the local frame (x2 > 0 uses A2, A3, A7).
PlanarSample sharp_fold_local(const RidgePatch& patch, const Vec2& y);

/// Sharp fold along the x1-axis with W slopes A7 above and A8 below and
/// longitudinal slope A6; V completes it to a compatible pair.
PlanarMap sharp_fold(double A6, double A7, double A8);

/// Cross-section profiles of a smoothed fold with slopes A7 (t > 0) and A8
/// (t < 0). gamma3 = phi * (two-slope) + lambda phi with phi supported in
/// (-1/8, 1/8); gamma2 = A8^2/2 - 1/2 \int_{-1}^t gamma3'^2.
class FoldProfile {
 public:
  struct Sample {
    double g2 = 0.0, g2p = 0.0;
    double g3 = 0.0, g3p = 0.0, g3pp = 0.0;
    double eta2 = 0.0, eta3 = 0.0, eta3p = 0.0;
    double omega = 0.0, omegap = 0.0, xi = 0.0;
  };

  FoldProfile(double A7, double A8);

  Sample operator()(double t) const;
  double A7() const { return A7_; }
  double A8() const { return A8_; }
  double lambda() const { return lambda_; }
  /// Profiles differ from the sharp fold only for |t| < support().
  double support() const { return kernel_.half_width(); }
  double omega_end() const;

 private:
  double A7_, A8_, lambda_ = 0.0;
  BumpKernel kernel_;
  std::shared_ptr<const CumulativeTable> moment_, g3sq_, omega_;
};

/// Builds the profiles, solving the closed-form quadratic for lambda and
/// taking its smaller-magnitude root.
FoldProfile gamma_profiles(double A7, double A8);

/// f = f0(x) f0(l-x) / (f0(x) + f0(l-x)), f0(x) = tau h^{1/3} (h+x)^{2/3} - tau h.
/// Requires 0 < h < l/8 and tau in (0, 1].
SmoothProfile width_profile(double tau, double h, double l);

/// Smoothed fold on one patch. Inside the strip |y2| <= f(y1) of the local
/// frame the fields follow the ridge ansatz; elsewhere the sharp fold.
class RidgeField {
 public:
  RidgeField(RidgePatch patch, FoldProfile profile, SmoothProfile width, double h);

  const RidgePatch& patch() const { return patch_; }
  const FoldProfile& profile() const { return profile_; }
  const SmoothProfile& width() const { return width_; }
  double h() const { return h_; }

  /// True when the global point lies in the open strip over (0, l).
  bool in_strip(const Vec2& x) const;
  PlanarSample local(const Vec2& y) const;
  /// Strip-coordinate evaluation with a precomputed cross-section sample.
  PlanarSample local_strip(double y1, const ProfileSample& f, double t,
                           const FoldProfile::Sample& g) const;
  PlanarSample global(const Vec2& x) const;
  PlanarMap map() const;

 private:
  RidgePatch patch_;
  FoldProfile profile_;
  SmoothProfile width_;
  double h_;
};

/// Requires the profile slopes to match the patch and h < l/8; throws
/// std::invalid_argument when the strip would leave the quadrilateral.
RidgeField ridge_fields(const RidgePatch& patch, const FoldProfile& profile,
                        const SmoothProfile& width, double h);

struct PatchEnergy {
  double membrane = 0.0;
  double bending = 0.0;       // already multiplied by h^2
  double total = 0.0;
  double relative_change = 0.0;  // between the two refinement levels
  bool converged = false;        // relative_change <= 1%
};

struct PatchQuadrature {
  int points = 8;        // Gauss points per cell in each direction
  int refine = 1;        // base refinement level (cells scale with it)
  double clip_radius = std::numeric_limits<double>::infinity();  // integrate |x| <= clip only
};

/// Membrane and h^2-weighted bending energy over the strip restricted to
/// h/sqrt(2) <= y1 <= l - h/sqrt(2), by tensor Gauss quadrature in (y1, t).
PatchEnergy patch_energy(const RidgeField& fields, double h, const PatchQuadrature& q = {});

struct VertexBall {
  Vec2 center;
  double h = 0.0;
  double membrane = 0.0;
  double bending = 0.0;   // already multiplied by h^2
  double hessian_sq = 0.0;  // \int_{B_h} |D^2 W~|^2 without the h^2
  PlanarMap map;          // W replaced by the blended mollification inside B_h
};

/// W~ = psi (W * phi_h) + (1 - psi) W on B_h(center), psi = 1 on B_{h/2};
/// V unchanged. Convolutions are discrete on a uniform grid of spacing
/// h/32. Energies are integrated over B_h(center) intersected with the disc
/// of radius clip_radius.
VertexBall vertex_smooth(const PlanarMap& fields, const Vec2& center, double h,
                         double clip_radius = std::numeric_limits<double>::infinity());

struct PyramidPatchReport {
  std::string label;
  Vec2 a, c;
  double length = 0.0;
  double tau = 0.0;
  bool sigma_corrected = false;
  PatchEnergy energy;
};

struct PyramidBallReport {
  Vec2 center;
  double membrane = 0.0;
  double bending = 0.0;
};

struct PyramidResult {
  double h = 0.0;
  double total = 0.0;
  double patch_sum = 0.0;
  double ball_sum = 0.0;
  bool converged = false;
  std::vector<PyramidPatchReport> patches;
  std::vector<PyramidBallReport> balls;
};

struct PyramidOptions {
  PatchQuadrature quadrature{8, 1, 1.0};
  int jobs = 1;
};

/// The twelve fold quadrilaterals of the pyramid: off-fold vertices are the
/// incenters of the adjacent affine faces of B_1.
struct PyramidQuad {
  std::string label;
  std::array<Vec2, 4> quad;
  bool sigma_corrected;
};
std::vector<PyramidQuad> pyramid_quads();
std::vector<Vec2> pyramid_vertices();

/// Largest h accepted by pyramid_energy (every fold has h < l/8).
double pyramid_h_max();

/// Assembled ridged map for the whole pyramid (before vertex smoothing).
PlanarMap pyramid_ridged_map(double h);

/// Total energy over B_1 minus the jump ray. Throws std::invalid_argument
/// when h is too large for the patch geometry.
PyramidResult pyramid_energy(double h, const PyramidOptions& opts = {});

/// W of the smoothed pyramid sampled on an n x n grid over [-1, 1]^2.
struct FieldGrid {
  int n = 0;
  std::vector<double> x, y, w;
};
FieldGrid pyramid_w_grid(double h, int n = 512);

}  // namespace vkcone
