#pragma once

#include <vector>

#include "vkcone/profiles.hpp"
#include "vkcone/radial.hpp"

namespace vkcone {

/// Closed-form radial configuration: w'(r) with w''(r), and u(r) with u'(r).
/// Breakpoints list the radii where the pieces join (for quadrature).
struct ClosedFormField {
  std::function<ProfileSample(double)> wp;
  std::function<ProfileSample(double)> u;
  std::vector<double> breakpoints;
};

/// Localized inversion: w' = -eta(r/h) up to R - l, the rescaled W0' on
/// [R - l, R + l], 1 beyond; R = delta/2, l = sqrt(h delta)/10.
/// u is the running integral of 1 - w'^2 from R - l, zero outside the
/// transition. Requires h <= delta.
ClosedFormField invert_closed_form(const Params& params);

/// Rim boundary layer: w' = eta(r/h) up to 1 - L, then the linear taper
/// 1 - (2 delta/L^2)(r - (1 - L)); L = sqrt(h); u = \int_{1-L}^r (1 - w'^2).
ClosedFormField flatten_closed_form(const Params& params);

/// Nodal samples of the closed forms. The nodal wp is shifted by the minimal
/// Euclidean correction that makes the discrete w(1) equal 1 - delta.
RadialField construct_invert(const Params& params, const Grid& grid);
RadialField construct_flatten(const Params& params, const Grid& grid);

/// Nodal samples of an arbitrary closed form, projected onto w(1) = 1 - delta.
RadialField sample_closed_form(const ClosedFormField& cf, const Grid& grid, double delta);

/// Adds the minimal Euclidean change to wp_1..wp_N that makes
/// \int_0^1 wp = 1 - delta for the piecewise linear wp.
void project_onto_constraint(RadialField& field, double delta);

/// h^2 log(1/h) + min(delta^2 h^{1/2}, delta^{1/2} h^{3/2}).
double predicted_bound(const Params& params);

}  // namespace vkcone
