#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <boost/math/interpolators/quintic_hermite.hpp>

#include "vkcone/jet.hpp"

namespace vkcone {

/// Value and first two derivatives of a 1-D profile at a point.
struct ProfileSample {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// C-infinity step: 0 for y <= 0, 1 for y >= 1, S(y) + S(1-y) = 1.
/// S(y) = e^{-1/y} / (e^{-1/y} + e^{-1/(1-y)}).
Jet<4> smooth_step(double y);

/// Even C-infinity probability kernel supported in (-eps, eps).
/// Its cumulative distribution is the smooth step rescaled to [-eps, eps].
class BumpKernel {
 public:
  explicit BumpKernel(double eps);

  double half_width() const { return eps_; }
  /// Jet of the CDF at x: coefficients give CDF, density, density', density''.
  Jet<4> cdf(double x) const;
  double density(double x) const { return cdf(x).derivative(1); }

 private:
  double eps_;
};

/// Antiderivative F(x) = \int_lo^x f of a smooth integrand, tabulated on a
/// uniform grid and interpolated with quintic Hermite splines from (F, f, f').
/// Outside [lo, hi] the table extends f as constant-valued from its end
/// values, which is exact for the integrands used here (they are constant
/// outside their support).
class CumulativeTable {
 public:
  using Integrand = std::function<std::array<double, 2>(double)>;

  CumulativeTable(double lo, double hi, int panels, const Integrand& f);

  double operator()(double x) const;
  double total() const { return total_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_, hi_, total_;
  double f_lo_, f_hi_;
  boost::math::interpolators::cardinal_quintic_hermite<std::vector<double>> spline_;
};

/// A 1-D smooth function on [lo, hi] with closed-form value and derivatives,
/// plus the parameters that pin its construction.
class SmoothProfile {
 public:
  using Evaluator = std::function<ProfileSample(double)>;

  SmoothProfile(double lo, double hi, Evaluator eval,
                std::map<std::string, double> params = {});

  ProfileSample operator()(double x) const { return eval_(x); }
  double value(double x) const { return eval_(x).value; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::map<std::string, double>& params() const { return params_; }
  double param(const std::string& key) const;

 private:
  double lo_, hi_;
  Evaluator eval_;
  std::map<std::string, double> params_;
};

/// Cut-off eta: 0 on [0, 1/5], 1 on [2/5, inf), mean 1 over [0, 2/5].
/// Realized as S(y) + c S'(y), y = 5(x - 1/5), with c = 3/2 from the mean.
/// Parameter "c" holds the bump amplitude.
SmoothProfile mollifier_eta();

/// \int_0^x eta(t) dt. Equals x for x >= 2/5.
double eta_integral(double x);

/// Even profile on [-1, 1] with W0(+-1) = 0, W0'(+-1) = +-1 and
/// \int (W0'^2 - 1) = 0: |x| - 1 mollified at width 1/8, minus mu times an
/// even bump supported in (-1/4, 1/4). Parameter "mu" holds the amplitude.
SmoothProfile profile_w0();

}  // namespace vkcone
