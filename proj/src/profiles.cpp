#include "vkcone/profiles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace vkcone {

namespace {

// Below this distance from the ends e^{-1/y} underflows far past any use.
constexpr double kStepCutoff = 1.0 / 700.0;

template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  double sum = 0.0;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    sum += boost::math::quadrature::gauss<double, 20>::integrate(f, a + p * w, a + (p + 1) * w);
  }
  return sum;
}

const CumulativeTable& step_integral_table() {
  static const CumulativeTable table(0.0, 1.0, 2048, [](double y) {
    const auto s = smooth_step(y);
    return std::array<double, 2>{s.value(), s.derivative(1)};
  });
  return table;
}

}  // namespace

Jet<4> smooth_step(double y) {
  if (y <= kStepCutoff) return Jet<4>::constant(0.0);
  if (y >= 1.0 - kStepCutoff) return Jet<4>::constant(1.0);
  const auto Y = Jet<4>::variable(y);
  const auto a = exp(-(1.0 / Y));
  const auto b = exp(-(1.0 / (1.0 - Y)));
  return a / (a + b);
}

BumpKernel::BumpKernel(double eps) : eps_(eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("BumpKernel: half width must be positive");
}

Jet<4> BumpKernel::cdf(double x) const {
  auto j = smooth_step(0.5 * (x / eps_ + 1.0));
  const double scale = 0.5 / eps_;
  double f = scale;
  for (std::size_t k = 1; k < j.c.size(); ++k, f *= scale) j.c[k] *= f;
  return j;
}

CumulativeTable::CumulativeTable(double lo, double hi, int panels, const Integrand& f)
    : lo_(lo), hi_(hi), total_(0.0), f_lo_(0.0), f_hi_(0.0),
      spline_([&] {
        if (!(hi > lo) || panels < 1) throw std::invalid_argument("CumulativeTable: bad range");
        return std::vector<double>(panels + 1, 0.0);
      }(),
              std::vector<double>(panels + 1, 0.0), std::vector<double>(panels + 1, 0.0), lo,
              (hi - lo) / panels) {
  const double dx = (hi - lo) / panels;
  std::vector<double> F(panels + 1), dF(panels + 1), d2F(panels + 1);
  double acc = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double x = lo + i * dx;
    if (i > 0) {
      acc += boost::math::quadrature::gauss<double, 20>::integrate(
          [&](double t) { return f(t)[0]; }, x - dx, x);
    }
    const auto v = f(x);
    F[i] = acc;
    dF[i] = v[0];
    d2F[i] = v[1];
  }
  total_ = acc;
  f_lo_ = dF.front();
  f_hi_ = dF.back();
  spline_ = boost::math::interpolators::cardinal_quintic_hermite<std::vector<double>>(
      std::move(F), std::move(dF), std::move(d2F), lo, dx);
}

double CumulativeTable::operator()(double x) const {
  if (x <= lo_) return f_lo_ * (x - lo_);
  if (x >= hi_) return total_ + f_hi_ * (x - hi_);
  return spline_(x);
}

SmoothProfile::SmoothProfile(double lo, double hi, Evaluator eval,
                             std::map<std::string, double> params)
    : lo_(lo), hi_(hi), eval_(std::move(eval)), params_(std::move(params)) {}

double SmoothProfile::param(const std::string& key) const {
  auto it = params_.find(key);
  if (it == params_.end()) throw std::out_of_range("SmoothProfile: no parameter " + key);
  return it->second;
}

namespace {
constexpr double kEtaBump = 1.5;
}

SmoothProfile mollifier_eta() {
  auto eval = [](double x) {
    ProfileSample s;
    if (x <= 0.2) return s;
    if (x >= 0.4) {
      s.value = 1.0;
      return s;
    }
    const auto j = smooth_step(5.0 * (x - 0.2));
    s.value = j.derivative(0) + kEtaBump * j.derivative(1);
    s.d1 = 5.0 * (j.derivative(1) + kEtaBump * j.derivative(2));
    s.d2 = 25.0 * (j.derivative(2) + kEtaBump * j.derivative(3));
    return s;
  };
  return SmoothProfile(0.0, std::numeric_limits<double>::infinity(), eval,
                       {{"c", kEtaBump}, {"lo", 0.2}, {"hi", 0.4}});
}

double eta_integral(double x) {
  if (x <= 0.2) return 0.0;
  if (x >= 0.4) return x;
  const double y = 5.0 * (x - 0.2);
  return 0.2 * (step_integral_table()(y) + kEtaBump * smooth_step(y).value());
}

namespace {

struct W0Data {
  BumpKernel kernel{0.125};
  BumpKernel bump{0.25};
  // M(x) = \int_{-1/8}^x s phi(s) ds
  CumulativeTable first_moment;
  double mu = 0.0;

  W0Data()
      : first_moment(-0.125, 0.125, 1024, [this](double s) {
          const auto j = kernel.cdf(s);
          return std::array<double, 2>{s * j.derivative(1), j.derivative(1) + s * j.derivative(2)};
        }) {
    auto mprime = [this](double x) { return 2.0 * kernel.cdf(x).value() - 1.0; };
    const double a2 = 2.0 * 0.875 + composite_gauss([&](double x) { return mprime(x) * mprime(x); },
                                                    -0.125, 0.125, 64);
    const double b = composite_gauss(
        [&](double x) { return mprime(x) * bump.cdf(x).derivative(2); }, -0.25, 0.25, 64);
    const double c = composite_gauss(
        [&](double x) {
          const double d = bump.cdf(x).derivative(2);
          return d * d;
        },
        -0.25, 0.25, 64);
    const double disc = b * b - c * (a2 - 2.0);
    if (!(disc >= 0.0) || !(c > 0.0)) {
      throw std::runtime_error("profile_w0: amplitude equation has no real root");
    }
    mu = (b + std::sqrt(disc)) / c;
  }

  ProfileSample eval(double x) const {
    const auto k = kernel.cdf(x);
    const auto bj = bump.cdf(x);
    ProfileSample s;
    s.value = x * (2.0 * k.value() - 1.0) - 2.0 * first_moment(x) - 1.0 - mu * bj.derivative(1);
    s.d1 = 2.0 * k.value() - 1.0 - mu * bj.derivative(2);
    s.d2 = 2.0 * k.derivative(1) - mu * bj.derivative(3);
    return s;
  }
};

const W0Data& w0_data() {
  static const W0Data data;
  return data;
}

}  // namespace

SmoothProfile profile_w0() {
  const auto& d = w0_data();
  return SmoothProfile(-1.0, 1.0, [&d](double x) { return d.eval(x); },
                       {{"mu", d.mu}, {"kernel_half_width", 0.125}, {"bump_half_width", 0.25}});
}

}  // namespace vkcone
