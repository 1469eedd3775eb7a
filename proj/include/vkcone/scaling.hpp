#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vkcone/minimizer.hpp"
#include "vkcone/radial.hpp"

namespace vkcone {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Largest node radius r > 0 where wp lies outside (1/2, 3/2) and
/// (-3/2, -1/2); 0 when wp stays in the wells on (0, 1].
double well_exit_radius(const RadialField& field);

/// g_a(r) = \int_a^r (1 - wp^2) + c_a on [a, 2a] with zero mean. Samples are
/// at cell end points and midpoints (r has odd length, composite Simpson
/// panels [r_{2k}, r_{2k+2}]). g2 holds g_a'' = -2 wp wp' (cell average at
/// the nodes).
struct ExcessSample {
  double a = 0.0;
  std::vector<double> r;
  std::vector<double> g;
  std::vector<double> g2;
  double l2_norm = 0.0;
};

/// Throws std::invalid_argument unless 0 < a <= 1/2.
ExcessSample excess_function(const RadialField& field, double a);

/// osc(f) / (|f|^{3/4} |f''|^{1/4} + |I|^{-1/2} |f|), L^2 norms on the
/// sampled interval by the trapezoid rule. Returns 0 for constant f.
/// Throws std::invalid_argument on mismatched or too short samples.
double oscillation_check(const std::vector<double>& x, const std::vector<double>& f,
                         const std::vector<double>& f2);

struct SweepRecord {
  Params params;
  int cells = 0;
  std::uint64_t seed = kDefaultSeed;
  double tol = 0.0;
  int max_iter = 0;
  double e_min = kNaN;
  double e_invert = kNaN;  // NaN when delta < h
  double e_flatten = kNaN;
  double bound = kNaN;
  double tau = kNaN;
  std::optional<std::string> regime;
  bool converged = false;
  double kkt_residual = kNaN;
  std::string best_start;
  /// Some adjacent nodal wp values differ by more than kResolutionJump, or
  /// strain_floor exceeds kResolutionFloor * e_min.
  bool resolution_warning = false;
  std::map<std::string, double> diagnostics;
  std::string error;  // empty on success

  std::string key() const;
};

inline constexpr double kResolutionJump = 0.2;
inline constexpr double kResolutionFloor = 0.1;

/// \int r (wp^2 - m_c)^2 summed over cells, m_c the r-weighted cell mean of
/// wp^2. A cellwise constant u' cannot cancel this part of the radial strain,
/// so it bounds the radial stretch from below for the given wp.
double strain_floor(const RadialField& field);

/// cone when delta <= h; inversion when tau > delta/8 and wp < -1/2 somewhere
/// on [delta/8, 1]; boundary-layer otherwise. Withheld for unconverged or
/// failed records.
std::optional<std::string> classify_regime(const SweepRecord& record);

/// Named diagnostic ratios of a minimizer field:
///   excess_ratio       |g_a|_{L^2(I_a)} / (a^{1/2} E^{1/2}) at a = delta/4
///   excess_max         the same, maximized over dyadic a in [h, 1/2]
///   oscillation_ratio  oscillation_check of g_a at a = delta/4
///   oscillation_max    the same over dyadic a
///   excess_l1_max      max over dyadic a of |1 - wp^2|_{L^1(I_a)} / a
///   wp_l1_origin       \int_0^{4h} |wp| / (4h)
///   wp_min_outer       min nodal wp on [delta/8, 1]
///   max_wp_jump        max |wp_{i+1} - wp_i|
///   strain_floor_ratio strain_floor / E
/// Entries at a = delta/4 are omitted when delta/4 is outside (0, 1/2] or
/// below one cell width at that radius.
std::map<std::string, double> diagnostics(const RadialField& field, const Params& params,
                                          double energy);

struct SweepConfig {
  std::vector<double> h_list;
  std::vector<double> delta_list;
  int cells = 8192;
  MinimizeOptions minimize;
  int jobs = 1;
  std::string output;  // JSON-lines file; empty keeps records in memory only
  bool resume = false;
};

/// Constructions, minimizer and diagnostics at one parameter point. Errors
/// are caught and stored in the record.
SweepRecord run_point(const Params& params, int cells, const MinimizeOptions& opts);

/// All |h_list| x |delta_list| points in row-major (h outer) order. With
/// resume, records whose key is already in the output file are read back
/// instead of recomputed. New records are appended as they finish.
std::vector<SweepRecord> sweep(const SweepConfig& config);

/// One JSON object per record; NaN fields are written as null.
std::string record_to_json_line(const SweepRecord& r);
/// Throws std::invalid_argument on malformed input.
SweepRecord record_from_json_line(const std::string& line);

/// CSV with columns h, delta, e_min, e_invert, e_flatten, bound, tau, regime.
void write_summary_csv(std::ostream& os, const std::vector<SweepRecord>& records);

enum class FitAxis { h, delta };

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int points = 0;
  FitAxis axis = FitAxis::h;
  double window_lo = 0.0;  // predictor range actually used
  double window_hi = 0.0;
  int excluded = 0;        // points dropped for resolution warnings
};

/// Ordinary least squares of log y on log x. Throws std::invalid_argument for
/// fewer than 4 points or non-positive values.
ExponentFit fit_exponent(const std::vector<double>& x, const std::vector<double>& y,
                         FitAxis axis = FitAxis::h);

/// Fits a record column ("e_min", "e_invert", "e_flatten", "bound") against h
/// or delta over records with predictor in [lo, hi]. For the h axis, records
/// at the small-h end of the window that carry a resolution warning are
/// dropped (stopping at the first one without a warning).
ExponentFit fit_exponent(const std::vector<SweepRecord>& records, FitAxis axis,
                         const std::string& response, double lo = 0.0,
                         double hi = std::numeric_limits<double>::infinity());

/// max/min over the records of e_min / (h^2 log(1/h)).
double cone_ratio_spread(const std::vector<SweepRecord>& records);

/// Boundary-layer to inversion transition at fixed h: the geometric mean of
/// the largest boundary-layer delta below the smallest inversion delta and
/// that delta. Records with other h or no regime are ignored. Returns NaN when
/// either side is missing.
double transition_delta(const std::vector<SweepRecord>& records, double h);

}  // namespace vkcone
