#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "vkcone/minimizer.hpp"

namespace vkcone {

/// Everything that can influence a run. Echoed into every JSON output.
struct RunConfig {
  std::string command;
  double h = 0.01;
  double delta = 0.0;
  bool delta_given = false;
  int cells = 8192;
  double tol = 1e-9;
  int max_iter = 5000;
  std::uint64_t seed = kDefaultSeed;
  int jobs = 1;
  std::string kind = "invert";
  std::string field_in;
  std::string json_out;
  std::string field_out = "field.csv";
  std::string construct_out;
  std::string grid_out = "pyramid_w.csv";
  int grid_n = 512;
  int quad_points = 8;
  int refine = 1;
  std::vector<double> h_list;
  std::vector<double> delta_list;
  std::string sweep_out = "sweep.jsonl";
  std::string summary_out = "summary.csv";
  bool resume = false;
  std::string config_path;
};

nlohmann::json to_json(const RunConfig& c);

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitValidation = 2;

/// Parses argv, runs the chosen command and returns the exit status:
/// 0 on success, 2 when a flag violates a precondition, 1 on a numerical
/// failure (outputs are still written).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vkcone
