#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "vkcone/minimizer.hpp"
#include "vkcone/radial.hpp"
#include "vkcone/ridge.hpp"

namespace vkcone {

using json = nlohmann::json;

/// CSV with header r,u,w,wp and 17 significant digits per value.
void write_field_csv(std::ostream& os, const RadialField& field);
void write_field_csv(const std::string& path, const RadialField& field);

/// Reads r, u, wp (w is recomputed). Throws std::invalid_argument on a
/// malformed header, row, or grid.
RadialField read_field_csv(std::istream& is);
RadialField read_field_csv(const std::string& path);

json to_json(const EnergyBreakdown& e);
json to_json(const MinResult& r);
json to_json(const PyramidResult& r);
json to_json(const Params& p);

/// 17 significant digits ("%.17g"); round-trips every double.
std::string format_double(double v);

/// x,y,w rows of a sampled field.
void write_grid_csv(std::ostream& os, const FieldGrid& g);

}  // namespace vkcone
