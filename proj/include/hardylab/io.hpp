#pragma once

#include <filesystem>
#include <string>

#include "hardylab/atoms.hpp"
#include "hardylab/decompose.hpp"
#include <json.hpp>

namespace hardylab {

using json = nlohmann::json;

// %.17g, round-trips every double.
std::string fmt17(double v);

json to_json(const Point& p);
json to_json(const Ball& b);
json to_json(const GridSpec& s);
json to_json(const Weight& w);
json to_json(const HardyParams& p);
Point point_from_json(const json& j);
Ball ball_from_json(const json& j);
GridSpec grid_spec_from_json(const json& j);
Weight weight_from_json(const json& j);
HardyParams params_from_json(const json& j);

// On-disk grid function: `<stem>.json` header {format, dim, lo, hi, h, count, encoding, data}
// next to `<stem>.csv` (one %.17g value per line, axis 0 fastest) or `<stem>.bin`
// (raw little-endian float64, same order).
enum class Encoding { csv, f64le };

void write_grid_function(const std::filesystem::path& stem, const GridFunction& f, Encoding enc = Encoding::csv);
GridFunction read_grid_function(const std::filesystem::path& header);

// Grid file plus a sidecar `<stem>.candidate.json` (ball, params, weight, seed, kind, fills).
void write_candidate(const std::filesystem::path& stem, const AtomCandidate& c, Encoding enc = Encoding::csv);
AtomCandidate read_candidate(const std::filesystem::path& sidecar);

std::string report_csv(const ValidationReport& r);
json report_json(const ValidationReport& r);

// coefficients.csv (k, t_k, s_k), a_<k> / b_<k> / residual grid files and manifest.json.
void write_decomposition(const std::filesystem::path& dir, const Decomposition& d, Encoding enc = Encoding::csv);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace hardylab
