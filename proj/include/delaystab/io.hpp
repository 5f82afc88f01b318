#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"

#include "delaystab/grid_function.hpp"
#include "delaystab/lyapunov.hpp"
#include "delaystab/sampler.hpp"
#include "delaystab/segment.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/stability.hpp"
#include "delaystab/system.hpp"

namespace delaystab {

using Json = nlohmann::json;

/// Raised for malformed or incomplete configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip text for a double ("%.17g"); non-finite values are
/// written as inf, -inf and nan.
std::string format_double(double v);

/// JSON number, or the strings "inf", "-inf", "nan" for non-finite values.
Json number_json(double v);
double number_from_json(const Json& j, std::string_view what);

/// Throws ConfigError when `j` is not an object or has a key outside `allowed`.
void expect_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view context);

// Value types ----------------------------------------------------------------

Json to_json(const SpaceSpec& space);
SpaceSpec space_from_json(const Json& j);

Json to_json(const SystemDef& def);
SystemDef system_def_from_json(const Json& j);

Json to_json(const SamplerFamily& family);
SamplerFamily family_from_json(const Json& j);

std::string to_string(RadialMode mode);
RadialMode radial_from_json(const Json& j);

/// {"r", "nodes", "values", "derivs"[, "left_derivs"]}. For n = 1 the
/// value arrays are flat; otherwise each entry is the vector at a node.
Json to_json(const Segment& seg);
Segment segment_from_json(const Json& j);

/// Either {"linear": slope} or {"s": [...], "v": [...]}.
Json to_json(const MonotoneGridFunction& g);
MonotoneGridFunction grid_function_from_json(const Json& j);

/// {"kind": "weighted_sup" | "quadratic_integral" | "space_norm", "rate", "space", "scale"}.
Json to_json(const Functional& V);
Functional functional_from_json(const Json& j);

Json to_json(const Witness& w);
Json to_json(const StabilityReport& rep);

// Text exports ---------------------------------------------------------------

/// Columns s, x_1..x_n, dx_1..dx_n; one row per node.
std::string segment_csv(const Segment& seg);

/// Columns t, x_1..x_n, dx_1..dx_n over every knot of the dense output,
/// history included.
std::string trajectory_csv(const Trajectory& tr);

/// Matrix with the time grid in the header row and the shell edge in the
/// first column.
std::string envelope_csv(const KLEnvelope& env);

/// Writes through a temporary file in the same directory and renames it
/// into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace delaystab
