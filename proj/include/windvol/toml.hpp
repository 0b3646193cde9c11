#pragma once

#include <json.hpp>

#include <string_view>

namespace windvol {

/// Reads the TOML subset used by experiment configs into a JSON tree:
/// [tables], [[arrays of tables]], dotted table names, key = value with
/// strings, integers, floats, booleans, arrays and inline tables. Bare
/// local dates (2021-01-01) are returned as strings. Errors raise
/// ConfigInvalid with the line number.
nlohmann::json parse_toml(std::string_view text);

}  // namespace windvol
