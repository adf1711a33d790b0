#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace mllmsent::toml {

/// Parses the TOML subset used by pipeline configs into a JSON object:
/// [tables], [[arrays of tables]], dotted keys, basic and literal strings,
/// integers, floats, booleans, arrays (may span lines) and inline tables.
/// Dates and multi-line strings are not supported. Errors throw ConfigError
/// with the offending line number.
nlohmann::json parse(std::string_view text);

}  // namespace mllmsent::toml
