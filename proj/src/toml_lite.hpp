#pragma once

#include <string>

#include <json.hpp>

namespace tvlab {

// Minimal TOML reader covering what run configs need: [dotted.tables],
// bare keys, strings, booleans, integers, floats, and (nested, possibly
// multi-line) arrays.  Full TOML (dates, inline tables, multiline strings)
// is out of scope; configs can always use the JSON mirror instead.
nlohmann::json parse_toml_lite(const std::string& text);

}  // namespace tvlab
