#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace consearch {

// Validates `value` against a closed subset of JSON Schema:
//   object  - "properties", "required"; unknown properties are rejected
//   array   - "items", "minItems", "maxItems"
//   string  - "minLength", "enum"
//   integer - "minimum", "maximum"
//   boolean, "null", and a list of types such as ["object", "null"]
// Returns the first violation as "<json path>: <reason>", or nullopt.
std::optional<std::string> validate_schema(const nlohmann::json& schema,
                                           const nlohmann::json& value);

}  // namespace consearch
