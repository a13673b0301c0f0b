#include "llm/schema.hpp"

#include <algorithm>

namespace consearch {

using nlohmann::json;

namespace {

bool type_matches(const std::string& type, const json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

std::optional<std::string> check(const json& schema, const json& v, const std::string& path) {
  if (auto t = schema.find("type"); t != schema.end()) {
    std::vector<std::string> types;
    if (t->is_array()) {
      for (const auto& x : *t) types.push_back(x.get<std::string>());
    } else {
      types.push_back(t->get<std::string>());
    }
    const bool ok =
        std::any_of(types.begin(), types.end(), [&](const auto& ty) { return type_matches(ty, v); });
    if (!ok) return path + ": expected " + t->dump();
  }
  if (v.is_object()) {
    const json props = schema.value("properties", json::object());
    for (const auto& r : schema.value("required", json::array())) {
      if (!v.contains(r.get<std::string>())) {
        return path + ": missing required field '" + r.get<std::string>() + "'";
      }
    }
    for (const auto& [k, child] : v.items()) {
      auto p = props.find(k);
      if (p == props.end()) return path + ": unexpected field '" + k + "'";
      if (auto err = check(*p, child, path + "." + k)) return err;
    }
  } else if (v.is_array()) {
    if (auto m = schema.find("minItems"); m != schema.end() && v.size() < m->get<std::size_t>()) {
      return path + ": expected at least " + m->dump() + " items, got " + std::to_string(v.size());
    }
    if (auto m = schema.find("maxItems"); m != schema.end() && v.size() > m->get<std::size_t>()) {
      return path + ": expected at most " + m->dump() + " items, got " + std::to_string(v.size());
    }
    if (auto items = schema.find("items"); items != schema.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto err = check(*items, v[i], path + "[" + std::to_string(i) + "]")) return err;
      }
    }
  } else if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (auto m = schema.find("minLength"); m != schema.end() && s.size() < m->get<std::size_t>()) {
      return path + ": string shorter than " + m->dump();
    }
    if (auto e = schema.find("enum"); e != schema.end()) {
      if (std::find(e->begin(), e->end(), v) == e->end()) {
        return path + ": value " + v.dump() + " not in " + e->dump();
      }
    }
  } else if (v.is_number_integer()) {
    const auto n = v.get<long long>();
    if (auto m = schema.find("minimum"); m != schema.end() && n < m->get<long long>()) {
      return path + ": below minimum " + m->dump();
    }
    if (auto m = schema.find("maximum"); m != schema.end() && n > m->get<long long>()) {
      return path + ": above maximum " + m->dump();
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_schema(const json& schema, const json& value) {
  return check(schema, value, "$");
}

}  // namespace consearch
