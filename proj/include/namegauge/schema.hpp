// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "namegauge/tsv.hpp"

namespace namegauge::schema {

// Validator for the JSON Schema subset used by the shipped schemas: type
// (single or list), enum, required, properties, additionalProperties (bool),
// items, minItems, minimum, maximum, minLength.

namespace detail {

inline bool has_type(const nlohmann::json& value, const std::string& type) {
  if (type == "null") return value.is_null();
  if (type == "boolean") return value.is_boolean();
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "integer") {
    return value.is_number_integer() ||
           (value.is_number_float() && value.get<double>() == std::floor(value.get<double>()));
  }
  if (type == "number") return value.is_number();
  return false;
}

inline void check(const nlohmann::json& value, const nlohmann::json& schema, const std::string& where,
                  std::vector<std::string>& errors) {
  if (auto t = schema.find("type"); t != schema.end()) {
    bool ok = false;
    if (t->is_array()) {
      for (const auto& each : *t) ok = ok || has_type(value, each.get<std::string>());
    } else {
      ok = has_type(value, t->get<std::string>());
    }
    if (!ok) {
      errors.push_back(where + ": expected type " + t->dump() + ", got " + value.dump());
      return;
    }
  }
  if (auto e = schema.find("enum"); e != schema.end()) {
    bool found = false;
    for (const auto& option : *e) found = found || option == value;
    if (!found) errors.push_back(where + ": value " + value.dump() + " not in enum");
  }
  if (value.is_number()) {
    const double v = value.get<double>();
    if (auto m = schema.find("minimum"); m != schema.end() && v < m->get<double>()) {
      errors.push_back(where + ": " + value.dump() + " below minimum");
    }
    if (auto m = schema.find("maximum"); m != schema.end() && v > m->get<double>()) {
      errors.push_back(where + ": " + value.dump() + " above maximum");
    }
  }
  if (value.is_string()) {
    if (auto m = schema.find("minLength");
        m != schema.end() && value.get<std::string>().size() < m->get<std::size_t>()) {
      errors.push_back(where + ": string shorter than minLength");
    }
  }
  if (value.is_object()) {
    if (auto r = schema.find("required"); r != schema.end()) {
      for (const auto& key : *r) {
        if (!value.contains(key.get<std::string>())) {
          errors.push_back(where + ": missing required property '" + key.get<std::string>() + "'");
        }
      }
    }
    const auto props = schema.find("properties");
    for (const auto& [key, child] : value.items()) {
      if (props != schema.end() && props->contains(key)) {
        check(child, (*props)[key], where + "." + key, errors);
      } else if (auto ap = schema.find("additionalProperties");
                 ap != schema.end() && ap->is_boolean() && !ap->get<bool>()) {
        errors.push_back(where + ": unexpected property '" + key + "'");
      } else if (ap != schema.end() && ap->is_object()) {
        check(child, *ap, where + "." + key, errors);
      }
    }
  }
  if (value.is_array()) {
    if (auto m = schema.find("minItems"); m != schema.end() && value.size() < m->get<std::size_t>()) {
      errors.push_back(where + ": fewer than minItems elements");
    }
    if (auto items = schema.find("items"); items != schema.end()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        check(value[i], *items, where + "[" + std::to_string(i) + "]", errors);
      }
    }
  }
}

inline bool allows(const nlohmann::json& prop, const std::string& type) {
  auto t = prop.find("type");
  if (t == prop.end()) return false;
  if (t->is_array()) {
    for (const auto& each : *t) {
      if (each.get<std::string>() == type) return true;
    }
    return false;
  }
  return t->get<std::string>() == type;
}

}  // namespace detail

/// Returns every violation (empty when `value` conforms).
inline std::vector<std::string> validate(const nlohmann::json& value, const nlohmann::json& schema) {
  std::vector<std::string> errors;
  detail::check(value, schema, "$", errors);
  return errors;
}

/// Validates a TSV whose schema describes the array of row objects. Cells
/// are typed by the property schema: empty -> null when allowed, numeric
/// when the property accepts numbers, otherwise string. The header must
/// list exactly the schema's "columns" in order.
inline std::vector<std::string> validate_tsv(const std::string& text, const nlohmann::json& schema) {
  std::vector<std::string> errors;
  tsv::Table table;
  try {
    table = tsv::parse(text);
  } catch (const Error& e) {
    return {e.what()};
  }
  const auto& columns = schema.at("columns");
  std::vector<std::string> expected;
  for (const auto& c : columns) expected.push_back(c.get<std::string>());
  if (table.header != expected) {
    errors.push_back("header mismatch: expected " + columns.dump());
    return errors;
  }
  const auto& row_schema = schema.at("items");
  const auto& props = row_schema.at("properties");
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& key = table.header[i];
      const auto& cell = row[i];
      const nlohmann::json& prop = props.contains(key) ? props[key] : nlohmann::json::object();
      if (cell.empty() && detail::allows(prop, "null")) {
        obj[key] = nullptr;
      } else if (detail::allows(prop, "number") || detail::allows(prop, "integer")) {
        try {
          std::size_t used = 0;
          const double v = std::stod(cell, &used);
          obj[key] = used == cell.size() ? nlohmann::json(v) : nlohmann::json(cell);
        } catch (const std::exception&) {
          obj[key] = cell;
        }
      } else {
        obj[key] = cell;
      }
    }
    rows.push_back(std::move(obj));
  }
  auto more = validate(rows, schema);
  errors.insert(errors.end(), more.begin(), more.end());
  return errors;
}

}  // namespace namegauge::schema
