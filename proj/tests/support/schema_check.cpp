// Copyright 2026 The parrot-fusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "schema_check.hpp"

#include <algorithm>
#include <cmath>

namespace schema {
namespace {

bool has_type(const nlohmann::json& doc, const std::string& type) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  if (type == "number") return doc.is_number();
  if (type == "integer") {
    if (doc.is_number_integer()) return true;
    return doc.is_number_float() && std::floor(doc.get<double>()) == doc.get<double>();
  }
  return false;
}

}  // namespace

std::vector<std::string> check(const nlohmann::json& s, const nlohmann::json& doc, const std::string& path) {
  std::vector<std::string> errors;
  auto fail = [&](const std::string& why) { errors.push_back(path + ": " + why); };

  if (s.contains("type")) {
    std::vector<std::string> types;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) types.push_back(t.get<std::string>());
    } else {
      types.push_back(s["type"].get<std::string>());
    }
    if (std::none_of(types.begin(), types.end(), [&](const auto& t) { return has_type(doc, t); })) {
      fail("expected type " + s["type"].dump() + ", got " + doc.type_name());
      return errors;
    }
  }
  if (s.contains("const") && doc != s["const"]) fail("expected " + s["const"].dump());
  if (s.contains("enum")) {
    const auto& options = s["enum"];
    if (std::find(options.begin(), options.end(), doc) == options.end()) fail("not in enum " + options.dump());
  }
  if (doc.is_number()) {
    if (s.contains("minimum") && doc.get<double>() < s["minimum"].get<double>()) fail("below minimum");
    if (s.contains("maximum") && doc.get<double>() > s["maximum"].get<double>()) fail("above maximum");
  }
  if (doc.is_object()) {
    if (s.contains("required")) {
      for (const auto& key : s["required"]) {
        if (!doc.contains(key.get<std::string>())) fail("missing required '" + key.get<std::string>() + "'");
      }
    }
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (s.contains("properties") && s["properties"].contains(it.key())) {
        auto sub = check(s["properties"][it.key()], it.value(), path + "." + it.key());
        errors.insert(errors.end(), sub.begin(), sub.end());
      } else if (closed) {
        fail("unexpected property '" + it.key() + "'");
      }
    }
  }
  if (doc.is_array()) {
    if (s.contains("minItems") && doc.size() < s["minItems"].get<std::size_t>()) fail("too few items");
    if (s.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        auto sub = check(s["items"], doc[i], path + "[" + std::to_string(i) + "]");
        errors.insert(errors.end(), sub.begin(), sub.end());
      }
    }
  }
  return errors;
}

}  // namespace schema
