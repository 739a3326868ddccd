// Copyright 2026 The vqastate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vqastate/types.hpp"

namespace vqastate::detail {

// Field-by-field reader over a JSON object that accumulates issues instead of
// failing on the first one. Call finish() before using the values it
// returned; it throws ValidationError if anything was missing or mistyped.
class Reader {
 public:
  explicit Reader(const Json& j, std::string prefix = "")
      : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) issue("", "expected an object");
  }

  void issue(const std::string& field, std::string message) {
    std::string path = prefix_;
    if (!field.empty()) path += path.empty() ? field : "." + field;
    issues_.push_back({path.empty() ? "$" : path, std::move(message)});
  }

  bool has(const std::string& key) const {
    return j_.is_object() && j_.contains(key) && !j_.at(key).is_null();
  }

  std::optional<std::string> optional_string(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_string()) {
      issue(key, "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::string required_string(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      issue(key, "required");
      return {};
    }
    return optional_string(key).value_or("");
  }

  std::optional<double> optional_number(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_number()) {
      issue(key, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  double required_number(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      issue(key, "required");
      return 0.0;
    }
    return optional_number(key).value_or(0.0);
  }

  std::optional<std::uint64_t> optional_uint(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() &&
        !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      issue(key, "expected a non-negative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::uint64_t required_uint(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      issue(key, "required");
      return 0;
    }
    return optional_uint(key).value_or(0);
  }

  std::optional<bool> optional_bool(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) {
      issue(key, "expected a boolean");
      return std::nullopt;
    }
    return v.get<bool>();
  }

  std::optional<std::vector<std::string>> optional_string_list(
      const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_array()) {
      issue(key, "expected an array of strings");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        issue(key + "[" + std::to_string(i) + "]", "expected a string");
        continue;
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  std::vector<std::string> required_string_list(const std::string& key) {
    if (!has(key)) {
      seen_.insert(key);
      issue(key, "required");
      return {};
    }
    return optional_string_list(key).value_or(std::vector<std::string>{});
  }

  template <typename E, typename Parse>
  std::optional<E> optional_enum(const std::string& key, Parse parse) {
    auto s = optional_string(key);
    if (!s) return std::nullopt;
    auto e = parse(*s);
    if (!e) issue(key, "unknown value '" + *s + "'");
    return e;
  }

  template <typename E, typename Parse>
  E required_enum(const std::string& key, Parse parse) {
    if (!has(key)) {
      seen_.insert(key);
      issue(key, "required");
      return E{};
    }
    return optional_enum<E>(key, parse).value_or(E{});
  }

  template <typename E, typename Parse>
  std::optional<std::vector<E>> optional_enum_list(const std::string& key,
                                                   Parse parse) {
    auto list = optional_string_list(key);
    if (!list) return std::nullopt;
    std::vector<E> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (auto e = parse((*list)[i]))
        out.push_back(*e);
      else
        issue(key + "[" + std::to_string(i) + "]",
              "unknown value '" + (*list)[i] + "'");
    }
    return out;
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    if (!j_.at(key).is_object()) {
      issue(key, "expected an object");
      return nullptr;
    }
    return &j_.at(key);
  }

  const Json* child_array(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    if (!j_.at(key).is_array()) {
      issue(key, "expected an array");
      return nullptr;
    }
    return &j_.at(key);
  }

  // Rejects keys that no accessor asked for.
  void reject_unknown() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) issue(it.key(), "unknown field");
  }

  void merge(const std::vector<FieldIssue>& other) {
    issues_.insert(issues_.end(), other.begin(), other.end());
  }

  const std::vector<FieldIssue>& issues() const { return issues_; }

  void finish() {
    if (!issues_.empty()) throw ValidationError(issues_);
  }

 private:
  const Json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
  std::vector<FieldIssue> issues_;
};

}  // namespace vqastate::detail
