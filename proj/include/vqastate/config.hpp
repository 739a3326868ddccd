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

#include <functional>
#include <string>
#include <vector>

#include "vqastate/backend.hpp"
#include "vqastate/image.hpp"
#include "vqastate/recognition.hpp"
#include "vqastate/types.hpp"

namespace vqastate {

// Effective settings for one CLI invocation or service process. Layered as
// built-in defaults < config file < environment < command-line flags.
struct CliConfig {
  HttpBackendConfig backend;
  std::string mock_rules;
  std::string mock_label;
  AugmentConfig augment;
  AggregationConfig aggregation;
  std::string specs_dir;
  std::string listen = "127.0.0.1:8080";
  std::string service_token;
  std::string static_dir;

  // Runs the domain validators over every section.
  void validate() const;
  bool operator==(const CliConfig&) const = default;
};

Json to_json(const CliConfig& cfg);
// Overlays the keys present in `j` onto `base`.
CliConfig config_from_json(const Json& j, CliConfig base = {});
CliConfig load_config_file(const std::string& path, CliConfig base = {});

using EnvLookup = std::function<const char*(const char*)>;

// VQASTATE_BACKEND_URL, VQASTATE_TIMEOUT_MS, VQASTATE_SEED,
// VQASTATE_AUTH_TOKEN and VQASTATE_LISTEN.
void apply_environment(CliConfig& cfg, const EnvLookup& env);

StateSpec load_spec_file(const std::string& path);
// Every *.json file in `dir`, sorted by file name. Duplicate ids are an error.
std::vector<StateSpec> load_spec_dir(const std::string& dir);

Json read_json_file(const std::string& path);

}  // namespace vqastate
