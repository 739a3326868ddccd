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

#include "vqastate/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>

#include "json_util.hpp"

namespace vqastate {

namespace fs = std::filesystem;

void CliConfig::validate() const {
  std::vector<FieldIssue> issues;
  auto collect = [&](const std::string& prefix, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      for (const auto& i : e.issues())
        issues.push_back({prefix + i.field, i.message});
    }
  };
  collect("augment.", [&] { augment.validate(); });
  collect("aggregation.", [&] { aggregation.validate(); });
  if (backend.timeout_ms <= 0)
    issues.push_back({"backend.timeout_ms", "must be positive"});
  if (backend.max_in_flight < 1)
    issues.push_back({"backend.max_in_flight", "must be at least 1"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

Json to_json(const CliConfig& c) {
  return Json{
      {"backend",
       {{"url", c.backend.base_url},
        {"timeout_ms", c.backend.timeout_ms},
        {"auth_token", c.backend.auth_token},
        {"max_in_flight", c.backend.max_in_flight}}},
      {"mock", {{"rules", c.mock_rules}, {"label", c.mock_label}}},
      {"augment",
       {{"n_variants", c.augment.n_variants},
        {"magnitude", c.augment.magnitude},
        {"seed", c.augment.seed},
        {"per_pixel", c.augment.per_pixel}}},
      {"aggregation",
       {{"threshold", c.aggregation.threshold},
        {"aggregation_mode",
         std::string(to_string(c.aggregation.aggregation_mode))},
        {"min_valid", c.aggregation.min_valid}}},
      {"paths", {{"specs_dir", c.specs_dir}, {"static_dir", c.static_dir}}},
      {"service", {{"listen", c.listen}, {"token", c.service_token}}}};
}

CliConfig config_from_json(const Json& j, CliConfig c) {
  detail::Reader r(j);
  if (const Json* b = r.child("backend")) {
    detail::Reader br(*b, "backend");
    if (auto v = br.optional_string("url")) c.backend.base_url = *v;
    if (auto v = br.optional_uint("timeout_ms"))
      c.backend.timeout_ms = static_cast<int>(*v);
    if (auto v = br.optional_string("auth_token")) c.backend.auth_token = *v;
    if (auto v = br.optional_uint("max_in_flight")) c.backend.max_in_flight = *v;
    br.reject_unknown();
    r.merge(br.issues());
  }
  if (const Json* m = r.child("mock")) {
    detail::Reader mr(*m, "mock");
    if (auto v = mr.optional_string("rules")) c.mock_rules = *v;
    if (auto v = mr.optional_string("label")) c.mock_label = *v;
    mr.reject_unknown();
    r.merge(mr.issues());
  }
  if (const Json* a = r.child("augment")) {
    detail::Reader ar(*a, "augment");
    if (auto v = ar.optional_uint("n_variants")) c.augment.n_variants = *v;
    if (auto v = ar.optional_number("magnitude")) c.augment.magnitude = *v;
    if (auto v = ar.optional_uint("seed")) c.augment.seed = *v;
    if (auto v = ar.optional_bool("per_pixel")) c.augment.per_pixel = *v;
    ar.reject_unknown();
    r.merge(ar.issues());
  }
  if (const Json* g = r.child("aggregation")) {
    detail::Reader gr(*g, "aggregation");
    if (auto v = gr.optional_number("threshold")) c.aggregation.threshold = *v;
    if (auto v = gr.optional_enum<AggregationMode>("aggregation_mode",
                                                   parse_aggregation_mode))
      c.aggregation.aggregation_mode = *v;
    if (auto v = gr.optional_uint("min_valid")) c.aggregation.min_valid = *v;
    gr.reject_unknown();
    r.merge(gr.issues());
  }
  if (const Json* p = r.child("paths")) {
    detail::Reader pr(*p, "paths");
    if (auto v = pr.optional_string("specs_dir")) c.specs_dir = *v;
    if (auto v = pr.optional_string("static_dir")) c.static_dir = *v;
    pr.reject_unknown();
    r.merge(pr.issues());
  }
  if (const Json* s = r.child("service")) {
    detail::Reader sr(*s, "service");
    if (auto v = sr.optional_string("listen")) c.listen = *v;
    if (auto v = sr.optional_string("token")) c.service_token = *v;
    sr.reject_unknown();
    r.merge(sr.issues());
  }
  r.reject_unknown();
  r.finish();
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("$", path + ": " + e.what());
  }
}

CliConfig load_config_file(const std::string& path, CliConfig base) {
  return config_from_json(read_json_file(path), std::move(base));
}

namespace {

template <typename T>
T parse_env_number(const char* name, const char* value) {
  T out{};
  const char* end = value + std::char_traits<char>::length(value);
  auto [ptr, ec] = std::from_chars(value, end, out);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError(std::string(name) + ": expected a number, got '" + value +
                      "'");
  return out;
}

}  // namespace

void apply_environment(CliConfig& cfg, const EnvLookup& env) {
  if (const char* v = env("VQASTATE_BACKEND_URL"); v && *v)
    cfg.backend.base_url = v;
  if (const char* v = env("VQASTATE_TIMEOUT_MS"); v && *v)
    cfg.backend.timeout_ms = parse_env_number<int>("VQASTATE_TIMEOUT_MS", v);
  if (const char* v = env("VQASTATE_SEED"); v && *v)
    cfg.augment.seed = parse_env_number<std::uint64_t>("VQASTATE_SEED", v);
  if (const char* v = env("VQASTATE_AUTH_TOKEN"); v && *v)
    cfg.backend.auth_token = v;
  if (const char* v = env("VQASTATE_LISTEN"); v && *v) cfg.listen = v;
}

StateSpec load_spec_file(const std::string& path) {
  const Json j = read_json_file(path);
  try {
    return spec_from_json(j);
  } catch (const ValidationError& e) {
    std::vector<FieldIssue> issues;
    for (const auto& i : e.issues())
      issues.push_back({path + ": " + i.field, i.message});
    throw ValidationError(std::move(issues));
  }
}

std::vector<StateSpec> load_spec_dir(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw IoError("spec directory '" + dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<StateSpec> out;
  std::set<std::string> ids;
  for (const auto& f : files) {
    auto spec = load_spec_file(f.string());
    if (!ids.insert(spec.id()).second)
      throw ValidationError(f.string() + ": id",
                            "duplicate spec id '" + spec.id() + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace vqastate
