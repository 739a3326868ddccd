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

#include "vqastate/backend.hpp"

#include <cmath>
#include <fstream>

#include <httplib.h>

#include "json_util.hpp"
#include "vqastate/image.hpp"
#include "vqastate/question_engine.hpp"
#include "vqastate/random.hpp"

namespace vqastate {

std::string_view to_string(RequestKind k) {
  return k == RequestKind::Vqa ? "vqa" : "caption";
}

std::optional<RequestKind> parse_request_kind(std::string_view s) {
  if (s == "vqa") return RequestKind::Vqa;
  if (s == "caption") return RequestKind::Caption;
  return std::nullopt;
}

BackendRequest BackendRequest::vqa(const ImageVariant& image,
                                   std::string question) {
  if (question.empty())
    throw ValidationError("question", "question must be non-empty");
  return BackendRequest(image, std::move(question), RequestKind::Vqa);
}

BackendRequest BackendRequest::caption(const ImageVariant& image) {
  return BackendRequest(image, std::string(kCaptionPrompt),
                        RequestKind::Caption);
}

// ---------------------------------------------------------------------------
// HTTP client

void HttpBackendConfig::validate() const {
  std::vector<FieldIssue> issues;
  if (base_url.empty()) issues.push_back({"backend.url", "must be set"});
  if (timeout_ms <= 0)
    issues.push_back({"backend.timeout_ms", "must be positive"});
  if (max_in_flight < 1)
    issues.push_back({"backend.max_in_flight", "must be at least 1"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  while (!cfg_.base_url.empty() && cfg_.base_url.back() == '/')
    cfg_.base_url.pop_back();
}

Json answer_request_body(const BackendRequest& request) {
  return Json{{"image_b64", base64_encode(encode_png(request.image()))},
              {"question", request.question()},
              {"kind", std::string(to_string(request.kind()))}};
}

std::string HttpBackend::ask(const BackendRequest& request) {
  // httplib::Client is not safe to share between threads; one per call.
  httplib::Client client(cfg_.base_url);
  const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!cfg_.auth_token.empty())
    headers.emplace("Authorization", "Bearer " + cfg_.auth_token);

  const auto body = answer_request_body(request).dump();
  auto res = client.Post("/v1/answer", headers, body, "application/json");
  if (!res)
    throw TransportError(cfg_.base_url + "/v1/answer: " +
                         httplib::to_string(res.error()));

  Json reply;
  try {
    reply = Json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    if (res->status != 200)
      throw BackendError("HTTP " + std::to_string(res->status), res->status);
    throw ProtocolError("reply is not JSON");
  }
  if (res->status != 200) {
    std::string msg = "HTTP " + std::to_string(res->status);
    if (reply.is_object() && reply.contains("error") && reply["error"].is_string())
      msg = reply["error"].get<std::string>();
    throw BackendError(msg, res->status);
  }
  if (!reply.is_object() || !reply.contains("answer") ||
      !reply["answer"].is_string())
    throw ProtocolError("reply lacks a string 'answer' field");
  return reply["answer"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Mock

void MockRule::validate() const {
  std::vector<FieldIssue> issues;
  if (distribution.empty())
    issues.push_back({"distribution", "must be non-empty"});
  double sum = 0.0;
  for (const auto& [answer, p] : distribution) {
    if (!(p >= 0.0) || !std::isfinite(p))
      issues.push_back({"distribution." + answer, "probability must be >= 0"});
    sum += p;
  }
  if (!distribution.empty() && std::abs(sum - 1.0) > 1e-9)
    issues.push_back({"distribution", "probabilities must sum to 1"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

void MockRuleSet::validate() const {
  std::vector<FieldIssue> issues;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    try {
      rules[i].validate();
    } catch (const ValidationError& e) {
      for (const auto& issue : e.issues())
        issues.push_back(
            {"rules[" + std::to_string(i) + "]." + issue.field, issue.message});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

bool pattern_matches(std::string_view pattern, std::string_view text) {
  if (pattern.find('*') == std::string_view::npos)
    return text.find(pattern) != std::string_view::npos;

  // Iterative glob with single-star backtracking.
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

const MockRule* select_rule(const MockRuleSet& rules, RequestKind kind,
                            std::string_view label, std::string_view question) {
  const MockRule* best = nullptr;
  for (const auto& rule : rules.rules) {
    if (rule.kind != kind) continue;
    if (!pattern_matches(rule.image_label, label)) continue;
    if (!pattern_matches(rule.question_pattern, question)) continue;
    if (!best || rule.priority > best->priority) best = &rule;
  }
  return best;
}

std::string mock_answer(const MockRuleSet& rules, std::string_view label,
                        std::string_view question, std::uint64_t seed,
                        std::uint64_t draw_index, RequestKind kind) {
  const MockRule* rule = select_rule(rules, kind, label, question);
  if (!rule)
    return kind == RequestKind::Caption ? rules.default_caption
                                        : rules.default_answer;

  std::uint64_t key = derive_key(seed, fnv1a64(label));
  key = derive_key(key, fnv1a64(question));
  key = derive_key(key, static_cast<std::uint64_t>(kind));
  const double u = CounterStream(key).unit(draw_index);

  double acc = 0.0;
  const std::string* last = nullptr;
  for (const auto& [answer, p] : rule->distribution) {
    if (p <= 0.0) continue;
    acc += p;
    last = &answer;
    if (u < acc) return answer;
  }
  // Only reachable through rounding in the cumulative sum.
  return last ? *last : rules.default_answer;
}

MockBackend::MockBackend(std::shared_ptr<const MockRuleSet> rules,
                         std::string image_label, std::uint64_t seed)
    : rules_(std::move(rules)), label_(std::move(image_label)), seed_(seed) {
  rules_->validate();
}

std::string MockBackend::ask(const BackendRequest& request) {
  const bool supported = request.kind() == RequestKind::Caption
                             ? rules_->supports_caption
                             : rules_->supports_vqa;
  if (!supported)
    throw BackendError(std::string(to_string(request.kind())) + " unsupported",
                       501);
  return mock_answer(*rules_, label_, request.question(), seed_,
                     request.image().variant_index(), request.kind());
}

Json to_json(const MockRuleSet& rules) {
  Json list = Json::array();
  for (const auto& r : rules.rules) {
    Json dist = Json::object();
    for (const auto& [answer, p] : r.distribution) dist[answer] = p;
    list.push_back(Json{{"image_label", r.image_label},
                        {"question_pattern", r.question_pattern},
                        {"kind", std::string(to_string(r.kind))},
                        {"distribution", std::move(dist)},
                        {"priority", r.priority}});
  }
  Json caps = Json::array();
  if (rules.supports_vqa) caps.push_back("vqa");
  if (rules.supports_caption) caps.push_back("caption");
  return Json{{"schema_version", 1},
              {"default_answer", rules.default_answer},
              {"default_caption", rules.default_caption},
              {"capabilities", std::move(caps)},
              {"rules", std::move(list)}};
}

MockRuleSet mock_rules_from_json(const Json& j) {
  detail::Reader r(j);
  MockRuleSet out;
  r.optional_uint("schema_version");
  if (auto s = r.optional_string("default_answer")) out.default_answer = *s;
  if (auto s = r.optional_string("default_caption")) out.default_caption = *s;
  if (auto caps = r.optional_enum_list<RequestKind>("capabilities",
                                                    parse_request_kind)) {
    out.supports_vqa = std::find(caps->begin(), caps->end(), RequestKind::Vqa) !=
                       caps->end();
    out.supports_caption = std::find(caps->begin(), caps->end(),
                                     RequestKind::Caption) != caps->end();
  }
  if (const Json* list = r.child_array("rules")) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string path = "rules[" + std::to_string(i) + "]";
      detail::Reader rr((*list)[i], path);
      MockRule rule;
      if (auto s = rr.optional_string("image_label")) rule.image_label = *s;
      if (auto s = rr.optional_string("question_pattern"))
        rule.question_pattern = *s;
      if (auto k = rr.optional_enum<RequestKind>("kind", parse_request_kind))
        rule.kind = *k;
      if (auto p = rr.optional_number("priority"))
        rule.priority = static_cast<int>(*p);
      if (const Json* dist = rr.child("distribution")) {
        for (auto it = dist->begin(); it != dist->end(); ++it) {
          if (!it.value().is_number()) {
            rr.issue("distribution." + it.key(), "expected a number");
            continue;
          }
          rule.distribution.emplace_back(it.key(), it.value().get<double>());
        }
      } else {
        rr.issue("distribution", "required");
      }
      rr.reject_unknown();
      r.merge(rr.issues());
      out.rules.push_back(std::move(rule));
    }
  }
  r.reject_unknown();
  r.finish();
  out.validate();
  return out;
}

MockRuleSet load_mock_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock rules '" + path + "'");
  try {
    return mock_rules_from_json(Json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("$", path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Binding

BackendBinding BackendBinding::live(std::shared_ptr<VqaBackend> backend) {
  BackendBinding b;
  b.live_ = std::move(backend);
  return b;
}

BackendBinding BackendBinding::mock(std::shared_ptr<const MockRuleSet> rules) {
  rules->validate();
  BackendBinding b;
  b.rules_ = std::move(rules);
  return b;
}

std::shared_ptr<VqaBackend> BackendBinding::for_image(
    std::string_view mock_label, std::uint64_t seed) const {
  if (rules_)
    return std::make_shared<MockBackend>(rules_, std::string(mock_label), seed);
  return live_;
}

}  // namespace vqastate
