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
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqastate/types.hpp"

namespace vqastate {

enum class RequestKind { Vqa, Caption };

std::string_view to_string(RequestKind k);
std::optional<RequestKind> parse_request_kind(std::string_view s);

class BackendRequest {
 public:
  static BackendRequest vqa(const ImageVariant& image, std::string question);
  static BackendRequest caption(const ImageVariant& image);

  const ImageVariant& image() const noexcept { return *image_; }
  const std::string& question() const noexcept { return question_; }
  RequestKind kind() const noexcept { return kind_; }

 private:
  BackendRequest(const ImageVariant& image, std::string question,
                 RequestKind kind)
      : image_(&image), question_(std::move(question)), kind_(kind) {}

  const ImageVariant* image_;
  std::string question_;
  RequestKind kind_;
};

/// The answering function: (image, question) -> verbatim reply text.
///
/// Implementations must allow concurrent calls to ask(). They never interpret
/// replies; classification happens in the recognition layer.
class VqaBackend {
 public:
  virtual ~VqaBackend() = default;

  virtual std::string ask(const BackendRequest& request) = 0;

  std::string caption(const ImageVariant& image) {
    return ask(BackendRequest::caption(image));
  }

  // Upper bound on concurrent ask() calls the engine should issue.
  virtual std::size_t max_in_flight() const { return 8; }
};

struct HttpBackendConfig {
  std::string base_url;
  int timeout_ms = 30000;
  std::string auth_token;  // sent as "Authorization: Bearer <token>" if set
  std::size_t max_in_flight = 8;

  void validate() const;
  bool operator==(const HttpBackendConfig&) const = default;
};

// Client for the /v1/answer wire protocol. Ground-truth labels have no way
// in: the type only carries connection settings.
class HttpBackend final : public VqaBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  std::string ask(const BackendRequest& request) override;
  std::size_t max_in_flight() const override { return cfg_.max_in_flight; }

  const HttpBackendConfig& config() const noexcept { return cfg_; }

 private:
  HttpBackendConfig cfg_;
};

// Wire body for POST /v1/answer.
Json answer_request_body(const BackendRequest& request);

struct MockRule {
  std::string image_label = "*";
  std::string question_pattern = "*";
  RequestKind kind = RequestKind::Vqa;
  std::vector<std::pair<std::string, double>> distribution;
  int priority = 0;

  void validate() const;
  bool operator==(const MockRule&) const = default;
};

struct MockRuleSet {
  std::vector<MockRule> rules;
  std::string default_answer = "unknown";
  std::string default_caption = "unknown";
  bool supports_vqa = true;
  bool supports_caption = true;

  void validate() const;
  bool operator==(const MockRuleSet&) const = default;
};

/// Pattern semantics shared by labels and questions: a pattern containing
/// '*' must match the whole text with '*' standing for any run of
/// characters; any other pattern matches as a substring.
bool pattern_matches(std::string_view pattern, std::string_view text);

// Highest-priority matching rule; earlier rules win ties. nullptr if none.
const MockRule* select_rule(const MockRuleSet& rules, RequestKind kind,
                            std::string_view label, std::string_view question);

/// Deterministic draw from the selected rule's distribution, keyed by
/// (seed, label, question, draw_index). Falls back to the configured default
/// when no rule matches.
std::string mock_answer(const MockRuleSet& rules, std::string_view label,
                        std::string_view question, std::uint64_t seed,
                        std::uint64_t draw_index,
                        RequestKind kind = RequestKind::Vqa);

// In-process mock. The image label is fixed at construction; draw_index is
// the image variant index of each request.
class MockBackend final : public VqaBackend {
 public:
  MockBackend(std::shared_ptr<const MockRuleSet> rules, std::string image_label,
              std::uint64_t seed);

  std::string ask(const BackendRequest& request) override;

 private:
  std::shared_ptr<const MockRuleSet> rules_;
  std::string label_;
  std::uint64_t seed_;
};

Json to_json(const MockRuleSet& rules);
MockRuleSet mock_rules_from_json(const Json& j);
MockRuleSet load_mock_rules(const std::string& path);

/// How the engine obtains a backend for one image. A live binding hands out
/// the same client for every image; a mock binding builds a MockBackend for
/// the image's label and seed.
class BackendBinding {
 public:
  static BackendBinding live(std::shared_ptr<VqaBackend> backend);
  static BackendBinding mock(std::shared_ptr<const MockRuleSet> rules);

  std::shared_ptr<VqaBackend> for_image(std::string_view mock_label,
                                        std::uint64_t seed) const;
  bool is_mock() const noexcept { return rules_ != nullptr; }
  const MockRuleSet* mock_rules() const noexcept { return rules_.get(); }

 private:
  std::shared_ptr<VqaBackend> live_;
  std::shared_ptr<const MockRuleSet> rules_;
};

}  // namespace vqastate
