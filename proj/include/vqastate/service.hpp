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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vqastate/backend.hpp"
#include "vqastate/evaluation.hpp"
#include "vqastate/recognition.hpp"
#include "vqastate/types.hpp"

namespace vqastate {

struct ApiResponse {
  int status = 200;
  Json body;
};

struct ServiceOptions {
  BackendBinding backend;
  AugmentConfig augment;
  AggregationConfig aggregation;
  std::vector<StateSpec> specs;
  // Optional bearer token required on every /v1 route.
  std::string token;
  // Workbench bundle served at "/" when set.
  std::string static_dir;
};

/// HTTP facade over the engine.
///
/// Routes:
///   POST   /v1/recognize        {spec_id | inline_spec, image_b64, overrides, mock_label}
///   GET    /v1/specs            list
///   GET    /v1/specs/{id}
///   PUT    /v1/specs/{id}       create or replace
///   DELETE /v1/specs/{id}
///   POST   /v1/caption          {image_b64, mock_label}
///   POST   /v1/evaluate         {corpus_ref, spec_ids, pair, overrides} -> 202 {report_id}
///   GET    /v1/reports/{id}     202 while queued/running, then the report
///   GET    /v1/history          append-only run log
///
/// Handlers are also callable directly; the HTTP layer only routes.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse recognize(const Json& body);
  ApiResponse list_specs() const;
  ApiResponse get_spec(const std::string& id) const;
  ApiResponse put_spec(const std::string& id, const Json& body);
  ApiResponse delete_spec(const std::string& id);
  ApiResponse caption(const Json& body);
  ApiResponse start_evaluation(const Json& body);
  ApiResponse get_report(const std::string& id) const;
  ApiResponse history() const;

  // Blocks until every queued evaluation has finished.
  void wait_for_jobs();

  // Returns false if the address cannot be bound.
  bool bind(const std::string& host, int port);
  // Binds an ephemeral port and returns it, or -1.
  int bind_any_port(const std::string& host);
  // Serves until stop(); call after a successful bind.
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Standalone /v1/answer server driven by mock rules. Requests carry no
// variant index, so the draw index is a hash of the image payload.
class MockAnswerServer {
 public:
  MockAnswerServer(std::shared_ptr<const MockRuleSet> rules, std::string label,
                   std::uint64_t seed);
  ~MockAnswerServer();
  MockAnswerServer(const MockAnswerServer&) = delete;
  MockAnswerServer& operator=(const MockAnswerServer&) = delete;

  ApiResponse answer(const Json& body) const;

  bool bind(const std::string& host, int port);
  int bind_any_port(const std::string& host);
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Splits "host:port"; a bare port binds 127.0.0.1.
std::optional<std::pair<std::string, int>> parse_listen_address(
    const std::string& address);

/// Shared by the CLI and the service so both produce identical documents.
/// A mock binding draws with (mock_label, aug.seed).
Json run_recognition_document(const StateSpec& spec,
                              std::span<const std::uint8_t> image_bytes,
                              const BackendBinding& backend,
                              const std::string& mock_label,
                              const AugmentConfig& aug,
                              const AggregationConfig& agg);

}  // namespace vqastate
