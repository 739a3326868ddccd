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

#include <doctest.h>

#include <chrono>
#include <map>

#include "loopback.hpp"
#include "support.hpp"
#include "vqastate/backend.hpp"
#include "vqastate/service.hpp"

using namespace vqastate;

namespace {

MockRule rule(std::string label, std::string question,
              std::vector<std::pair<std::string, double>> dist, int priority = 0,
              RequestKind kind = RequestKind::Vqa) {
  MockRule r;
  r.image_label = std::move(label);
  r.question_pattern = std::move(question);
  r.distribution = std::move(dist);
  r.priority = priority;
  r.kind = kind;
  return r;
}

}  // namespace

TEST_CASE("pattern semantics") {
  CHECK(pattern_matches("*", ""));
  CHECK(pattern_matches("*open?", "Is the door open?"));
  CHECK_FALSE(pattern_matches("*open", "Is the door open?"));
  CHECK(pattern_matches("Is *", "Is the door open?"));
  CHECK(pattern_matches("*door=positive*", "door=positive,sink=negative"));
  CHECK_FALSE(pattern_matches("*door=positive*", "door=negative"));
  // No star: substring match.
  CHECK(pattern_matches("door", "Is the door open?"));
  CHECK_FALSE(pattern_matches("window", "Is the door open?"));
  CHECK(pattern_matches("a*b*c", "aXXbYYc"));
  CHECK_FALSE(pattern_matches("a*b*c", "aXXbYY"));
}

TEST_CASE("rule selection: priority, then file order") {
  MockRuleSet s;
  s.rules = {rule("*", "*", {{"first", 1.0}}),
             rule("*", "*", {{"second", 1.0}}),
             rule("*", "*closed?", {{"closed", 1.0}}, 5),
             rule("*", "*", {{"caption", 1.0}}, 9, RequestKind::Caption)};
  CHECK(mock_answer(s, "x", "Is the door open?", 0, 0) == "first");
  CHECK(mock_answer(s, "x", "Is the door closed?", 0, 0) == "closed");
  CHECK(mock_answer(s, "x", "", 0, 0, RequestKind::Caption) == "caption");

  MockRuleSet empty;
  CHECK(mock_answer(empty, "x", "q?", 0, 0) == "unknown");
  empty.default_answer = "no idea";
  CHECK(mock_answer(empty, "x", "q?", 0, 0) == "no idea");
}

TEST_CASE("mock draws are deterministic and keyed") {
  MockRuleSet s;
  s.rules = {rule("*", "*", {{"yes", 0.5}, {"no", 0.5}})};
  std::vector<std::string> a, b;
  for (std::uint64_t i = 0; i < 64; ++i) {
    a.push_back(mock_answer(s, "door=positive", "Is a door open?", 11, i));
    b.push_back(mock_answer(s, "door=positive", "Is a door open?", 11, i));
  }
  CHECK(a == b);
  std::vector<std::string> c;
  for (std::uint64_t i = 0; i < 64; ++i)
    c.push_back(mock_answer(s, "door=positive", "Is a door open?", 12, i));
  CHECK(a != c);
}

TEST_CASE("mock draw frequencies follow the distribution") {
  MockRuleSet s;
  s.rules = {rule("*", "*", {{"yes", 0.983}, {"no", 0.017}})};
  int yes = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i)
    yes += mock_answer(s, "l", "q?", 3, static_cast<std::uint64_t>(i)) == "yes";
  CHECK(static_cast<double>(yes) / n == doctest::Approx(0.983).epsilon(0.02));
}

TEST_CASE("rule validation") {
  MockRuleSet s;
  s.rules = {rule("*", "*", {{"yes", 0.5}, {"no", 0.4}})};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.rules = {rule("*", "*", {})};
  CHECK_THROWS_AS(s.validate(), ValidationError);

  CHECK_THROWS_AS((void)mock_rules_from_json(
                      Json::parse(R"({"rules":[{"distribution":{"yes":1},"color":1}]})")),
                  ValidationError);
  const auto parsed = mock_rules_from_json(Json::parse(
      R"({"capabilities":["vqa"],"rules":[{"question_pattern":"*open?","distribution":{"yes":1}}]})"));
  CHECK(parsed.supports_vqa);
  CHECK_FALSE(parsed.supports_caption);
  CHECK(mock_rules_from_json(to_json(parsed)) == parsed);
}

TEST_CASE("mock backend capability and draw index") {
  auto rules = std::make_shared<MockRuleSet>();
  rules->rules = {rule("*", "*", {{"yes", 0.5}, {"no", 0.5}})};
  rules->supports_caption = false;
  MockBackend b(rules, "lbl", 4);
  const auto img = test::solid(2, 2, 0.2f, 0.2f, 0.2f);
  CHECK(b.ask(BackendRequest::vqa(img, "Is a door open?")) ==
        mock_answer(*rules, "lbl", "Is a door open?", 4, 0));
  try {
    (void)b.caption(img);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()) == "caption unsupported");
    CHECK(e.status() == 501);
    CHECK_FALSE(e.retryable());
  }
}

TEST_CASE("binding hands out label-specific mocks") {
  auto rules = std::make_shared<MockRuleSet>();
  rules->rules = {rule("*=positive*", "*", {{"yes", 1.0}}),
                  rule("*=negative*", "*", {{"no", 1.0}})};
  const auto binding = BackendBinding::mock(rules);
  CHECK(binding.is_mock());
  const auto img = test::solid(1, 1, 0, 0, 0);
  CHECK(binding.for_image("door=positive", 0)->ask(BackendRequest::vqa(img, "q?")) == "yes");
  CHECK(binding.for_image("door=negative", 0)->ask(BackendRequest::vqa(img, "q?")) == "no");
}

TEST_CASE("HTTP backend wire contract") {
  test::Loopback lb;
  Json seen;
  std::string auth;
  lb.server().Post("/v1/answer", [&](const httplib::Request& req,
                                     httplib::Response& res) {
    seen = Json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"answer":"Yes."})", "application/json");
  });
  lb.start();

  HttpBackendConfig cfg;
  cfg.base_url = lb.url() + "/";
  cfg.auth_token = "s3cret";
  HttpBackend backend(cfg);
  const auto img = test::solid(3, 2, 1, 0, 0);
  CHECK(backend.ask(BackendRequest::vqa(img, "Is the door open?")) == "Yes.");
  CHECK(seen["question"] == "Is the door open?");
  CHECK(seen["kind"] == "vqa");
  CHECK(auth == "Bearer s3cret");
  const auto bytes = base64_decode(seen["image_b64"].get<std::string>());
  CHECK(decode_image(bytes) == img);
}

TEST_CASE("HTTP backend error mapping") {
  test::Loopback lb;
  lb.server().Post("/v1/answer", [](const httplib::Request& req,
                                    httplib::Response& res) {
    const auto q = Json::parse(req.body)["question"].get<std::string>();
    if (q == "500?") {
      res.status = 500;
      res.set_content(R"({"error":"model crashed"})", "application/json");
    } else if (q == "429?") {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else if (q == "400?") {
      res.status = 400;
      res.set_content(R"({"error":"bad"})", "application/json");
    } else if (q == "html?") {
      res.set_content("<html>", "text/html");
    } else if (q == "noanswer?") {
      res.set_content(R"({"text":"yes"})", "application/json");
    } else if (q == "slow?") {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(R"({"answer":"yes"})", "application/json");
    }
  });
  lb.start();

  HttpBackendConfig cfg;
  cfg.base_url = lb.url();
  cfg.timeout_ms = 200;
  HttpBackend backend(cfg);
  const auto img = test::solid(1, 1, 0, 0, 0);
  auto ask = [&](const char* q) { return backend.ask(BackendRequest::vqa(img, q)); };

  try {
    ask("500?");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 500);
    CHECK(e.retryable());
    CHECK(std::string(e.what()) == "model crashed");
  }
  try {
    ask("429?");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.retryable());
  }
  try {
    ask("400?");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK_FALSE(e.retryable());
  }
  CHECK_THROWS_AS(ask("html?"), ProtocolError);
  CHECK_THROWS_AS(ask("noanswer?"), ProtocolError);
  CHECK_THROWS_AS(ask("slow?"), TransportError);

  const int port = lb.port();
  lb.stop();
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  HttpBackend dead(cfg);
  CHECK_THROWS_AS((void)dead.ask(BackendRequest::vqa(img, "q?")), TransportError);

  cfg.base_url.clear();
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
}

TEST_CASE("mock answer server speaks the wire protocol") {
  auto rules = std::make_shared<MockRuleSet>();
  rules->rules = {rule("*door=positive*", "*open?", {{"yes", 0.7}, {"no", 0.3}})};
  rules->supports_caption = false;
  MockAnswerServer server(rules, "door=positive", 5);
  test::Serving serving(server);

  HttpBackendConfig cfg;
  cfg.base_url = serving.url();
  HttpBackend backend(cfg);
  const auto img = test::noise_image(4, 4, 2);
  const auto first = backend.ask(BackendRequest::vqa(img, "Is the door open?"));
  CHECK((first == "yes" || first == "no"));
  for (int i = 0; i < 3; ++i)
    CHECK(backend.ask(BackendRequest::vqa(img, "Is the door open?")) == first);
  CHECK(backend.ask(BackendRequest::vqa(img, "Is the door red?")) == "unknown");

  try {
    (void)backend.caption(img);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 501);
    CHECK(std::string(e.what()) == "caption unsupported");
  }

  CHECK(server.answer(Json{{"question", "q?"}}).status == 400);
  CHECK(server.answer(Json{{"question", "q?"}, {"image_b64", "AAAA"}}).status == 400);
}
