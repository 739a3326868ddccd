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

#include <condition_variable>
#include <mutex>
#include <sstream>

#include "loopback.hpp"
#include "support.hpp"
#include "vqastate/cli.hpp"
#include "vqastate/config.hpp"
#include "vqastate/service.hpp"

using namespace vqastate;

namespace {

std::shared_ptr<const MockRuleSet> rules(const std::string& name) {
  return std::make_shared<const MockRuleSet>(
      load_mock_rules(test::data_path("mock/" + name + ".json")));
}

ServiceOptions mock_options(const std::string& name) {
  ServiceOptions o;
  o.backend = BackendBinding::mock(rules(name));
  o.specs = load_spec_dir(test::data_path("specs"));
  return o;
}

std::string image_b64(const std::string& rel = "corpus/door_open_1.png") {
  return base64_encode(read_file_bytes(test::data_path(rel)));
}

}  // namespace

TEST_CASE("recognize handler") {
  Service svc(mock_options("door_perfect"));
  auto r = svc.recognize(
      {{"spec_id", "door"}, {"image_b64", image_b64()}, {"mock_label", "door=positive"}});
  CHECK(r.status == 200);
  CHECK(r.body["decision"] == "positive");
  CHECK(r.body["p_positive"] == 1.0);

  r = svc.recognize({{"spec_id", "door"},
                     {"image_b64", image_b64()},
                     {"mock_label", "door=negative"},
                     {"overrides", {{"samples", 2}}}});
  CHECK(r.body["decision"] == "negative");
  CHECK(r.body["records"].size() == 32);

  // No rule matches: every answer is "unknown".
  r = svc.recognize({{"spec_id", "door"}, {"image_b64", image_b64()}});
  CHECK(r.status == 200);
  CHECK(r.body["decision"] == "indeterminate");

  r = svc.recognize({{"spec_id", "sink"}, {"image_b64", image_b64()}});
  CHECK(r.status == 404);

  r = svc.recognize({{"inline_spec", to_json(test::door_spec())},
                     {"image_b64", image_b64()},
                     {"mock_label", "door=positive"}});
  CHECK(r.status == 200);
  CHECK(r.body["decision"] == "positive");
}

TEST_CASE("recognize validation") {
  Service svc(mock_options("door_perfect"));
  auto field_of = [](const ApiResponse& r) {
    return r.body["issues"].at(0)["field"].get<std::string>();
  };
  auto r = svc.recognize({{"spec_id", "door"}, {"image_b64", "@@@"}});
  CHECK(r.status == 422);
  CHECK(field_of(r) == "image_b64");

  r = svc.recognize({{"spec_id", "door"}, {"image_b64", base64_encode(std::vector<std::uint8_t>{1, 2, 3})}});
  CHECK(r.status == 422);
  CHECK(field_of(r) == "image_b64");

  r = svc.recognize({{"image_b64", image_b64()}});
  CHECK(r.status == 422);
  CHECK(field_of(r) == "spec_id");

  r = svc.recognize({{"spec_id", "door"},
                     {"image_b64", image_b64()},
                     {"overrides", {{"threshold", 1.5}}}});
  CHECK(r.status == 422);
  CHECK(field_of(r) == "overrides.threshold");

  r = svc.recognize({{"inline_spec", {{"id", "x"}}}, {"image_b64", image_b64()}});
  CHECK(r.status == 422);
  CHECK(field_of(r).rfind("inline_spec.", 0) == 0);

  r = svc.recognize({{"spec_id", "door"}, {"image_b64", image_b64()}, {"extra", 1}});
  CHECK(r.status == 422);
}

TEST_CASE("spec CRUD") {
  Service svc(mock_options("door_perfect"));
  const auto n = svc.list_specs().body["specs"].size();
  CHECK(svc.get_spec("door").body["id"] == "door");
  CHECK(svc.get_spec("sink").status == 404);

  auto f = test::door_spec().fields();
  f.id = "gate";
  f.concept_wordings = {"gate"};
  CHECK(svc.put_spec("gate", to_json(StateSpec(f))).status == 201);
  CHECK(svc.put_spec("gate", to_json(StateSpec(f))).status == 200);
  CHECK(svc.list_specs().body["specs"].size() == n + 1);

  auto bad = to_json(StateSpec(f));
  bad["positive_expression"] = "";
  const auto r = svc.put_spec("gate", bad);
  CHECK(r.status == 422);
  CHECK(!r.body["issues"].empty());
  CHECK(svc.put_spec("other", to_json(StateSpec(f))).status == 422);

  CHECK(svc.delete_spec("gate").status == 200);
  CHECK(svc.delete_spec("gate").status == 404);
  CHECK(svc.get_spec("gate").status == 404);
}

TEST_CASE("caption handler") {
  Service svc(mock_options("caption_display"));
  auto r = svc.caption({{"image_b64", image_b64()}});
  CHECK(r.status == 200);
  CHECK(r.body["caption"] == "a computer monitor sitting on top of a desk");
  CHECK(r.body["candidates"][1] == "monitor");

  Service vqa(mock_options("vqa_only"));
  r = vqa.caption({{"image_b64", image_b64()}});
  CHECK(r.status == 501);
  CHECK(r.body["error"].get<std::string>().find("caption unsupported") !=
        std::string::npos);
}

TEST_CASE("backend failures map to gateway statuses") {
  auto with = [](std::function<std::string(const BackendRequest&)> fn) {
    ServiceOptions o;
    o.backend = BackendBinding::live(std::make_shared<test::FnBackend>(std::move(fn)));
    o.specs = {test::door_spec()};
    return o;
  };
  const Json body{{"spec_id", "door"}, {"image_b64", image_b64()}};
  Service down(with([](const BackendRequest&) -> std::string {
    throw TransportError("refused");
  }));
  // Every request failed in transport: no votes, so indeterminate.
  CHECK(down.recognize(body).body["decision"] == "indeterminate");
  Service garbled(with([](const BackendRequest&) -> std::string {
    throw ProtocolError("not json");
  }));
  CHECK(garbled.recognize(body).status == 502);
  Service erroring(with([](const BackendRequest&) -> std::string {
    throw BackendError("boom", 500);
  }));
  CHECK(erroring.recognize(body).status == 502);
  Service blind(with([](const BackendRequest&) -> std::string {
    throw TransportError("refused");
  }));
  CHECK(blind.caption({{"image_b64", image_b64()}}).status == 503);
}

TEST_CASE("evaluation jobs") {
  Service svc(mock_options("door_perfect"));
  const auto manifest = test::data_path("corpus/manifest.json");
  auto r = svc.start_evaluation({{"corpus_ref", manifest}, {"spec_ids", {"door"}}});
  REQUIRE(r.status == 202);
  const auto id = r.body["report_id"].get<std::string>();
  svc.wait_for_jobs();
  r = svc.get_report(id);
  CHECK(r.status == 200);
  const auto report = report_from_json(r.body);
  CHECK(report.specs.at(0).decisions_correct == 4);

  CHECK(svc.get_report("r999999").status == 404);
  CHECK(svc.start_evaluation({{"corpus_ref", manifest}, {"spec_ids", {"sink"}}}).status ==
        422);
  CHECK(svc.start_evaluation({{"corpus_ref", "/nope/manifest.json"}}).status == 404);

  r = svc.start_evaluation({{"corpus_ref", manifest}, {"pair", {"door", "display"}}});
  REQUIRE(r.status == 202);
  svc.wait_for_jobs();
  CHECK(svc.get_report(r.body["report_id"].get<std::string>()).status == 200);
}

TEST_CASE("a running evaluation reports 202 with progress") {
  std::mutex mu;
  std::condition_variable cv;
  bool release = false;
  ServiceOptions o;
  o.backend = BackendBinding::live(std::make_shared<test::FnBackend>(
      [&](const BackendRequest&) -> std::string {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return release; });
        return "yes";
      }));
  o.specs = {test::door_spec()};
  Service svc(std::move(o));
  auto r = svc.start_evaluation({{"corpus_ref", test::data_path("corpus/manifest.json")}});
  REQUIRE(r.status == 202);
  const auto id = r.body["report_id"].get<std::string>();
  r = svc.get_report(id);
  CHECK(r.status == 202);
  CHECK((r.body["status"] == "queued" || r.body["status"] == "running"));
  const double fraction = r.body["progress"]["fraction"].get<double>();
  CHECK(fraction >= 0.0);
  CHECK(fraction < 1.0);
  {
    std::lock_guard lock(mu);
    release = true;
  }
  cv.notify_all();
  svc.wait_for_jobs();
  CHECK(svc.get_report(id).status == 200);
}

TEST_CASE("history is append-only") {
  Service svc(mock_options("door_perfect"));
  CHECK(svc.history().body["history"].empty());
  svc.recognize({{"spec_id", "door"}, {"image_b64", image_b64()}});
  const auto first = svc.history().body["history"];
  REQUIRE(first.size() == 1);
  CHECK(first[0]["kind"] == "recognize");
  CHECK(first[0]["seq"] == 1);
  svc.delete_spec("water");
  const auto second = svc.history().body["history"];
  REQUIRE(second.size() == 2);
  CHECK(second[0] == first[0]);
  CHECK(second[1]["kind"] == "spec_deleted");
}

TEST_CASE("HTTP routes, auth and malformed bodies") {
  auto o = mock_options("door_perfect");
  o.token = "s3cret";
  Service svc(std::move(o));
  test::Serving serving(svc);
  httplib::Client cli("127.0.0.1", serving.port());

  auto res = cli.Get("/v1/specs");
  REQUIRE(res);
  CHECK(res->status == 401);

  httplib::Headers auth{{"Authorization", "Bearer s3cret"}};
  res = cli.Get("/v1/specs", auth);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["specs"].size() >= 6);

  res = cli.Post("/v1/recognize", auth, "{not json", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);

  res = cli.Get("/v1/specs/sink", auth);
  REQUIRE(res);
  CHECK(res->status == 404);

  const Json body{{"spec_id", "door"}, {"image_b64", image_b64()}, {"mock_label", "door=positive"}};
  res = cli.Post("/v1/recognize", auth, body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body) == svc.recognize(body).body);
}

TEST_CASE("CLI and service produce identical documents") {
  const auto spec = test::data_path("specs/door.json");
  const auto img = test::data_path("corpus/door_closed_1.png");
  const auto mock = test::data_path("mock/door_cells.json");
  std::ostringstream out, err;
  const int code = run_cli({"recognize", "--spec", spec, "--image", img, "--mock", mock,
                            "--mock-label", "door=negative", "--seed", "42", "--json"},
                           out, err, [](const char*) -> const char* { return nullptr; });
  REQUIRE(code <= 2);

  ServiceOptions o;
  o.backend = BackendBinding::mock(rules("door_cells"));
  o.specs = {load_spec_file(spec)};
  Service svc(std::move(o));
  test::Serving serving(svc);
  httplib::Client cli("127.0.0.1", serving.port());
  const Json body{{"spec_id", "door"},
                  {"image_b64", base64_encode(read_file_bytes(img))},
                  {"mock_label", "door=negative"},
                  {"overrides", {{"seed", 42}}}};
  auto res = cli.Post("/v1/recognize", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).dump() == Json::parse(out.str()).dump());
}

TEST_CASE("mock answer server speaks the wire protocol") {
  MockAnswerServer mock(rules("door_perfect"), "door=positive", 1);
  const auto png = image_b64();
  auto r = mock.answer({{"image_b64", png}, {"question", "Is the door open?"}, {"kind", "vqa"}});
  CHECK(r.status == 200);
  CHECK(r.body["answer"] == "yes");
  CHECK(mock.answer({{"image_b64", png}, {"kind", "vqa"}}).status == 400);
  CHECK(mock.answer({{"image_b64", png}, {"question", "q"}, {"kind", "poem"}}).status == 400);

  MockAnswerServer vqa_only(rules("vqa_only"), "", 1);
  CHECK(vqa_only.answer({{"image_b64", png}, {"kind", "caption"}}).status == 501);

  // End to end: the HTTP backend against the mock server.
  test::Serving serving(mock);
  ServiceOptions o;
  HttpBackendConfig cfg;
  cfg.base_url = serving.url();
  o.backend = BackendBinding::live(std::make_shared<HttpBackend>(cfg));
  o.specs = {test::door_spec()};
  Service svc(std::move(o));
  r = svc.recognize({{"spec_id", "door"}, {"image_b64", png}, {"overrides", {{"samples", 2}}}});
  CHECK(r.status == 200);
  CHECK(r.body["decision"] == "positive");
}
