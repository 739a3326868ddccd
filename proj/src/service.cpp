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

#include "vqastate/service.hpp"

#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>

#include "json_util.hpp"
#include "vqastate/question_engine.hpp"
#include "vqastate/random.hpp"

namespace vqastate {

namespace {

Json error_body(const std::string& message) { return Json{{"error", message}}; }

Json issues_body(const std::vector<FieldIssue>& issues) {
  Json list = Json::array();
  for (const auto& i : issues)
    list.push_back(Json{{"field", i.field}, {"message", i.message}});
  return Json{{"error", "validation failed"}, {"issues", list}};
}

ApiResponse validation_response(const ValidationError& e) {
  return {422, issues_body(e.issues())};
}

// Maps backend failures onto gateway statuses. A capability the backend does
// not offer is passed through as 501.
ApiResponse backend_failure(const std::exception& e) {
  if (const auto* b = dynamic_cast<const BackendError*>(&e))
    if (b->status() == 501) return {501, error_body(b->what())};
  if (dynamic_cast<const TransportError*>(&e))
    return {503, error_body(e.what())};
  return {502, error_body(e.what())};
}

// Plain SO_REUSEADDR: the library default also sets SO_REUSEPORT, which lets a
// second process bind a port that is already in use.
void reuse_addr_only(socket_t sock) {
  int yes = 1;
  ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
}

std::vector<std::uint8_t> decode_image_field(const std::string& b64) {
  try {
    return base64_decode(b64);
  } catch (const Error&) {
    throw ValidationError("image_b64", "not valid base64");
  }
}

void apply_overrides(const Json* j, AugmentConfig& aug, AggregationConfig& agg) {
  if (!j) return;
  detail::Reader r(*j, "overrides");
  if (auto v = r.optional_uint("samples")) aug.n_variants = *v;
  if (auto v = r.optional_uint("seed")) aug.seed = *v;
  if (auto v = r.optional_number("magnitude")) aug.magnitude = *v;
  if (auto v = r.optional_bool("per_pixel")) aug.per_pixel = *v;
  if (auto v = r.optional_number("threshold")) agg.threshold = *v;
  if (auto v = r.optional_enum<AggregationMode>("aggregation_mode",
                                                parse_aggregation_mode))
    agg.aggregation_mode = *v;
  if (auto v = r.optional_uint("min_valid")) agg.min_valid = *v;
  r.reject_unknown();
  r.finish();
  try {
    aug.validate();
    agg.validate();
  } catch (const ValidationError& e) {
    std::vector<FieldIssue> issues;
    for (const auto& i : e.issues())
      issues.push_back({"overrides." + i.field, i.message});
    throw ValidationError(std::move(issues));
  }
}

Json parse_body(const std::string& text) {
  if (text.empty()) return Json::object();
  return Json::parse(text);
}

void write_response(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

// JSON parse errors become 400 before the handler runs.
template <typename Fn>
httplib::Server::Handler json_route(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = parse_body(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      write_response(res, {400, error_body(std::string("invalid JSON: ") + e.what())});
      return;
    }
    write_response(res, fn(req, body));
  };
}

void install_auth(httplib::Server& server, const std::string& token) {
  if (token.empty()) return;
  server.set_pre_routing_handler(
      [token](const httplib::Request& req, httplib::Response& res) {
        if (req.path.rfind("/v1/", 0) != 0)
          return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + token)
          return httplib::Server::HandlerResponse::Unhandled;
        write_response(res, {401, error_body("missing or invalid bearer token")});
        return httplib::Server::HandlerResponse::Handled;
      });
}

}  // namespace

std::optional<std::pair<std::string, int>> parse_listen_address(
    const std::string& address) {
  std::string host = "127.0.0.1";
  std::string port_text = address;
  if (const auto colon = address.rfind(':'); colon != std::string::npos) {
    host = address.substr(0, colon);
    port_text = address.substr(colon + 1);
    if (host.empty()) return std::nullopt;
  }
  int port = 0;
  const char* end = port_text.data() + port_text.size();
  auto [ptr, ec] = std::from_chars(port_text.data(), end, port);
  if (port_text.empty() || ec != std::errc{} || ptr != end || port < 0 ||
      port > 65535)
    return std::nullopt;
  return std::make_pair(host, port);
}

Json run_recognition_document(const StateSpec& spec,
                              std::span<const std::uint8_t> image_bytes,
                              const BackendBinding& backend,
                              const std::string& mock_label,
                              const AugmentConfig& aug,
                              const AggregationConfig& agg) {
  auto client = backend.for_image(mock_label, aug.seed);
  try {
    return recognition_document(recognize(spec, image_bytes, *client, aug, agg));
  } catch (const IndeterminateError& e) {
    return recognition_document(e);
  }
}

// ---------------------------------------------------------------------------

namespace {

enum class JobStatus { Queued, Running, Done, Failed };

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "failed";
}

struct Job {
  JobStatus status = JobStatus::Queued;
  std::size_t done = 0;
  std::size_t total = 0;
  Json report;
  std::string error;
};

}  // namespace

struct Service::Impl {
  ServiceOptions options;

  mutable std::shared_mutex specs_mu;
  std::map<std::string, StateSpec> specs;

  mutable std::mutex history_mu;
  Json history = Json::array();

  mutable std::mutex jobs_mu;
  std::condition_variable jobs_cv;
  std::map<std::string, Job> jobs;
  std::map<std::string, std::shared_ptr<std::mutex>> corpus_locks;
  std::size_t next_report = 1;
  std::size_t active_jobs = 0;
  std::vector<std::jthread> workers;

  httplib::Server server;

  void record(Json entry) {
    std::lock_guard lock(history_mu);
    entry["seq"] = history.size() + 1;
    history.push_back(std::move(entry));
  }

  std::optional<StateSpec> find_spec(const std::string& id) const {
    std::shared_lock lock(specs_mu);
    auto it = specs.find(id);
    if (it == specs.end()) return std::nullopt;
    return it->second;
  }

  std::shared_ptr<std::mutex> corpus_lock(const std::string& corpus) {
    auto& m = corpus_locks[corpus];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }

  void update(const std::string& id, auto&& fn) {
    std::lock_guard lock(jobs_mu);
    fn(jobs[id]);
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  for (auto& s : impl_->options.specs) impl_->specs.emplace(s.id(), s);
  impl_->options.specs.clear();

  auto& srv = impl_->server;
  srv.set_socket_options(reuse_addr_only);
  install_auth(srv, impl_->options.token);

  srv.Post("/v1/recognize", json_route([this](const auto&, const Json& b) {
             return recognize(b);
           }));
  srv.Get("/v1/specs", [this](const httplib::Request&, httplib::Response& res) {
    write_response(res, list_specs());
  });
  srv.Get("/v1/specs/:id", [this](const httplib::Request& req,
                                  httplib::Response& res) {
    write_response(res, get_spec(req.path_params.at("id")));
  });
  srv.Put("/v1/specs/:id", json_route([this](const httplib::Request& req,
                                             const Json& b) {
            return put_spec(req.path_params.at("id"), b);
          }));
  srv.Delete("/v1/specs/:id", [this](const httplib::Request& req,
                                     httplib::Response& res) {
    write_response(res, delete_spec(req.path_params.at("id")));
  });
  srv.Post("/v1/caption", json_route([this](const auto&, const Json& b) {
             return caption(b);
           }));
  srv.Post("/v1/evaluate", json_route([this](const auto&, const Json& b) {
             return start_evaluation(b);
           }));
  srv.Get("/v1/reports/:id", [this](const httplib::Request& req,
                                    httplib::Response& res) {
    write_response(res, get_report(req.path_params.at("id")));
  });
  srv.Get("/v1/history", [this](const httplib::Request&, httplib::Response& res) {
    write_response(res, history());
  });
  if (!impl_->options.static_dir.empty())
    srv.set_mount_point("/", impl_->options.static_dir);
}

Service::~Service() {
  impl_->server.stop();
  // Workers reference impl_, so join them before it goes away.
  std::vector<std::jthread> workers;
  {
    std::lock_guard lock(impl_->jobs_mu);
    workers.swap(impl_->workers);
  }
  workers.clear();
}

ApiResponse Service::recognize(const Json& body) {
  try {
    detail::Reader r(body);
    auto spec_id = r.optional_string("spec_id");
    const Json* inline_spec = r.child("inline_spec");
    const std::string image_b64 = r.required_string("image_b64");
    const Json* overrides = r.child("overrides");
    const std::string label = r.optional_string("mock_label").value_or("");
    if (spec_id && inline_spec)
      r.issue("spec_id", "give either spec_id or inline_spec, not both");
    if (!spec_id && !inline_spec)
      r.issue("spec_id", "one of spec_id or inline_spec is required");
    r.reject_unknown();
    r.finish();

    std::optional<StateSpec> spec;
    if (inline_spec) {
      try {
        spec = spec_from_json(*inline_spec);
      } catch (const ValidationError& e) {
        std::vector<FieldIssue> issues;
        for (const auto& i : e.issues())
          issues.push_back({"inline_spec." + i.field, i.message});
        throw ValidationError(std::move(issues));
      }
    } else {
      spec = impl_->find_spec(*spec_id);
      if (!spec) return {404, error_body("unknown spec '" + *spec_id + "'")};
    }

    AugmentConfig aug = impl_->options.augment;
    AggregationConfig agg = impl_->options.aggregation;
    apply_overrides(overrides, aug, agg);
    const auto bytes = decode_image_field(image_b64);

    Json doc;
    try {
      doc = run_recognition_document(*spec, bytes, impl_->options.backend,
                                     label, aug, agg);
    } catch (const DecodeError& e) {
      throw ValidationError("image_b64", e.what());
    }
    impl_->record(Json{{"kind", "recognize"},
                       {"spec_id", spec->id()},
                       {"decision", doc["decision"]},
                       {"p_positive", doc["p_positive"]}});
    return {200, std::move(doc)};
  } catch (const ValidationError& e) {
    return validation_response(e);
  } catch (const TemplateError& e) {
    return {422, error_body(e.what())};
  } catch (const TransportError& e) {
    return backend_failure(e);
  } catch (const ProtocolError& e) {
    return backend_failure(e);
  } catch (const BackendError& e) {
    return backend_failure(e);
  }
}

ApiResponse Service::list_specs() const {
  Json list = Json::array();
  std::shared_lock lock(impl_->specs_mu);
  for (const auto& [id, spec] : impl_->specs) list.push_back(to_json(spec));
  return {200, Json{{"specs", list}}};
}

ApiResponse Service::get_spec(const std::string& id) const {
  auto spec = impl_->find_spec(id);
  if (!spec) return {404, error_body("unknown spec '" + id + "'")};
  return {200, to_json(*spec)};
}

ApiResponse Service::put_spec(const std::string& id, const Json& body) {
  if (!body.is_object())
    return validation_response(ValidationError("$", "expected an object"));
  Json j = body;
  if (!j.contains("id")) j["id"] = id;
  if (!j["id"].is_string() || j["id"].get<std::string>() != id)
    return validation_response(
        ValidationError("id", "must match the id in the path"));
  try {
    StateSpec spec = spec_from_json(j);
    bool created = false;
    {
      std::unique_lock lock(impl_->specs_mu);
      created = impl_->specs.insert_or_assign(id, spec).second;
    }
    impl_->record(Json{{"kind", created ? "spec_created" : "spec_replaced"},
                       {"spec_id", id}});
    return {created ? 201 : 200, to_json(spec)};
  } catch (const ValidationError& e) {
    return validation_response(e);
  }
}

ApiResponse Service::delete_spec(const std::string& id) {
  {
    std::unique_lock lock(impl_->specs_mu);
    if (impl_->specs.erase(id) == 0)
      return {404, error_body("unknown spec '" + id + "'")};
  }
  impl_->record(Json{{"kind", "spec_deleted"}, {"spec_id", id}});
  return {200, Json{{"deleted", id}}};
}

ApiResponse Service::caption(const Json& body) {
  try {
    detail::Reader r(body);
    const std::string image_b64 = r.required_string("image_b64");
    const std::string label = r.optional_string("mock_label").value_or("");
    r.reject_unknown();
    r.finish();

    const auto bytes = decode_image_field(image_b64);
    auto image = [&] {
      try {
        return decode_image(bytes);
      } catch (const DecodeError& e) {
        throw ValidationError("image_b64", e.what());
      }
    }();
    auto client = impl_->options.backend.for_image(
        label, impl_->options.augment.seed);
    const std::string text = client->caption(image);
    WordingSuggestion s;
    try {
      s = suggest_wordings(text);
    } catch (const ValidationError&) {
      return {502, error_body("backend returned an empty caption")};
    }
    impl_->record(Json{{"kind", "caption"}, {"caption", s.caption}});
    return {200, Json{{"caption", s.caption}, {"candidates", s.candidates}}};
  } catch (const ValidationError& e) {
    return validation_response(e);
  } catch (const TransportError& e) {
    return backend_failure(e);
  } catch (const ProtocolError& e) {
    return backend_failure(e);
  } catch (const BackendError& e) {
    return backend_failure(e);
  }
}

ApiResponse Service::start_evaluation(const Json& body) {
  CorpusManifest manifest;
  std::vector<StateSpec> specs;
  std::vector<std::string> spec_ids;
  std::optional<std::pair<std::string, std::string>> pair;
  EvaluationOptions opts;
  opts.augment = impl_->options.augment;
  opts.aggregation = impl_->options.aggregation;
  std::string corpus_ref;
  try {
    detail::Reader r(body);
    corpus_ref = r.required_string("corpus_ref");
    spec_ids = r.optional_string_list("spec_ids").value_or(
        std::vector<std::string>{});
    auto pair_list = r.optional_string_list("pair");
    const Json* overrides = r.child("overrides");
    if (pair_list && pair_list->size() != 2)
      r.issue("pair", "expected exactly two spec ids");
    r.reject_unknown();
    r.finish();
    apply_overrides(overrides, opts.augment, opts.aggregation);
    if (pair_list) pair = std::make_pair((*pair_list)[0], (*pair_list)[1]);

    try {
      manifest = load_manifest(corpus_ref);
    } catch (const IoError& e) {
      return {404, error_body(e.what())};
    } catch (const ValidationError& e) {
      std::vector<FieldIssue> issues;
      for (const auto& i : e.issues())
        issues.push_back({"corpus_ref: " + i.field, i.message});
      throw ValidationError(std::move(issues));
    }

    {
      std::shared_lock lock(impl_->specs_mu);
      for (const auto& [id, spec] : impl_->specs) specs.push_back(spec);
    }
    std::vector<FieldIssue> issues;
    auto known = [&](const std::string& id) {
      return std::any_of(specs.begin(), specs.end(),
                         [&](const StateSpec& s) { return s.id() == id; });
    };
    for (const auto& id : spec_ids)
      if (!known(id)) issues.push_back({"spec_ids", "unknown spec '" + id + "'"});
    if (pair)
      for (const auto& id : {pair->first, pair->second})
        if (!known(id)) issues.push_back({"pair", "unknown spec '" + id + "'"});
    if (!issues.empty()) throw ValidationError(std::move(issues));
    opts.spec_ids = spec_ids;
  } catch (const ValidationError& e) {
    return validation_response(e);
  }

  std::string report_id;
  std::shared_ptr<std::mutex> corpus_mu;
  {
    std::lock_guard lock(impl_->jobs_mu);
    char buf[16];
    std::snprintf(buf, sizeof buf, "r%06zu", impl_->next_report++);
    report_id = buf;
    impl_->jobs[report_id] = Job{};
    corpus_mu = impl_->corpus_lock(corpus_ref);
    ++impl_->active_jobs;
  }
  impl_->record(Json{{"kind", "evaluate"},
                     {"report_id", report_id},
                     {"corpus_ref", corpus_ref},
                     {"spec_ids", spec_ids}});

  Impl* impl = impl_.get();
  auto run = [impl, report_id, corpus_mu, manifest = std::move(manifest),
              specs = std::move(specs), pair, opts]() mutable {
    // One evaluation per corpus at a time; later requests wait queued.
    std::lock_guard corpus_lock(*corpus_mu);
    impl->update(report_id, [](Job& j) { j.status = JobStatus::Running; });
    opts.progress = [impl, &report_id](std::size_t done, std::size_t total) {
      impl->update(report_id, [&](Job& j) {
        j.done = done;
        j.total = total;
      });
    };
    Json report;
    std::string error;
    try {
      if (pair) {
        auto find = [&](const std::string& id) -> const StateSpec& {
          return *std::find_if(specs.begin(), specs.end(),
                               [&](const StateSpec& s) { return s.id() == id; });
        };
        report = to_json(multi_spec_scenario(manifest, find(pair->first),
                                             find(pair->second),
                                             impl->options.backend, opts));
      } else {
        report = to_json(
            evaluate_corpus(manifest, specs, impl->options.backend, opts));
      }
    } catch (const std::exception& e) {
      error = e.what();
    }
    {
      std::lock_guard lock(impl->jobs_mu);
      Job& j = impl->jobs[report_id];
      if (error.empty()) {
        j.status = JobStatus::Done;
        j.report = std::move(report);
      } else {
        j.status = JobStatus::Failed;
        j.error = error;
      }
      --impl->active_jobs;
    }
    impl->jobs_cv.notify_all();
  };

  {
    std::lock_guard lock(impl_->jobs_mu);
    impl_->workers.emplace_back(std::move(run));
  }
  return {202, Json{{"report_id", report_id}, {"status", "queued"}}};
}

ApiResponse Service::get_report(const std::string& id) const {
  std::lock_guard lock(impl_->jobs_mu);
  auto it = impl_->jobs.find(id);
  if (it == impl_->jobs.end())
    return {404, error_body("unknown report '" + id + "'")};
  const Job& j = it->second;
  switch (j.status) {
    case JobStatus::Done:
      return {200, j.report};
    case JobStatus::Failed:
      return {500, Json{{"report_id", id},
                        {"status", std::string(to_string(j.status))},
                        {"error", j.error}}};
    default:
      return {202, Json{{"report_id", id},
                        {"status", std::string(to_string(j.status))},
                        {"progress",
                         {{"done", j.done},
                          {"total", j.total},
                          {"fraction", j.total ? static_cast<double>(j.done) /
                                                     static_cast<double>(j.total)
                                               : 0.0}}}}};
  }
}

ApiResponse Service::history() const {
  std::lock_guard lock(impl_->history_mu);
  return {200, Json{{"history", impl_->history}}};
}

void Service::wait_for_jobs() {
  std::unique_lock lock(impl_->jobs_mu);
  impl_->jobs_cv.wait(lock, [&] { return impl_->active_jobs == 0; });
}

bool Service::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

int Service::bind_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

void Service::listen() { impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

// ---------------------------------------------------------------------------

struct MockAnswerServer::Impl {
  std::shared_ptr<const MockRuleSet> rules;
  std::string label;
  std::uint64_t seed = 0;
  httplib::Server server;
};

MockAnswerServer::MockAnswerServer(std::shared_ptr<const MockRuleSet> rules,
                                   std::string label, std::uint64_t seed)
    : impl_(std::make_unique<Impl>()) {
  impl_->rules = std::move(rules);
  impl_->label = std::move(label);
  impl_->seed = seed;
  impl_->server.set_socket_options(reuse_addr_only);
  impl_->server.Post("/v1/answer", json_route([this](const auto&, const Json& b) {
                       return answer(b);
                     }));
}

MockAnswerServer::~MockAnswerServer() { impl_->server.stop(); }

ApiResponse MockAnswerServer::answer(const Json& body) const {
  try {
    detail::Reader r(body);
    const std::string image_b64 = r.required_string("image_b64");
    const std::string question = r.optional_string("question").value_or("");
    const RequestKind kind =
        r.optional_enum<RequestKind>("kind", parse_request_kind)
            .value_or(RequestKind::Vqa);
    r.reject_unknown();
    r.finish();
    if (kind == RequestKind::Vqa && question.empty())
      throw ValidationError("question", "required for vqa requests");

    const auto bytes = decode_image_field(image_b64);
    try {
      (void)decode_image(bytes);
    } catch (const DecodeError& e) {
      throw ValidationError("image_b64", e.what());
    }
    const MockRuleSet& rules = *impl_->rules;
    if (kind == RequestKind::Vqa && !rules.supports_vqa)
      return {501, error_body("vqa unsupported")};
    if (kind == RequestKind::Caption && !rules.supports_caption)
      return {501, error_body("caption unsupported")};

    const std::string text =
        mock_answer(rules, impl_->label, question, impl_->seed,
                    fnv1a64(image_b64), kind);
    return {200, Json{{"answer", text}}};
  } catch (const ValidationError& e) {
    return {400, issues_body(e.issues())};
  }
}

bool MockAnswerServer::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

int MockAnswerServer::bind_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

void MockAnswerServer::listen() { impl_->server.listen_after_bind(); }
void MockAnswerServer::stop() { impl_->server.stop(); }
void MockAnswerServer::wait_until_ready() const {
  impl_->server.wait_until_ready();
}

}  // namespace vqastate
