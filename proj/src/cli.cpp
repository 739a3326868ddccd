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

#include "vqastate/cli.hpp"

#include <signal.h>

#include <CLI11.hpp>
#include <fstream>
#include <optional>
#include <thread>

#include "vqastate/evaluation.hpp"
#include "vqastate/question_engine.hpp"
#include "vqastate/service.hpp"

namespace vqastate {

namespace {

// Flags shared by the subcommands that talk to a backend. Unset flags leave
// the file/environment layers alone.
struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::string> backend_url;
  std::optional<int> timeout_ms;
  std::optional<std::string> auth_token;
  std::optional<std::size_t> max_in_flight;
  std::optional<std::string> mock;
  std::optional<std::string> mock_label;
  std::optional<std::size_t> samples;
  std::optional<double> magnitude;
  std::optional<std::uint64_t> seed;
  bool per_pixel = false;
  std::optional<double> threshold;
  std::optional<std::string> aggregation_mode;
  std::optional<std::uint64_t> min_valid;

  void add_backend(CLI::App* app) {
    app->add_option("--config", config, "Config file (JSON)");
    app->add_option("--backend", backend_url, "Base URL of a /v1/answer server");
    app->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
    app->add_option("--auth-token", auth_token, "Bearer token for the backend");
    app->add_option("--max-in-flight", max_in_flight,
                    "Concurrent backend requests");
    app->add_option("--mock", mock, "Mock rule file; replaces --backend");
    app->add_option("--mock-label", mock_label,
                    "Image label the mock rules match against");
    app->add_option("--seed", seed, "Seed for augmentation and mock draws");
  }

  void add_ensemble(CLI::App* app) {
    app->add_option("--samples", samples, "Image variants per question");
    app->add_option("--magnitude", magnitude, "RGB shift magnitude");
    app->add_flag("--per-pixel", per_pixel, "Draw shifts per pixel");
    app->add_option("--threshold", threshold, "Decision threshold");
    app->add_option("--aggregation-mode", aggregation_mode,
                    "polarity_corrected or literal_yes");
    app->add_option("--min-valid", min_valid,
                    "Valid votes required for a decision");
  }

  CliConfig resolve(const EnvLookup& env) const {
    CliConfig cfg;
    std::string path;
    if (const char* v = env("VQASTATE_CONFIG"); v && *v) path = v;
    if (config) path = *config;
    if (!path.empty()) cfg = load_config_file(path, cfg);
    apply_environment(cfg, env);
    if (backend_url) cfg.backend.base_url = *backend_url;
    if (timeout_ms) cfg.backend.timeout_ms = *timeout_ms;
    if (auth_token) cfg.backend.auth_token = *auth_token;
    if (max_in_flight) cfg.backend.max_in_flight = *max_in_flight;
    if (mock) cfg.mock_rules = *mock;
    if (mock_label) cfg.mock_label = *mock_label;
    if (samples) cfg.augment.n_variants = *samples;
    if (magnitude) cfg.augment.magnitude = *magnitude;
    if (seed) cfg.augment.seed = *seed;
    if (per_pixel) cfg.augment.per_pixel = true;
    if (threshold) cfg.aggregation.threshold = *threshold;
    if (aggregation_mode) {
      auto m = parse_aggregation_mode(*aggregation_mode);
      if (!m)
        throw ConfigError("--aggregation-mode: unknown value '" +
                          *aggregation_mode + "'");
      cfg.aggregation.aggregation_mode = *m;
    }
    if (min_valid) cfg.aggregation.min_valid = *min_valid;
    cfg.validate();
    return cfg;
  }
};

class UsageError : public Error {
 public:
  using Error::Error;
};

BackendBinding make_binding(const CliConfig& cfg) {
  if (!cfg.mock_rules.empty())
    return BackendBinding::mock(
        std::make_shared<const MockRuleSet>(load_mock_rules(cfg.mock_rules)));
  if (cfg.backend.base_url.empty())
    throw UsageError("no backend: pass --backend URL or --mock FILE");
  cfg.backend.validate();
  return BackendBinding::live(std::make_shared<HttpBackend>(cfg.backend));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    if (comma > start) out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::string format_issues(const ValidationError& e) {
  std::string s;
  for (const auto& i : e.issues()) s += "  " + i.field + ": " + i.message + "\n";
  return s;
}

// Blocks SIGINT/SIGTERM and stops `stop` once one arrives. The returned
// thread must be joined after the server returns.
template <typename StopFn>
std::jthread stop_on_signal(StopFn stop) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return std::jthread([set, stop](std::stop_token st) {
    while (!st.stop_requested()) {
      timespec wait{0, 200'000'000};
      if (sigtimedwait(&set, nullptr, &wait) > 0) {
        stop();
        return;
      }
    }
  });
}

// --- subcommands -----------------------------------------------------------

int cmd_recognize(const CommonFlags& flags, const std::string& spec_path,
                  const std::string& image_path, bool json, std::ostream& out,
                  std::ostream& err, const EnvLookup& env) {
  const CliConfig cfg = flags.resolve(env);
  const StateSpec spec = load_spec_file(spec_path);
  const auto bytes = read_file_bytes(image_path);
  const BackendBinding binding = make_binding(cfg);
  const Json doc = run_recognition_document(spec, bytes, binding, cfg.mock_label,
                                            cfg.augment, cfg.aggregation);
  const std::string decision = doc["decision"].get<std::string>();
  if (json) {
    out << doc.dump(2) << "\n";
  } else {
    const Json& c = doc["counts"];
    out << "spec: " << spec.id() << "\n"
        << "decision: " << decision << "\n"
        << "p_positive: " << doc["p_positive"].dump() << "\n"
        << "counts: for_positive=" << c["for_positive"].dump()
        << " for_negative=" << c["for_negative"].dump()
        << " invalid=" << c["invalid"].dump()
        << " transport_failures=" << c["transport_failures"].dump() << "\n";
  }
  if (decision == "positive") return kExitPositive;
  if (decision == "negative") return kExitNegative;
  // No answer at all is an outage, not an undecidable image.
  const Json& c = doc["counts"];
  if (c["transport_failures"].get<std::uint64_t>() > 0 &&
      c["for_positive"].get<std::uint64_t>() + c["for_negative"].get<std::uint64_t>() +
              c["invalid"].get<std::uint64_t>() ==
          0) {
    err << "vqastate: backend unavailable: every request failed\n";
    return kExitUnavailable;
  }
  return kExitIndeterminate;
}

int cmd_questions(const std::string& spec_path, bool json, std::ostream& out) {
  const StateSpec spec = load_spec_file(spec_path);
  const auto questions = expand_questions(spec);
  if (json) {
    Json list = Json::array();
    for (const auto& q : questions) list.push_back(to_json(q));
    out << Json{{"spec_id", spec.id()}, {"questions", list}}.dump(2) << "\n";
    return 0;
  }
  for (const auto& q : questions)
    out << to_string(q.form()) << "\t" << to_string(q.article()) << "\t"
        << to_string(q.polarity()) << "\t" << q.wording_index() << "\t"
        << q.text() << "\n";
  out << questions.size() << " variants\n";
  return 0;
}

int cmd_caption(const CommonFlags& flags, const std::string& image_path,
                bool json, std::ostream& out, const EnvLookup& env) {
  const CliConfig cfg = flags.resolve(env);
  const ImageVariant image = load_image_file(image_path);
  const BackendBinding binding = make_binding(cfg);
  auto client = binding.for_image(cfg.mock_label, cfg.augment.seed);
  const std::string text = client->caption(image);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ProtocolError("backend returned an empty caption");
  const WordingSuggestion s = suggest_wordings(text);
  if (json) {
    out << Json{{"caption", s.caption}, {"candidates", s.candidates}}.dump(2)
        << "\n";
    return 0;
  }
  out << "caption: " << s.caption << "\n" << "candidates:";
  for (const auto& c : s.candidates) out << " " << c;
  out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string corpus;
  std::optional<std::string> specs_dir;
  std::string spec_ids;
  std::string pair;
  std::string out_path;
  bool json = false;
};

int cmd_evaluate(const CommonFlags& flags, const EvaluateArgs& a,
                 std::ostream& out, const EnvLookup& env) {
  CliConfig cfg = flags.resolve(env);
  if (a.specs_dir) cfg.specs_dir = *a.specs_dir;
  if (cfg.specs_dir.empty()) throw UsageError("--specs DIR is required");
  const auto specs = load_spec_dir(cfg.specs_dir);
  const CorpusManifest manifest = load_manifest(a.corpus);
  if (auto issues = validate_manifest(manifest, specs); !issues.empty())
    throw ValidationError(std::move(issues));
  const BackendBinding binding = make_binding(cfg);

  EvaluationOptions opts;
  opts.augment = cfg.augment;
  opts.aggregation = cfg.aggregation;
  opts.spec_ids = split_list(a.spec_ids);

  auto find = [&](const std::string& id) -> const StateSpec& {
    for (const auto& s : specs)
      if (s.id() == id) return s;
    throw ValidationError("spec_ids", "unknown spec '" + id + "'");
  };
  for (const auto& id : opts.spec_ids) (void)find(id);

  Json doc;
  std::string text;
  if (!a.pair.empty()) {
    const auto ids = split_list(a.pair);
    if (ids.size() != 2) throw UsageError("--pair expects two spec ids: a,b");
    const auto report =
        multi_spec_scenario(manifest, find(ids[0]), find(ids[1]), binding, opts);
    doc = to_json(report);
    text = render_joint_text(report);
  } else {
    const auto report = evaluate_corpus(manifest, specs, binding, opts);
    doc = to_json(report);
    text = render_report_text(report, specs);
  }
  if (!a.out_path.empty()) write_file(a.out_path, doc.dump(2) + "\n");
  out << (a.json ? doc.dump(2) + "\n" : text);
  return 0;
}

int cmd_serve(const CommonFlags& flags, std::optional<std::string> listen,
              std::optional<std::string> specs_dir,
              std::optional<std::string> token,
              std::optional<std::string> static_dir, std::ostream& err,
              const EnvLookup& env) {
  CliConfig cfg = flags.resolve(env);
  if (listen) cfg.listen = *listen;
  if (specs_dir) cfg.specs_dir = *specs_dir;
  if (token) cfg.service_token = *token;
  if (static_dir) cfg.static_dir = *static_dir;
  const auto addr = parse_listen_address(cfg.listen);
  if (!addr) throw UsageError("bad listen address '" + cfg.listen + "'");

  ServiceOptions opts;
  opts.backend = make_binding(cfg);
  opts.augment = cfg.augment;
  opts.aggregation = cfg.aggregation;
  if (!cfg.specs_dir.empty()) opts.specs = load_spec_dir(cfg.specs_dir);
  opts.token = cfg.service_token;
  opts.static_dir = cfg.static_dir;

  Service service(std::move(opts));
  if (!service.bind(addr->first, addr->second)) {
    err << "vqastate: cannot bind " << cfg.listen << "\n";
    return kExitBind;
  }
  err << "listening on " << cfg.listen << "\n";
  auto watcher = stop_on_signal([&service] { service.stop(); });
  service.listen();
  watcher.request_stop();
  return 0;
}

int cmd_mock_serve(const std::string& rules_path, const std::string& listen,
                   const std::string& label, std::uint64_t seed,
                   std::ostream& err) {
  auto rules =
      std::make_shared<const MockRuleSet>(load_mock_rules(rules_path));
  const auto addr = parse_listen_address(listen);
  if (!addr) throw UsageError("bad listen address '" + listen + "'");
  MockAnswerServer server(std::move(rules), label, seed);
  if (!server.bind(addr->first, addr->second)) {
    err << "vqastate: cannot bind " << listen << "\n";
    return kExitBind;
  }
  err << "listening on " << listen << "\n";
  auto watcher = stop_on_signal([&server] { server.stop(); });
  server.listen();
  watcher.request_stop();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Binary state recognition with a VQA ensemble", "vqastate"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string spec_path, image_path;
  bool json = false;

  auto* recognize = app.add_subcommand("recognize", "Recognize one image");
  recognize->add_option("--spec", spec_path, "State spec file")->required();
  recognize->add_option("--image", image_path, "Image file")->required();
  recognize->add_flag("--json", json, "Print the full result document");
  flags.add_backend(recognize);
  flags.add_ensemble(recognize);

  std::string q_spec;
  bool q_json = false;
  auto* questions = app.add_subcommand("questions", "List question variants");
  questions->add_option("--spec", q_spec, "State spec file")->required();
  questions->add_flag("--json", q_json, "Print JSON");

  std::string c_image;
  bool c_json = false;
  auto* caption = app.add_subcommand("caption", "Caption an image");
  caption->add_option("--image", c_image, "Image file")->required();
  caption->add_flag("--json", c_json, "Print JSON");
  flags.add_backend(caption);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a labeled corpus");
  evaluate->add_option("--corpus", ev.corpus, "Corpus manifest")->required();
  evaluate->add_option("--specs", ev.specs_dir, "Directory of spec files");
  evaluate->add_option("--spec-ids", ev.spec_ids, "Comma-separated spec ids");
  evaluate->add_option("--pair", ev.pair, "Joint run over two specs: a,b");
  evaluate->add_option("--out", ev.out_path, "Write the JSON report here");
  evaluate->add_flag("--json", ev.json, "Print JSON instead of tables");
  flags.add_backend(evaluate);
  flags.add_ensemble(evaluate);

  std::optional<std::string> s_listen, s_specs, s_token, s_static;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--listen", s_listen, "host:port");
  serve->add_option("--specs", s_specs, "Directory of spec files");
  serve->add_option("--token", s_token, "Require this bearer token");
  serve->add_option("--static-dir", s_static, "Serve a static bundle at /");
  flags.add_backend(serve);
  flags.add_ensemble(serve);

  std::string m_rules, m_listen = "127.0.0.1:8081", m_label;
  std::uint64_t m_seed = 0;
  auto* mock_serve = app.add_subcommand("mock-serve", "Run a mock /v1/answer server");
  mock_serve->add_option("--rules", m_rules, "Mock rule file")->required();
  mock_serve->add_option("--listen", m_listen, "host:port");
  mock_serve->add_option("--label", m_label, "Image label for rule matching");
  mock_serve->add_option("--seed", m_seed, "Draw seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*recognize)
      return cmd_recognize(flags, spec_path, image_path, json, out, err, env);
    if (*questions) return cmd_questions(q_spec, q_json, out);
    if (*caption) return cmd_caption(flags, c_image, c_json, out, env);
    if (*evaluate) return cmd_evaluate(flags, ev, out, env);
    if (*serve)
      return cmd_serve(flags, s_listen, s_specs, s_token, s_static, err, env);
    if (*mock_serve)
      return cmd_mock_serve(m_rules, m_listen, m_label, m_seed, err);
  } catch (const UsageError& e) {
    err << "vqastate: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "vqastate: invalid input\n" << format_issues(e);
    return kExitData;
  } catch (const TemplateError& e) {
    err << "vqastate: " << e.what() << "\n";
    return kExitData;
  } catch (const DecodeError& e) {
    err << "vqastate: cannot decode image: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    err << "vqastate: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    err << "vqastate: " << e.what() << "\n";
    return kExitData;
  } catch (const TransportError& e) {
    err << "vqastate: backend unavailable: " << e.what() << "\n";
    return kExitUnavailable;
  } catch (const ProtocolError& e) {
    err << "vqastate: " << e.what() << "\n";
    return kExitUnavailable;
  } catch (const BackendError& e) {
    err << "vqastate: " << e.what() << "\n";
    return kExitUnavailable;
  }
  return kExitUsage;
}

}  // namespace vqastate
