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

#include "vqastate/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "json_util.hpp"
#include "vqastate/random.hpp"

namespace vqastate {

namespace fs = std::filesystem;

std::string_view to_string(Score s) {
  switch (s) {
    case Score::Correct:
      return "correct";
    case Score::Wrong:
      return "wrong";
    case Score::Invalid:
      return "invalid";
  }
  return "?";
}

Score score_answer(const AnswerRecord& record, Polarity truth) {
  switch (record.vote()) {
    case Vote::NoVote:
      return Score::Invalid;
    case Vote::ForPositive:
      return truth == Polarity::Positive ? Score::Correct : Score::Wrong;
    case Vote::ForNegative:
      return truth == Polarity::Negative ? Score::Correct : Score::Wrong;
  }
  return Score::Invalid;
}

void Tally::add(Score s) {
  switch (s) {
    case Score::Correct:
      ++correct;
      break;
    case Score::Wrong:
      ++wrong;
      break;
    case Score::Invalid:
      ++invalid;
      break;
  }
}

Tally& Tally::operator+=(const Tally& o) {
  correct += o.correct;
  wrong += o.wrong;
  invalid += o.invalid;
  return *this;
}

std::optional<double> Tally::correct_rate() const {
  if (valid() == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(valid());
}

std::optional<double> Tally::invalid_rate() const {
  if (total() == 0) return std::nullopt;
  return static_cast<double>(invalid) / static_cast<double>(total());
}

Tally CellMatrix::row(Polarity image_state) const {
  Tally t = at(image_state, Polarity::Positive);
  t += at(image_state, Polarity::Negative);
  return t;
}

Tally CellMatrix::column(Polarity question) const {
  Tally t = at(Polarity::Positive, question);
  t += at(Polarity::Negative, question);
  return t;
}

Tally CellMatrix::total() const {
  Tally t = row(Polarity::Positive);
  t += row(Polarity::Negative);
  return t;
}

void Breakdown::add(const AnswerRecord& record, Score s) {
  by_form[record.question().form()].add(s);
  by_article[record.question().article()].add(s);
  overall.add(s);
}

bool ImageResult::decision_correct() const {
  if (!decision) return false;
  return (*decision == Decision::Positive) == (truth == Polarity::Positive);
}

const SpecSummary* EvaluationReport::find_spec(std::string_view id) const {
  for (const auto& s : specs)
    if (s.spec_id == id) return &s;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Manifest

std::string CorpusEntry::mock_label() const {
  if (!label.empty()) return label;
  std::string out;
  for (const auto& [id, polarity] : labels) {
    if (!out.empty()) out += ',';
    out += id + "=" + std::string(to_string(polarity));
  }
  return out;
}

std::string CorpusManifest::resolve(const CorpusEntry& entry) const {
  fs::path p(entry.image_path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

Json to_json(const CorpusManifest& manifest) {
  Json entries = Json::array();
  for (const auto& e : manifest.entries) {
    Json labels = Json::object();
    for (const auto& [id, p] : e.labels) labels[id] = std::string(to_string(p));
    Json j{{"image", e.image_path}};
    if (!e.label.empty()) j["label"] = e.label;
    j["labels"] = std::move(labels);
    entries.push_back(std::move(j));
  }
  return Json{{"schema_version", 1}, {"entries", std::move(entries)}};
}

CorpusManifest manifest_from_json(const Json& j, std::string base_dir) {
  detail::Reader r(j);
  CorpusManifest out;
  out.base_dir = std::move(base_dir);
  r.optional_uint("schema_version");
  const Json* entries = r.child_array("entries");
  if (!entries) r.issue("entries", "required");
  if (entries) {
    for (std::size_t i = 0; i < entries->size(); ++i) {
      detail::Reader er((*entries)[i], "entries[" + std::to_string(i) + "]");
      CorpusEntry e;
      e.image_path = er.required_string("image");
      if (auto s = er.optional_string("label")) e.label = *s;
      if (const Json* labels = er.child("labels")) {
        for (auto it = labels->begin(); it != labels->end(); ++it) {
          const auto p = it.value().is_string()
                             ? parse_polarity(it.value().get<std::string>())
                             : std::nullopt;
          if (!p)
            er.issue("labels." + it.key(), "expected 'positive' or 'negative'");
          else
            e.labels[it.key()] = *p;
        }
      }
      if (e.labels.empty()) er.issue("labels", "at least one label required");
      er.reject_unknown();
      r.merge(er.issues());
      out.entries.push_back(std::move(e));
    }
  }
  r.reject_unknown();
  r.finish();
  return out;
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("$", path + ": " + e.what());
  }
  return manifest_from_json(j, fs::path(path).parent_path().string());
}

std::vector<FieldIssue> validate_manifest(const CorpusManifest& manifest,
                                          const std::vector<StateSpec>& specs) {
  std::set<std::string> known;
  for (const auto& s : specs) known.insert(s.id());
  std::vector<FieldIssue> issues;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const auto field = "entries[" + std::to_string(i) + "]";
    try {
      load_image_file(manifest.resolve(e));
    } catch (const Error& err) {
      issues.push_back({field + ".image", err.what()});
    }
    for (const auto& [id, _] : e.labels)
      if (!known.count(id))
        issues.push_back({field + ".labels." + id, "unknown spec id"});
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Evaluation

std::uint64_t entry_seed(std::uint64_t seed, std::size_t entry_index) {
  return derive_key(seed, entry_index);
}

namespace {

const StateSpec* find_spec(const std::vector<StateSpec>& specs,
                           std::string_view id) {
  for (const auto& s : specs)
    if (s.id() == id) return &s;
  return nullptr;
}

struct PerImageDetail {
  ImageResult result;
  std::map<Form, Tally> by_form;
};

void summarize_states(EvaluationReport& report,
                      const std::vector<PerImageDetail>& details) {
  for (const auto& spec : report.specs) {
    for (Polarity truth : kAllPolarities) {
      std::array<std::optional<Form>, 3> forms{std::nullopt, Form::Is,
                                               Form::Does};
      for (const auto& form : forms) {
        std::vector<double> rates;
        std::uint64_t images = 0;
        for (const auto& d : details) {
          if (d.result.spec_id != spec.spec_id || d.result.truth != truth)
            continue;
          ++images;
          std::optional<double> rate;
          if (!form) {
            rate = d.result.tally.correct_rate();
          } else if (auto it = d.by_form.find(*form); it != d.by_form.end()) {
            rate = it->second.correct_rate();
          }
          if (rate) rates.push_back(*rate);
        }
        if (images == 0) continue;
        StateSummary s;
        s.spec_id = spec.spec_id;
        s.truth = truth;
        s.form = form;
        s.images = images;
        if (!rates.empty()) {
          double mean = 0.0;
          for (double r : rates) mean += r;
          mean /= static_cast<double>(rates.size());
          double var = 0.0;
          for (double r : rates) var += (r - mean) * (r - mean);
          var /= static_cast<double>(rates.size());
          s.mean_correct_rate = mean;
          s.variance = var;
        }
        report.state_summary.push_back(std::move(s));
      }
    }
  }
}

EvaluationReport evaluate_entries(const CorpusManifest& manifest,
                                  const std::vector<std::size_t>& indices,
                                  const std::vector<StateSpec>& specs,
                                  const BackendBinding& binding,
                                  const EvaluationOptions& options) {
  options.augment.validate();
  options.aggregation.validate();

  EvaluationReport report;
  std::map<std::string, SpecSummary> summaries;
  std::vector<PerImageDetail> details;
  auto wanted = [&](const std::string& id) {
    return options.spec_ids.empty() ||
           std::find(options.spec_ids.begin(), options.spec_ids.end(), id) !=
               options.spec_ids.end();
  };

  std::size_t done = 0;
  for (std::size_t i : indices) {
    const auto& entry = manifest.entries.at(i);
    const auto path = manifest.resolve(entry);
    auto add_error = [&](std::string spec_id, std::string kind,
                         std::string message) {
      report.errors.push_back(
          {i, entry.image_path, std::move(spec_id), std::move(kind),
           std::move(message)});
    };

    std::vector<std::pair<const StateSpec*, Polarity>> jobs;
    for (const auto& [id, truth] : entry.labels) {
      if (!wanted(id)) continue;
      const StateSpec* spec = find_spec(specs, id);
      if (!spec) {
        add_error(id, "config", "unknown spec id '" + id + "'");
        continue;
      }
      jobs.emplace_back(spec, truth);
    }

    if (!jobs.empty()) {
      std::optional<ImageVariant> image;
      try {
        image = load_image_file(path);
      } catch (const IoError& e) {
        add_error("", "io", e.what());
      } catch (const Error& e) {
        add_error("", "decode", e.what());
      }

      const auto seed = entry_seed(options.augment.seed, i);
      AugmentConfig aug = options.augment;
      aug.seed = seed;
      for (const auto& [spec, truth] : jobs) {
        if (!image) break;
        auto backend = binding.for_image(entry.mock_label(), seed);

        PerImageDetail d;
        d.result.entry_index = i;
        d.result.image_path = entry.image_path;
        d.result.spec_id = spec->id();
        d.result.truth = truth;
        std::vector<AnswerRecord> records;
        try {
          auto res = recognize_image(*spec, *image, *backend, aug,
                                     options.aggregation);
          d.result.decision = res.decision();
          d.result.p_positive = res.p_positive();
          d.result.transport_failures = res.counts().transport_failures;
          records = res.records();
        } catch (const IndeterminateError& e) {
          d.result.transport_failures = e.counts().transport_failures;
          records = e.records();
        } catch (const Error& e) {
          add_error(spec->id(), "backend", e.what());
          continue;
        }

        auto& summary = summaries[spec->id()];
        summary.spec_id = spec->id();
        for (const auto& rec : records) {
          const Score s = score_answer(rec, truth);
          d.result.tally.add(s);
          d.by_form[rec.question().form()].add(s);
          summary.cell_matrix.at(truth, rec.question().polarity()).add(s);
          summary.breakdown.add(rec, s);
          report.breakdown.add(rec, s);
        }
        ++summary.images;
        if (d.result.decision_correct()) ++summary.decisions_correct;
        report.per_image.push_back(d.result);
        details.push_back(std::move(d));
      }
    }
    ++done;
    if (options.progress) options.progress(done, indices.size());
  }

  for (const auto& spec : specs)
    if (auto it = summaries.find(spec.id()); it != summaries.end())
      report.specs.push_back(std::move(it->second));
  summarize_states(report, details);
  return report;
}

}  // namespace

EvaluationReport evaluate_corpus(const CorpusManifest& manifest,
                                 const std::vector<StateSpec>& specs,
                                 const BackendBinding& backend,
                                 const EvaluationOptions& options) {
  std::vector<std::size_t> all(manifest.entries.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return evaluate_entries(manifest, all, specs, backend, options);
}

MultiSpecReport multi_spec_scenario(const CorpusManifest& manifest,
                                    const StateSpec& spec_a,
                                    const StateSpec& spec_b,
                                    const BackendBinding& backend,
                                    const EvaluationOptions& options) {
  MultiSpecReport out;
  out.spec_a = spec_a.id();
  out.spec_b = spec_b.id();

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    std::string missing;
    for (const auto* id : {&spec_a.id(), &spec_b.id()})
      if (!e.labels.count(*id)) missing = *id;
    if (!missing.empty()) {
      out.errors.push_back({i, e.image_path, missing, "missing_label",
                            MissingLabelError("entry has no label for '" +
                                              missing + "'")
                                .what()});
      continue;
    }
    usable.push_back(i);
  }

  EvaluationOptions opt_a = options;
  opt_a.spec_ids = {spec_a.id()};
  EvaluationOptions opt_b = options;
  opt_b.spec_ids = {spec_b.id()};
  out.report_a = evaluate_entries(manifest, usable, {spec_a}, backend, opt_a);
  out.report_b = evaluate_entries(manifest, usable, {spec_b}, backend, opt_b);

  for (std::size_t r = 0; r < 4; ++r) {
    out.joint[r].truth_a = r < 2 ? Polarity::Positive : Polarity::Negative;
    out.joint[r].truth_b = r % 2 == 0 ? Polarity::Positive : Polarity::Negative;
  }
  std::map<std::size_t, const ImageResult*> b_by_entry;
  for (const auto& img : out.report_b.per_image)
    b_by_entry[img.entry_index] = &img;
  for (const auto& a : out.report_a.per_image) {
    auto it = b_by_entry.find(a.entry_index);
    if (it == b_by_entry.end()) continue;
    const ImageResult& b = *it->second;
    auto& row = out.joint[static_cast<int>(a.truth) * 2 + static_cast<int>(b.truth)];
    ++row.entries;
    row.a_correct += a.decision_correct();
    row.b_correct += b.decision_correct();
    row.both_correct += a.decision_correct() && b.decision_correct();
    row.a_answers += a.tally;
    row.b_answers += b.tally;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

// Writes tally fields into an existing object.
void put_tally(Json& j, const Tally& t) {
  j["correct"] = t.correct;
  j["wrong"] = t.wrong;
  j["invalid"] = t.invalid;
  j["total"] = t.total();
  j["correct_rate"] = optional_number(t.correct_rate());
  j["invalid_rate"] = optional_number(t.invalid_rate());
}

Tally read_tally(detail::Reader& r) {
  Tally t;
  t.correct = r.required_uint("correct");
  t.wrong = r.required_uint("wrong");
  t.invalid = r.required_uint("invalid");
  r.optional_uint("total");
  r.optional_number("correct_rate");
  r.optional_number("invalid_rate");
  return t;
}

Tally tally_from(const Json& j, const std::string& path) {
  detail::Reader r(j, path);
  Tally t = read_tally(r);
  r.finish();
  return t;
}

Json breakdown_forms(const std::map<Form, Tally>& m) {
  Json out = Json::object();
  for (const auto& [form, t] : m) out[std::string(to_string(form))] = to_json(t);
  return out;
}

Json breakdown_articles(const std::map<Article, Tally>& m) {
  Json out = Json::object();
  for (const auto& [a, t] : m) out[std::string(to_string(a))] = to_json(t);
  return out;
}

template <typename E, typename Parse>
std::map<E, Tally> read_breakdown(const Json* j, const std::string& path,
                                  Parse parse) {
  std::map<E, Tally> out;
  if (!j) return out;
  for (auto it = j->begin(); it != j->end(); ++it) {
    auto key = parse(it.key());
    if (!key) throw ValidationError(path + "." + it.key(), "unknown key");
    out[*key] = tally_from(it.value(), path + "." + it.key());
  }
  return out;
}

Json breakdown_json(const Breakdown& b) {
  Json j = Json::object();
  j["form_breakdown"] = breakdown_forms(b.by_form);
  j["article_breakdown"] = breakdown_articles(b.by_article);
  j["overall"] = to_json(b.overall);
  return j;
}

Breakdown read_breakdown_fields(detail::Reader& r, const Json& j,
                                const std::string& path) {
  Breakdown b;
  b.by_form = read_breakdown<Form>(r.child("form_breakdown"),
                                   path + "form_breakdown", parse_form);
  b.by_article = read_breakdown<Article>(r.child("article_breakdown"),
                                         path + "article_breakdown",
                                         parse_article);
  if (r.child("overall")) b.overall = tally_from(j.at("overall"), path + "overall");
  return b;
}

Json cell_matrix_json(const CellMatrix& m) {
  Json cells = Json::array();
  for (Polarity img : kAllPolarities) {
    for (Polarity q : kAllPolarities) {
      Json c{{"image_state", std::string(to_string(img))},
             {"question_polarity", std::string(to_string(q))}};
      put_tally(c, m.at(img, q));
      cells.push_back(std::move(c));
    }
  }
  Json rows = Json::array();
  for (Polarity img : kAllPolarities) {
    Json r{{"image_state", std::string(to_string(img))}};
    put_tally(r, m.row(img));
    rows.push_back(std::move(r));
  }
  Json cols = Json::array();
  for (Polarity q : kAllPolarities) {
    Json c{{"question_polarity", std::string(to_string(q))}};
    put_tally(c, m.column(q));
    cols.push_back(std::move(c));
  }
  return Json{{"cells", std::move(cells)},
              {"rows", std::move(rows)},
              {"columns", std::move(cols)},
              {"total", to_json(m.total())}};
}

CellMatrix read_cell_matrix(const Json& j, const std::string& path) {
  CellMatrix m;
  detail::Reader r(j, path);
  const Json* cells = r.child_array("cells");
  r.child_array("rows");
  r.child_array("columns");
  r.child("total");
  r.finish();
  if (!cells) throw ValidationError(path + ".cells", "required");
  for (std::size_t i = 0; i < cells->size(); ++i) {
    detail::Reader cr((*cells)[i], path + ".cells[" + std::to_string(i) + "]");
    auto img = cr.required_enum<Polarity>("image_state", parse_polarity);
    auto q = cr.required_enum<Polarity>("question_polarity", parse_polarity);
    Tally t = read_tally(cr);
    cr.finish();
    m.at(img, q) = t;
  }
  return m;
}

}  // namespace

Json to_json(const Tally& t) {
  Json j = Json::object();
  put_tally(j, t);
  return j;
}

Json to_json(const EvaluationReport& report) {
  Json specs = Json::array();
  for (const auto& s : report.specs) {
    Json j{{"spec_id", s.spec_id}, {"cell_matrix", cell_matrix_json(s.cell_matrix)}};
    j.update(breakdown_json(s.breakdown));
    j["images"] = s.images;
    j["decisions_correct"] = s.decisions_correct;
    j["decision_accuracy"] =
        s.images ? Json(static_cast<double>(s.decisions_correct) /
                        static_cast<double>(s.images))
                 : Json(nullptr);
    specs.push_back(std::move(j));
  }

  Json per_image = Json::array();
  for (const auto& img : report.per_image) {
    Json j{{"entry_index", img.entry_index},
           {"image_path", img.image_path},
           {"spec_id", img.spec_id},
           {"truth", std::string(to_string(img.truth))}};
    put_tally(j, img.tally);
    j["transport_failures"] = img.transport_failures;
    j["decision"] = img.decision ? std::string(to_string(*img.decision))
                                 : std::string("indeterminate");
    j["p_positive"] = optional_number(img.p_positive);
    j["decision_correct"] = img.decision_correct();
    per_image.push_back(std::move(j));
  }

  Json states = Json::array();
  for (const auto& s : report.state_summary) {
    states.push_back(Json{
        {"spec_id", s.spec_id},
        {"truth", std::string(to_string(s.truth))},
        {"form", s.form ? Json(std::string(to_string(*s.form))) : Json(nullptr)},
        {"images", s.images},
        {"mean_correct_rate", optional_number(s.mean_correct_rate)},
        {"variance", optional_number(s.variance)}});
  }

  Json errors = Json::array();
  for (const auto& e : report.errors)
    errors.push_back(Json{{"entry_index", e.entry_index},
                          {"image_path", e.image_path},
                          {"spec_id", e.spec_id},
                          {"kind", e.kind},
                          {"message", e.message}});

  Json out{{"schema_version", report.schema_version}, {"specs", std::move(specs)}};
  out.update(breakdown_json(report.breakdown));
  out["per_image"] = std::move(per_image);
  out["state_summary"] = std::move(states);
  out["errors"] = std::move(errors);
  return out;
}

EvaluationReport report_from_json(const Json& j) {
  detail::Reader r(j);
  EvaluationReport report;
  const auto version = r.required_uint("schema_version");
  r.finish();
  if (version != static_cast<std::uint64_t>(kReportSchemaVersion))
    throw ValidationError("schema_version", "unsupported report schema version");
  report.schema_version = static_cast<int>(version);
  report.breakdown = read_breakdown_fields(r, j, "");

  if (const Json* specs = r.child_array("specs")) {
    for (std::size_t i = 0; i < specs->size(); ++i) {
      const auto path = "specs[" + std::to_string(i) + "]";
      const Json& sj = (*specs)[i];
      detail::Reader sr(sj, path);
      SpecSummary s;
      s.spec_id = sr.required_string("spec_id");
      if (sr.child("cell_matrix"))
        s.cell_matrix = read_cell_matrix(sj.at("cell_matrix"), path + ".cell_matrix");
      s.breakdown = read_breakdown_fields(sr, sj, path + ".");
      s.images = sr.required_uint("images");
      s.decisions_correct = sr.required_uint("decisions_correct");
      sr.finish();
      report.specs.push_back(std::move(s));
    }
  }

  if (const Json* imgs = r.child_array("per_image")) {
    for (std::size_t i = 0; i < imgs->size(); ++i) {
      detail::Reader ir((*imgs)[i], "per_image[" + std::to_string(i) + "]");
      ImageResult img;
      img.entry_index = ir.required_uint("entry_index");
      img.image_path = ir.required_string("image_path");
      img.spec_id = ir.required_string("spec_id");
      img.truth = ir.required_enum<Polarity>("truth", parse_polarity);
      img.tally = read_tally(ir);
      img.transport_failures = ir.required_uint("transport_failures");
      const auto decision = ir.required_string("decision");
      if (decision != "indeterminate") {
        img.decision = parse_decision(decision);
        if (!img.decision) ir.issue("decision", "unknown value");
      }
      img.p_positive = ir.optional_number("p_positive");
      ir.optional_bool("decision_correct");
      ir.finish();
      report.per_image.push_back(std::move(img));
    }
  }

  if (const Json* states = r.child_array("state_summary")) {
    for (std::size_t i = 0; i < states->size(); ++i) {
      detail::Reader sr((*states)[i], "state_summary[" + std::to_string(i) + "]");
      StateSummary s;
      s.spec_id = sr.required_string("spec_id");
      s.truth = sr.required_enum<Polarity>("truth", parse_polarity);
      s.form = sr.optional_enum<Form>("form", parse_form);
      s.images = sr.required_uint("images");
      s.mean_correct_rate = sr.optional_number("mean_correct_rate");
      s.variance = sr.optional_number("variance");
      sr.finish();
      report.state_summary.push_back(std::move(s));
    }
  }

  if (const Json* errors = r.child_array("errors")) {
    for (std::size_t i = 0; i < errors->size(); ++i) {
      detail::Reader er((*errors)[i], "errors[" + std::to_string(i) + "]");
      EntryError e;
      e.entry_index = er.required_uint("entry_index");
      e.image_path = er.required_string("image_path");
      e.spec_id = er.required_string("spec_id");
      e.kind = er.required_string("kind");
      e.message = er.required_string("message");
      er.finish();
      report.errors.push_back(std::move(e));
    }
  }
  r.finish();
  return report;
}

Json to_json(const MultiSpecReport& report) {
  Json joint = Json::array();
  for (const auto& row : report.joint) {
    auto rate = [&](std::uint64_t n) {
      return row.entries ? Json(static_cast<double>(n) /
                                static_cast<double>(row.entries))
                         : Json(nullptr);
    };
    joint.push_back(Json{{"truth_a", std::string(to_string(row.truth_a))},
                         {"truth_b", std::string(to_string(row.truth_b))},
                         {"entries", row.entries},
                         {"a_decision_accuracy", rate(row.a_correct)},
                         {"b_decision_accuracy", rate(row.b_correct)},
                         {"both_correct_rate", rate(row.both_correct)},
                         {"a_answers", to_json(row.a_answers)},
                         {"b_answers", to_json(row.b_answers)}});
  }
  Json errors = Json::array();
  for (const auto& e : report.errors)
    errors.push_back(Json{{"entry_index", e.entry_index},
                          {"image_path", e.image_path},
                          {"spec_id", e.spec_id},
                          {"kind", e.kind},
                          {"message", e.message}});
  return Json{{"schema_version", kReportSchemaVersion},
              {"spec_a", report.spec_a},
              {"spec_b", report.spec_b},
              {"joint", std::move(joint)},
              {"report_a", to_json(report.report_a)},
              {"report_b", to_json(report.report_b)},
              {"errors", std::move(errors)}};
}

// ---------------------------------------------------------------------------
// Text rendering

namespace {

std::string fmt_rate(const std::optional<double>& v) {
  if (!v) return "  -  ";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string short_label(const std::string& s) {
  return s.size() > 14 ? s.substr(0, 14) : s;
}

}  // namespace

std::string render_report_text(const EvaluationReport& report,
                               const std::vector<StateSpec>& specs) {
  std::string out;
  for (const auto& s : report.specs) {
    std::string pos = "positive";
    std::string neg = "negative";
    for (const auto& spec : specs) {
      if (spec.id() != s.spec_id) continue;
      pos = short_label(spec.positive_expression());
      neg = short_label(spec.negative_expression());
    }
    out += "spec " + s.spec_id + " (" + std::to_string(s.images) + " images, " +
           std::to_string(s.decisions_correct) + " decisions correct)\n";
    out += pad("", 20) + pad("Ques-" + pos, 20) + pad("Ques-" + neg, 20) +
           "Total\n";
    for (Polarity img : kAllPolarities) {
      const auto& label = img == Polarity::Positive ? pos : neg;
      out += pad("Img-" + label, 20) +
             pad(fmt_rate(s.cell_matrix.at(img, Polarity::Positive).correct_rate()), 20) +
             pad(fmt_rate(s.cell_matrix.at(img, Polarity::Negative).correct_rate()), 20) +
             fmt_rate(s.cell_matrix.row(img).correct_rate()) + "\n";
    }
    out += pad("Total", 20) +
           pad(fmt_rate(s.cell_matrix.column(Polarity::Positive).correct_rate()), 20) +
           pad(fmt_rate(s.cell_matrix.column(Polarity::Negative).correct_rate()), 20) +
           fmt_rate(s.cell_matrix.total().correct_rate()) + "\n\n";
  }

  out += pad("", 14);
  for (Form f : {Form::Does, Form::Is}) out += pad(std::string(to_string(f)), 8);
  for (Article a : kAllArticles) out += pad(std::string(to_string(a)), 8);
  out += "all\n";
  auto line = [&](const char* name, auto rate) {
    out += pad(name, 14);
    for (Form f : {Form::Does, Form::Is}) {
      auto it = report.breakdown.by_form.find(f);
      out += pad(fmt_rate(it == report.breakdown.by_form.end()
                              ? std::nullopt
                              : rate(it->second)),
                 8);
    }
    for (Article a : kAllArticles) {
      auto it = report.breakdown.by_article.find(a);
      out += pad(fmt_rate(it == report.breakdown.by_article.end()
                              ? std::nullopt
                              : rate(it->second)),
                 8);
    }
    out += fmt_rate(rate(report.breakdown.overall)) + "\n";
  };
  line("Correct Rate", [](const Tally& t) { return t.correct_rate(); });
  line("Invalid Rate", [](const Tally& t) { return t.invalid_rate(); });

  if (!report.errors.empty()) {
    out += "\n" + std::to_string(report.errors.size()) + " entry error(s):\n";
    for (const auto& e : report.errors)
      out += "  [" + std::to_string(e.entry_index) + "] " + e.image_path + " " +
             e.kind + ": " + e.message + "\n";
  }
  return out;
}

std::string render_joint_text(const MultiSpecReport& report) {
  std::string out = pad(report.spec_a, 14) + pad(report.spec_b, 14) +
                    pad("entries", 10) + pad(report.spec_a + " acc", 16) +
                    pad(report.spec_b + " acc", 16) + "both\n";
  for (const auto& row : report.joint) {
    auto rate = [&](std::uint64_t n) {
      return row.entries ? std::optional<double>(static_cast<double>(n) /
                                                 static_cast<double>(row.entries))
                         : std::nullopt;
    };
    out += pad(std::string(to_string(row.truth_a)), 14) +
           pad(std::string(to_string(row.truth_b)), 14) +
           pad(std::to_string(row.entries), 10) +
           pad(fmt_rate(rate(row.a_correct)), 16) +
           pad(fmt_rate(rate(row.b_correct)), 16) +
           fmt_rate(rate(row.both_correct)) + "\n";
  }
  return out;
}

}  // namespace vqastate
