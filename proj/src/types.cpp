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

#include "vqastate/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "json_util.hpp"

namespace vqastate {

ValidationError::ValidationError(std::vector<FieldIssue> issues)
    : Error([&] {
        std::string msg = "validation failed";
        for (const auto& i : issues) msg += "; " + i.field + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

ValidationError::ValidationError(std::string field, std::string message)
    : ValidationError(
          std::vector<FieldIssue>{{std::move(field), std::move(message)}}) {}

BackendError::BackendError(std::string message, int status)
    : Error(std::move(message)), status_(status) {}

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s,
                        const std::array<std::pair<E, std::string_view>, N>& t) {
  for (const auto& [e, name] : t)
    if (name == s) return e;
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(E v,
                         const std::array<std::pair<E, std::string_view>, N>& t) {
  for (const auto& [e, name] : t)
    if (e == v) return name;
  return "?";
}

constexpr std::array<std::pair<Form, std::string_view>, 2> kFormNames{
    {{Form::Is, "Is"}, {Form::Does, "Does"}}};
constexpr std::array<std::pair<Article, std::string_view>, 4> kArticleNames{
    {{Article::A, "a"},
     {Article::The, "the"},
     {Article::This, "this"},
     {Article::That, "that"}}};
constexpr std::array<std::pair<Polarity, std::string_view>, 2> kPolarityNames{
    {{Polarity::Positive, "positive"}, {Polarity::Negative, "negative"}}};
constexpr std::array<std::pair<AnswerClass, std::string_view>, 3> kAnswerNames{
    {{AnswerClass::Yes, "yes"},
     {AnswerClass::No, "no"},
     {AnswerClass::Invalid, "invalid"}}};
constexpr std::array<std::pair<Vote, std::string_view>, 3> kVoteNames{
    {{Vote::ForPositive, "for_positive"},
     {Vote::ForNegative, "for_negative"},
     {Vote::NoVote, "no_vote"}}};
constexpr std::array<std::pair<Decision, std::string_view>, 2> kDecisionNames{
    {{Decision::Positive, "positive"}, {Decision::Negative, "negative"}}};
constexpr std::array<std::pair<AggregationMode, std::string_view>, 2>
    kModeNames{{{AggregationMode::PolarityCorrected, "polarity_corrected"},
                {AggregationMode::LiteralYes, "literal_yes"}}};

// Checks that every brace in `text` belongs to one of the allowed
// placeholders.
std::optional<std::string> check_placeholders(
    std::string_view text, std::initializer_list<std::string_view> allowed) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '}') return "unmatched '}'";
    if (text[i] != '{') {
      ++i;
      continue;
    }
    const auto close = text.find('}', i);
    if (close == std::string_view::npos) return "unterminated placeholder";
    const auto token = text.substr(i, close - i + 1);
    if (std::find(allowed.begin(), allowed.end(), token) == allowed.end())
      return "unknown placeholder " + std::string(token);
    i = close + 1;
  }
  return std::nullopt;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

template <typename T>
bool has_duplicates(const std::vector<T>& v) {
  std::set<T> seen(v.begin(), v.end());
  return seen.size() != v.size();
}

}  // namespace

std::string_view to_string(Form v) { return name_of(v, kFormNames); }
std::string_view to_string(Article v) { return name_of(v, kArticleNames); }
std::string_view to_string(Polarity v) { return name_of(v, kPolarityNames); }
std::string_view to_string(AnswerClass v) { return name_of(v, kAnswerNames); }
std::string_view to_string(Vote v) { return name_of(v, kVoteNames); }
std::string_view to_string(Decision v) { return name_of(v, kDecisionNames); }
std::string_view to_string(AggregationMode v) { return name_of(v, kModeNames); }

std::optional<Form> parse_form(std::string_view s) {
  return lookup(s, kFormNames);
}
std::optional<Article> parse_article(std::string_view s) {
  return lookup(s, kArticleNames);
}
std::optional<Polarity> parse_polarity(std::string_view s) {
  return lookup(s, kPolarityNames);
}
std::optional<AnswerClass> parse_answer_class(std::string_view s) {
  return lookup(s, kAnswerNames);
}
std::optional<Vote> parse_vote(std::string_view s) {
  return lookup(s, kVoteNames);
}
std::optional<Decision> parse_decision(std::string_view s) {
  return lookup(s, kDecisionNames);
}
std::optional<AggregationMode> parse_aggregation_mode(std::string_view s) {
  return lookup(s, kModeNames);
}

Polarity opposite(Polarity p) {
  return p == Polarity::Positive ? Polarity::Negative : Polarity::Positive;
}

// ---------------------------------------------------------------------------
// StateSpec

std::vector<FieldIssue> validate_spec_fields(const StateSpec::Fields& f) {
  std::vector<FieldIssue> issues;
  auto add = [&](std::string field, std::string msg) {
    issues.push_back({std::move(field), std::move(msg)});
  };

  if (blank(f.id)) add("id", "must be non-empty");
  if (f.concept_wordings.empty()) add("concept_wordings", "must be non-empty");
  for (std::size_t i = 0; i < f.concept_wordings.size(); ++i) {
    const auto field = "concept_wordings[" + std::to_string(i) + "]";
    if (blank(f.concept_wordings[i])) add(field, "must be non-empty");
    if (auto e = check_placeholders(f.concept_wordings[i], {"{article}"}))
      add(field, *e);
  }
  if (has_duplicates(f.concept_wordings))
    add("concept_wordings", "duplicate wording");

  const std::initializer_list<std::string_view> both{"{article}", "{wording}"};
  if (blank(f.positive_expression))
    add("positive_expression", "must be non-empty");
  if (auto e = check_placeholders(f.positive_expression, both))
    add("positive_expression", *e);
  if (blank(f.negative_expression))
    add("negative_expression", "must be non-empty");
  if (auto e = check_placeholders(f.negative_expression, both))
    add("negative_expression", *e);
  if (f.positive_expression == f.negative_expression)
    add("negative_expression", "must differ from positive_expression");
  if (blank(f.subject_template)) add("subject_template", "must be non-empty");
  if (auto e = check_placeholders(f.subject_template, both))
    add("subject_template", *e);

  if (f.articles.empty()) add("articles", "must be non-empty");
  if (has_duplicates(f.articles)) add("articles", "duplicate article");
  if (f.forms.empty()) add("forms", "must be non-empty");
  if (has_duplicates(f.forms)) add("forms", "duplicate form");
  if (f.enabled_polarities.empty())
    add("enabled_polarities", "must be non-empty");
  if (has_duplicates(f.enabled_polarities))
    add("enabled_polarities", "duplicate polarity");
  return issues;
}

StateSpec::StateSpec(Fields fields) : f_(std::move(fields)) {
  if (auto issues = validate_spec_fields(f_); !issues.empty())
    throw ValidationError(std::move(issues));
}

bool StateSpec::has_article(Article a) const {
  return std::find(f_.articles.begin(), f_.articles.end(), a) !=
         f_.articles.end();
}
bool StateSpec::has_form(Form f) const {
  return std::find(f_.forms.begin(), f_.forms.end(), f) != f_.forms.end();
}
bool StateSpec::has_polarity(Polarity p) const {
  return std::find(f_.enabled_polarities.begin(), f_.enabled_polarities.end(),
                   p) != f_.enabled_polarities.end();
}

// ---------------------------------------------------------------------------
// QuestionVariant

QuestionVariant::QuestionVariant(std::string text, Form form, Article article,
                                 Polarity polarity, std::size_t wording_index)
    : text_(std::move(text)),
      form_(form),
      article_(article),
      polarity_(polarity),
      wording_index_(wording_index) {
  if (text_.empty() || text_.back() != '?')
    throw ValidationError("text", "question must end with '?'");
  if (text_.find('{') != std::string::npos)
    throw ValidationError("text", "question contains an unresolved placeholder");
}

// ---------------------------------------------------------------------------
// ImageVariant

ImageVariant::ImageVariant(std::size_t width, std::size_t height,
                           std::vector<float> pixels, std::size_t variant_index,
                           ChannelShift shift)
    : width_(width),
      height_(height),
      pixels_(std::move(pixels)),
      variant_index_(variant_index),
      shift_(shift) {
  if (width_ == 0 || height_ == 0)
    throw ValidationError("pixels", "image must be non-empty");
  if (pixels_.size() != width_ * height_ * 3)
    throw ValidationError("pixels", "expected width*height*3 intensities");
  for (float v : pixels_)
    if (!(v >= 0.0f && v <= 1.0f))
      throw ValidationError("pixels", "intensity outside [0, 1]");
  for (double s : shift_)
    if (!std::isfinite(s)) throw ValidationError("shift", "must be finite");
  if (variant_index_ == 0 && shift_ != ChannelShift{0, 0, 0})
    throw ValidationError("shift", "variant 0 must be unshifted");
}

// ---------------------------------------------------------------------------
// AnswerRecord

Vote corrected_vote(AnswerClass answer, Polarity polarity) {
  if (answer == AnswerClass::Invalid) return Vote::NoVote;
  const bool yes = answer == AnswerClass::Yes;
  const bool positive = polarity == Polarity::Positive;
  return yes == positive ? Vote::ForPositive : Vote::ForNegative;
}

AnswerRecord::AnswerRecord(QuestionVariant question, std::size_t image_variant,
                           std::string raw_text, AnswerClass answer_class,
                           Vote vote)
    : question_(std::move(question)),
      image_variant_(image_variant),
      raw_text_(std::move(raw_text)),
      answer_class_(answer_class),
      vote_(vote) {
  if (vote_ != corrected_vote(answer_class_, question_.polarity()))
    throw ValidationError("vote",
                          "vote inconsistent with answer class and polarity");
}

// ---------------------------------------------------------------------------
// RecognitionResult

RecognitionResult::RecognitionResult(std::string spec_id, VoteCounts counts,
                                     double threshold,
                                     std::vector<AnswerRecord> records,
                                     std::vector<RequestFailure> failures)
    : spec_id_(std::move(spec_id)),
      counts_(counts),
      threshold_(threshold),
      records_(std::move(records)),
      failures_(std::move(failures)) {
  if (counts_.valid() == 0)
    throw ValidationError("counts", "at least one valid vote is required");
  if (!(threshold_ > 0.0 && threshold_ < 1.0))
    throw ValidationError("threshold", "must lie in (0, 1)");
  p_positive_ = static_cast<double>(counts_.for_positive) /
                static_cast<double>(counts_.valid());
  decision_ = p_positive_ > threshold_ ? Decision::Positive : Decision::Negative;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename E>
Json enum_array(const std::vector<E>& v) {
  Json out = Json::array();
  for (auto e : v) out.push_back(std::string(to_string(e)));
  return out;
}

}  // namespace

Json to_json(const StateSpec& spec) {
  const auto& f = spec.fields();
  return Json{{"id", f.id},
              {"concept_wordings", f.concept_wordings},
              {"positive_expression", f.positive_expression},
              {"negative_expression", f.negative_expression},
              {"subject_template", f.subject_template},
              {"articles", enum_array(f.articles)},
              {"forms", enum_array(f.forms)},
              {"enabled_polarities", enum_array(f.enabled_polarities)}};
}

StateSpec spec_from_json(const Json& j) {
  detail::Reader r(j);
  StateSpec::Fields f;
  f.id = r.required_string("id");
  f.concept_wordings = r.required_string_list("concept_wordings");
  f.positive_expression = r.required_string("positive_expression");
  f.negative_expression = r.required_string("negative_expression");
  if (auto s = r.optional_string("subject_template")) f.subject_template = *s;
  if (auto v = r.optional_enum_list<Article>("articles", parse_article))
    f.articles = *v;
  if (auto v = r.optional_enum_list<Form>("forms", parse_form)) f.forms = *v;
  if (auto v = r.optional_enum_list<Polarity>("enabled_polarities",
                                              parse_polarity))
    f.enabled_polarities = *v;
  r.reject_unknown();
  r.finish();
  if (auto issues = validate_spec_fields(f); !issues.empty())
    throw ValidationError(std::move(issues));
  return StateSpec(std::move(f));
}

Json to_json(const QuestionVariant& q) {
  return Json{{"text", q.text()},
              {"form", std::string(to_string(q.form()))},
              {"article", std::string(to_string(q.article()))},
              {"polarity", std::string(to_string(q.polarity()))},
              {"wording_index", q.wording_index()}};
}

QuestionVariant question_from_json(const Json& j) {
  detail::Reader r(j);
  auto text = r.required_string("text");
  auto form = r.required_enum<Form>("form", parse_form);
  auto article = r.required_enum<Article>("article", parse_article);
  auto polarity = r.required_enum<Polarity>("polarity", parse_polarity);
  auto index = r.required_uint("wording_index");
  r.finish();
  return QuestionVariant(std::move(text), form, article, polarity, index);
}

Json to_json(const ImageVariant& img) {
  return Json{{"width", img.width()},
              {"height", img.height()},
              {"variant_index", img.variant_index()},
              {"shift", img.shift()},
              {"pixels", img.pixels()}};
}

ImageVariant image_from_json(const Json& j) {
  detail::Reader r(j);
  auto w = r.required_uint("width");
  auto h = r.required_uint("height");
  auto idx = r.required_uint("variant_index");
  ChannelShift shift{0, 0, 0};
  std::vector<float> pixels;
  try {
    shift = j.at("shift").get<ChannelShift>();
    pixels = j.at("pixels").get<std::vector<float>>();
  } catch (const nlohmann::json::exception& e) {
    r.issue("pixels", e.what());
  }
  r.finish();
  return ImageVariant(w, h, std::move(pixels), idx, shift);
}

Json to_json(const AnswerRecord& rec) {
  const auto& q = rec.question();
  return Json{{"question", q.text()},
              {"form", std::string(to_string(q.form()))},
              {"article", std::string(to_string(q.article()))},
              {"polarity", std::string(to_string(q.polarity()))},
              {"wording_index", q.wording_index()},
              {"image_variant", rec.image_variant()},
              {"raw_text", rec.raw_text()},
              {"answer_class", std::string(to_string(rec.answer_class()))},
              {"vote", std::string(to_string(rec.vote()))}};
}

AnswerRecord record_from_json(const Json& j) {
  detail::Reader r(j);
  auto text = r.required_string("question");
  auto form = r.required_enum<Form>("form", parse_form);
  auto article = r.required_enum<Article>("article", parse_article);
  auto polarity = r.required_enum<Polarity>("polarity", parse_polarity);
  auto index = r.required_uint("wording_index");
  auto variant = r.required_uint("image_variant");
  auto raw = r.required_string("raw_text");
  auto cls = r.required_enum<AnswerClass>("answer_class", parse_answer_class);
  auto vote = r.required_enum<Vote>("vote", parse_vote);
  r.finish();
  return AnswerRecord(
      QuestionVariant(std::move(text), form, article, polarity, index), variant,
      std::move(raw), cls, vote);
}

Json to_json(const VoteCounts& c) {
  return Json{{"for_positive", c.for_positive},
              {"for_negative", c.for_negative},
              {"invalid", c.invalid},
              {"transport_failures", c.transport_failures}};
}

VoteCounts counts_from_json(const Json& j) {
  detail::Reader r(j);
  VoteCounts c;
  c.for_positive = r.required_uint("for_positive");
  c.for_negative = r.required_uint("for_negative");
  c.invalid = r.required_uint("invalid");
  c.transport_failures = r.required_uint("transport_failures");
  r.finish();
  return c;
}

Json to_json(const RequestFailure& f) {
  Json j = to_json(f.question);
  j.erase("text");
  Json out{{"question", f.question.text()}};
  out.update(j);
  out["image_variant"] = f.image_variant;
  out["message"] = f.message;
  return out;
}

Json to_json(const RecognitionResult& res) {
  Json records = Json::array();
  for (const auto& rec : res.records()) records.push_back(to_json(rec));
  Json failures = Json::array();
  for (const auto& f : res.failures()) failures.push_back(to_json(f));
  return Json{{"spec_id", res.spec_id()},
              {"decision", std::string(to_string(res.decision()))},
              {"p_positive", res.p_positive()},
              {"threshold", res.threshold()},
              {"counts", to_json(res.counts())},
              {"records", std::move(records)},
              {"failures", std::move(failures)}};
}

RecognitionResult result_from_json(const Json& j) {
  detail::Reader r(j);
  auto id = r.required_string("spec_id");
  auto decision = r.required_enum<Decision>("decision", parse_decision);
  auto threshold = r.required_number("threshold");
  auto p = r.required_number("p_positive");
  VoteCounts counts;
  std::vector<AnswerRecord> records;
  std::vector<RequestFailure> failures;
  if (auto c = r.child("counts")) counts = counts_from_json(*c);
  if (auto rs = r.child_array("records"))
    for (const auto& e : *rs) records.push_back(record_from_json(e));
  if (auto fs = r.child_array("failures")) {
    for (const auto& e : *fs) {
      detail::Reader fr(e, "failures");
      auto text = fr.required_string("question");
      auto form = fr.required_enum<Form>("form", parse_form);
      auto article = fr.required_enum<Article>("article", parse_article);
      auto polarity = fr.required_enum<Polarity>("polarity", parse_polarity);
      auto index = fr.required_uint("wording_index");
      auto variant = fr.required_uint("image_variant");
      auto msg = fr.required_string("message");
      fr.finish();
      QuestionVariant q(std::move(text), form, article, polarity, index);
      failures.push_back({std::move(q), variant, std::move(msg)});
    }
  }
  r.finish();
  RecognitionResult res(std::move(id), counts, threshold, std::move(records),
                        std::move(failures));
  if (res.decision() != decision)
    throw ValidationError("decision", "inconsistent with counts and threshold");
  if (res.p_positive() != p)
    throw ValidationError("p_positive", "inconsistent with counts");
  return res;
}

}  // namespace vqastate
