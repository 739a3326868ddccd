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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vqastate/errors.hpp"

namespace vqastate {

using Json = nlohmann::ordered_json;

// Enumerations are declared in canonical order; question expansion iterates
// in this order.
enum class Form { Is, Does };
enum class Article { A, The, This, That };
enum class Polarity { Positive, Negative };
enum class AnswerClass { Yes, No, Invalid };
enum class Vote { ForPositive, ForNegative, NoVote };
enum class Decision { Positive, Negative };
enum class AggregationMode { PolarityCorrected, LiteralYes };

inline constexpr std::array kAllForms{Form::Is, Form::Does};
inline constexpr std::array kAllArticles{Article::A, Article::The,
                                         Article::This, Article::That};
inline constexpr std::array kAllPolarities{Polarity::Positive,
                                           Polarity::Negative};

std::string_view to_string(Form v);
std::string_view to_string(Article v);
std::string_view to_string(Polarity v);
std::string_view to_string(AnswerClass v);
std::string_view to_string(Vote v);
std::string_view to_string(Decision v);
std::string_view to_string(AggregationMode v);

std::optional<Form> parse_form(std::string_view s);
std::optional<Article> parse_article(std::string_view s);
std::optional<Polarity> parse_polarity(std::string_view s);
std::optional<AnswerClass> parse_answer_class(std::string_view s);
std::optional<Vote> parse_vote(std::string_view s);
std::optional<Decision> parse_decision(std::string_view s);
std::optional<AggregationMode> parse_aggregation_mode(std::string_view s);

Polarity opposite(Polarity p);

/// Declarative description of one binary state.
///
/// `subject_template` and both expressions may reference `{article}` and
/// `{wording}`; concept wordings may reference `{article}`. Any other brace
/// sequence is rejected at construction.
class StateSpec {
 public:
  struct Fields {
    std::string id;
    std::vector<std::string> concept_wordings;
    std::string positive_expression;
    std::string negative_expression;
    std::string subject_template = "{article} {wording}";
    std::vector<Article> articles{kAllArticles.begin(), kAllArticles.end()};
    std::vector<Form> forms{kAllForms.begin(), kAllForms.end()};
    std::vector<Polarity> enabled_polarities{kAllPolarities.begin(),
                                             kAllPolarities.end()};

    bool operator==(const Fields&) const = default;
  };

  explicit StateSpec(Fields fields);

  const std::string& id() const noexcept { return f_.id; }
  const std::vector<std::string>& concept_wordings() const noexcept {
    return f_.concept_wordings;
  }
  const std::string& positive_expression() const noexcept {
    return f_.positive_expression;
  }
  const std::string& negative_expression() const noexcept {
    return f_.negative_expression;
  }
  const std::string& expression(Polarity p) const noexcept {
    return p == Polarity::Positive ? f_.positive_expression
                                   : f_.negative_expression;
  }
  const std::string& subject_template() const noexcept {
    return f_.subject_template;
  }
  const std::vector<Article>& articles() const noexcept { return f_.articles; }
  const std::vector<Form>& forms() const noexcept { return f_.forms; }
  const std::vector<Polarity>& enabled_polarities() const noexcept {
    return f_.enabled_polarities;
  }
  bool has_article(Article a) const;
  bool has_form(Form f) const;
  bool has_polarity(Polarity p) const;

  const Fields& fields() const noexcept { return f_; }

  bool operator==(const StateSpec&) const = default;

 private:
  Fields f_;
};

// Returns the issues that would make `fields` an invalid StateSpec.
std::vector<FieldIssue> validate_spec_fields(const StateSpec::Fields& fields);

class QuestionVariant {
 public:
  QuestionVariant(std::string text, Form form, Article article,
                  Polarity polarity, std::size_t wording_index);

  const std::string& text() const noexcept { return text_; }
  Form form() const noexcept { return form_; }
  Article article() const noexcept { return article_; }
  Polarity polarity() const noexcept { return polarity_; }
  std::size_t wording_index() const noexcept { return wording_index_; }

  bool operator==(const QuestionVariant&) const = default;

 private:
  std::string text_;
  Form form_;
  Article article_;
  Polarity polarity_;
  std::size_t wording_index_;
};

using ChannelShift = std::array<double, 3>;

/// Row-major H x W x 3 image with intensities in [0, 1].
class ImageVariant {
 public:
  ImageVariant(std::size_t width, std::size_t height, std::vector<float> pixels,
               std::size_t variant_index = 0, ChannelShift shift = {0, 0, 0});

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<float>& pixels() const noexcept { return pixels_; }
  float at(std::size_t row, std::size_t col, std::size_t channel) const {
    return pixels_[(row * width_ + col) * 3 + channel];
  }
  std::size_t variant_index() const noexcept { return variant_index_; }
  const ChannelShift& shift() const noexcept { return shift_; }

  bool operator==(const ImageVariant&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<float> pixels_;
  std::size_t variant_index_;
  ChannelShift shift_;
};

// Vote implied by an answer under polarity correction.
Vote corrected_vote(AnswerClass answer, Polarity polarity);

class AnswerRecord {
 public:
  AnswerRecord(QuestionVariant question, std::size_t image_variant,
               std::string raw_text, AnswerClass answer_class, Vote vote);

  const QuestionVariant& question() const noexcept { return question_; }
  std::size_t image_variant() const noexcept { return image_variant_; }
  const std::string& raw_text() const noexcept { return raw_text_; }
  AnswerClass answer_class() const noexcept { return answer_class_; }
  Vote vote() const noexcept { return vote_; }

  bool operator==(const AnswerRecord&) const = default;

 private:
  QuestionVariant question_;
  std::size_t image_variant_;
  std::string raw_text_;
  AnswerClass answer_class_;
  Vote vote_;
};

struct VoteCounts {
  std::uint64_t for_positive = 0;
  std::uint64_t for_negative = 0;
  std::uint64_t invalid = 0;
  std::uint64_t transport_failures = 0;

  std::uint64_t valid() const noexcept { return for_positive + for_negative; }
  bool operator==(const VoteCounts&) const = default;
};

// A (question, image variant) pair whose request never produced an answer.
struct RequestFailure {
  QuestionVariant question;
  std::size_t image_variant;
  std::string message;

  bool operator==(const RequestFailure&) const = default;
};

class RecognitionResult {
 public:
  RecognitionResult(std::string spec_id, VoteCounts counts, double threshold,
                    std::vector<AnswerRecord> records,
                    std::vector<RequestFailure> failures = {});

  const std::string& spec_id() const noexcept { return spec_id_; }
  Decision decision() const noexcept { return decision_; }
  double p_positive() const noexcept { return p_positive_; }
  double threshold() const noexcept { return threshold_; }
  const VoteCounts& counts() const noexcept { return counts_; }
  const std::vector<AnswerRecord>& records() const noexcept { return records_; }
  const std::vector<RequestFailure>& failures() const noexcept {
    return failures_;
  }

  bool operator==(const RecognitionResult&) const = default;

 private:
  std::string spec_id_;
  VoteCounts counts_;
  double threshold_;
  double p_positive_;
  Decision decision_;
  std::vector<AnswerRecord> records_;
  std::vector<RequestFailure> failures_;
};

// JSON serialization. The *_from_json functions raise ValidationError with
// field paths on malformed documents.
Json to_json(const StateSpec& spec);
StateSpec spec_from_json(const Json& j);

Json to_json(const QuestionVariant& q);
QuestionVariant question_from_json(const Json& j);

Json to_json(const ImageVariant& img);
ImageVariant image_from_json(const Json& j);

Json to_json(const AnswerRecord& r);
AnswerRecord record_from_json(const Json& j);

Json to_json(const VoteCounts& c);
VoteCounts counts_from_json(const Json& j);

Json to_json(const RequestFailure& f);

Json to_json(const RecognitionResult& r);
RecognitionResult result_from_json(const Json& j);

}  // namespace vqastate
