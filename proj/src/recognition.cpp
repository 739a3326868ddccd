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

#include "vqastate/recognition.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "vqastate/question_engine.hpp"

namespace vqastate {

void AggregationConfig::validate() const {
  std::vector<FieldIssue> issues;
  if (!(threshold > 0.0 && threshold < 1.0))
    issues.push_back({"threshold", "must lie strictly between 0 and 1"});
  if (min_valid < 1) issues.push_back({"min_valid", "must be at least 1"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

IndeterminateError::IndeterminateError(std::string spec_id, VoteCounts counts,
                                       double threshold,
                                       std::vector<AnswerRecord> records,
                                       std::vector<RequestFailure> failures)
    : Error("indeterminate: " + std::to_string(counts.valid()) +
            " valid vote(s)"),
      spec_id_(std::move(spec_id)),
      counts_(counts),
      threshold_(threshold),
      records_(std::move(records)),
      failures_(std::move(failures)) {}

AnswerClass normalize_answer(std::string_view raw) {
  auto is_trim = [](unsigned char c) {
    return std::isspace(c) || c == '.' || c == ',' || c == '!' || c == '?';
  };
  std::size_t begin = 0;
  while (begin < raw.size() &&
         std::isspace(static_cast<unsigned char>(raw[begin])))
    ++begin;
  std::size_t end = raw.size();
  while (end > begin && is_trim(static_cast<unsigned char>(raw[end - 1]))) --end;

  std::string token;
  token.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i)
    token.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
  if (token == "yes") return AnswerClass::Yes;
  if (token == "no") return AnswerClass::No;
  return AnswerClass::Invalid;
}

Vote vote_of(AnswerClass answer, Polarity polarity, AggregationMode mode) {
  if (mode == AggregationMode::LiteralYes) {
    switch (answer) {
      case AnswerClass::Yes:
        return Vote::ForPositive;
      case AnswerClass::No:
        return Vote::ForNegative;
      case AnswerClass::Invalid:
        return Vote::NoVote;
    }
  }
  return corrected_vote(answer, polarity);
}

AnswerRecord make_record(const QuestionVariant& question,
                         std::size_t image_variant, std::string raw_text) {
  const auto cls = normalize_answer(raw_text);
  return AnswerRecord(question, image_variant, std::move(raw_text), cls,
                      corrected_vote(cls, question.polarity()));
}

VoteCounts tally(std::span<const AnswerRecord> records, AggregationMode mode) {
  VoteCounts c;
  for (const auto& r : records) {
    switch (vote_of(r.answer_class(), r.question().polarity(), mode)) {
      case Vote::ForPositive:
        ++c.for_positive;
        break;
      case Vote::ForNegative:
        ++c.for_negative;
        break;
      case Vote::NoVote:
        ++c.invalid;
        break;
    }
  }
  return c;
}

RecognitionResult aggregate(std::vector<AnswerRecord> records,
                            const AggregationConfig& cfg, std::string spec_id,
                            std::uint64_t transport_failures,
                            std::vector<RequestFailure> failures) {
  cfg.validate();
  VoteCounts counts = tally(records, cfg.aggregation_mode);
  counts.transport_failures = transport_failures;
  if (counts.valid() < cfg.min_valid || counts.valid() == 0)
    throw IndeterminateError(std::move(spec_id), counts, cfg.threshold,
                             std::move(records), std::move(failures));
  return RecognitionResult(std::move(spec_id), counts, cfg.threshold,
                           std::move(records), std::move(failures));
}

RecognitionResult recognize_image(const StateSpec& spec,
                                  const ImageVariant& image,
                                  VqaBackend& backend,
                                  const AugmentConfig& aug_cfg,
                                  const AggregationConfig& agg_cfg) {
  aug_cfg.validate();
  agg_cfg.validate();

  const auto variants = augment(image, aug_cfg);
  const auto questions = expand_questions(spec);
  const std::size_t n_variants = variants.size();
  const std::size_t total = questions.size() * n_variants;

  // Slot k holds question k / n_variants asked against variant k % n_variants.
  std::vector<std::optional<std::string>> answers(total);
  std::vector<std::string> transport_errors(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      const auto& q = questions[k / n_variants];
      const auto& v = variants[k % n_variants];
      try {
        answers[k] = backend.ask(BackendRequest::vqa(v, q.text()));
      } catch (const TransportError& e) {
        transport_errors[k] = e.what();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
      }
    }
  };

  const std::size_t n_workers =
      std::min(total, std::max<std::size_t>(1, backend.max_in_flight()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<AnswerRecord> records;
  std::vector<RequestFailure> failures;
  records.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    const auto& q = questions[k / n_variants];
    const std::size_t variant = k % n_variants;
    if (answers[k])
      records.push_back(make_record(q, variant, std::move(*answers[k])));
    else
      failures.push_back({q, variant, transport_errors[k]});
  }
  const auto n_failures = failures.size();
  return aggregate(std::move(records), agg_cfg, spec.id(), n_failures,
                   std::move(failures));
}

RecognitionResult recognize(const StateSpec& spec,
                            std::span<const std::uint8_t> image_bytes,
                            VqaBackend& backend, const AugmentConfig& aug_cfg,
                            const AggregationConfig& agg_cfg) {
  aug_cfg.validate();
  agg_cfg.validate();
  return recognize_image(spec, decode_image(image_bytes), backend, aug_cfg,
                         agg_cfg);
}

Json recognition_document(const RecognitionResult& result) {
  return to_json(result);
}

Json recognition_document(const IndeterminateError& error) {
  // Same shape as a decided result so readers need one schema.
  Json records = Json::array();
  for (const auto& r : error.records()) records.push_back(to_json(r));
  Json failures = Json::array();
  for (const auto& f : error.failures()) failures.push_back(to_json(f));
  return Json{{"spec_id", error.spec_id()},
              {"decision", "indeterminate"},
              {"p_positive", nullptr},
              {"threshold", error.threshold()},
              {"counts", to_json(error.counts())},
              {"records", std::move(records)},
              {"failures", std::move(failures)}};
}

}  // namespace vqastate
