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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqastate/backend.hpp"
#include "vqastate/image.hpp"
#include "vqastate/types.hpp"

namespace vqastate {

struct AggregationConfig {
  double threshold = 0.5;
  AggregationMode aggregation_mode = AggregationMode::PolarityCorrected;
  std::uint64_t min_valid = 1;

  void validate() const;
  bool operator==(const AggregationConfig&) const = default;
};

// No decision possible: fewer valid votes than AggregationConfig::min_valid.
// Carries everything gathered so callers can still report it.
class IndeterminateError : public Error {
 public:
  IndeterminateError(std::string spec_id, VoteCounts counts, double threshold,
                     std::vector<AnswerRecord> records,
                     std::vector<RequestFailure> failures);

  const std::string& spec_id() const noexcept { return spec_id_; }
  const VoteCounts& counts() const noexcept { return counts_; }
  double threshold() const noexcept { return threshold_; }
  const std::vector<AnswerRecord>& records() const noexcept { return records_; }
  const std::vector<RequestFailure>& failures() const noexcept {
    return failures_;
  }

 private:
  std::string spec_id_;
  VoteCounts counts_;
  double threshold_;
  std::vector<AnswerRecord> records_;
  std::vector<RequestFailure> failures_;
};

/// Lower-cases, trims whitespace and trailing ". , ! ?" and accepts only the
/// bare tokens "yes" and "no".
AnswerClass normalize_answer(std::string_view raw);

Vote vote_of(AnswerClass answer, Polarity polarity, AggregationMode mode);

AnswerRecord make_record(const QuestionVariant& question,
                         std::size_t image_variant, std::string raw_text);

// Tallies votes under cfg.aggregation_mode. The records' stored votes are
// always polarity-corrected; literal mode recounts from the answer classes.
VoteCounts tally(std::span<const AnswerRecord> records, AggregationMode mode);

RecognitionResult aggregate(std::vector<AnswerRecord> records,
                            const AggregationConfig& cfg,
                            std::string spec_id = {},
                            std::uint64_t transport_failures = 0,
                            std::vector<RequestFailure> failures = {});

/// Runs one ensemble: decode, augment, expand, ask every (question, variant)
/// pair with bounded parallelism, then aggregate. Records are ordered by
/// (question order, variant index) whatever the completion order.
RecognitionResult recognize(const StateSpec& spec,
                            std::span<const std::uint8_t> image_bytes,
                            VqaBackend& backend, const AugmentConfig& aug_cfg,
                            const AggregationConfig& agg_cfg);

RecognitionResult recognize_image(const StateSpec& spec,
                                  const ImageVariant& image,
                                  VqaBackend& backend,
                                  const AugmentConfig& aug_cfg,
                                  const AggregationConfig& agg_cfg);

// Result document shared by the CLI and the service. Indeterminate outcomes
// use decision "indeterminate" and p_positive null.
Json recognition_document(const RecognitionResult& result);
Json recognition_document(const IndeterminateError& error);

}  // namespace vqastate
