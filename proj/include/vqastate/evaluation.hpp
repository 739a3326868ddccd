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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqastate/backend.hpp"
#include "vqastate/image.hpp"
#include "vqastate/recognition.hpp"
#include "vqastate/types.hpp"

namespace vqastate {

inline constexpr int kReportSchemaVersion = 1;

enum class Score { Correct, Wrong, Invalid };

std::string_view to_string(Score s);

// Invalid answers score Invalid; otherwise Correct iff the polarity-corrected
// vote points at the true state.
Score score_answer(const AnswerRecord& record, Polarity truth);

struct Tally {
  std::uint64_t correct = 0;
  std::uint64_t wrong = 0;
  std::uint64_t invalid = 0;

  void add(Score s);
  Tally& operator+=(const Tally& o);
  std::uint64_t valid() const noexcept { return correct + wrong; }
  std::uint64_t total() const noexcept { return correct + wrong + invalid; }
  // Correct / (Correct + Wrong); absent when there are no valid answers.
  std::optional<double> correct_rate() const;
  // Invalid / all answers; absent when there are no answers.
  std::optional<double> invalid_rate() const;

  bool operator==(const Tally&) const = default;
};

// Accuracy matrix indexed [image_state][question_polarity], positive first.
struct CellMatrix {
  std::array<std::array<Tally, 2>, 2> cells{};

  Tally& at(Polarity image_state, Polarity question) {
    return cells[static_cast<int>(image_state)][static_cast<int>(question)];
  }
  const Tally& at(Polarity image_state, Polarity question) const {
    return cells[static_cast<int>(image_state)][static_cast<int>(question)];
  }
  Tally row(Polarity image_state) const;
  Tally column(Polarity question) const;
  Tally total() const;

  bool operator==(const CellMatrix&) const = default;
};

struct Breakdown {
  std::map<Form, Tally> by_form;
  std::map<Article, Tally> by_article;
  Tally overall;

  void add(const AnswerRecord& record, Score s);
  bool operator==(const Breakdown&) const = default;
};

struct SpecSummary {
  std::string spec_id;
  CellMatrix cell_matrix;
  Breakdown breakdown;
  std::uint64_t images = 0;
  std::uint64_t decisions_correct = 0;

  bool operator==(const SpecSummary&) const = default;
};

struct ImageResult {
  std::size_t entry_index = 0;
  std::string image_path;
  std::string spec_id;
  Polarity truth = Polarity::Positive;
  Tally tally;
  std::uint64_t transport_failures = 0;
  // nullopt means indeterminate.
  std::optional<Decision> decision;
  std::optional<double> p_positive;

  // Indeterminate outcomes are never correct.
  bool decision_correct() const;
  bool operator==(const ImageResult&) const = default;
};

// Mean and population variance of the per-image correct rate over images of
// one state, optionally restricted to one question form.
struct StateSummary {
  std::string spec_id;
  Polarity truth = Polarity::Positive;
  std::optional<Form> form;
  std::uint64_t images = 0;
  std::optional<double> mean_correct_rate;
  std::optional<double> variance;

  bool operator==(const StateSummary&) const = default;
};

struct EntryError {
  std::size_t entry_index = 0;
  std::string image_path;
  std::string spec_id;
  std::string kind;
  std::string message;

  bool operator==(const EntryError&) const = default;
};

struct EvaluationReport {
  int schema_version = kReportSchemaVersion;
  std::vector<SpecSummary> specs;
  Breakdown breakdown;
  std::vector<ImageResult> per_image;
  std::vector<StateSummary> state_summary;
  std::vector<EntryError> errors;

  const SpecSummary* find_spec(std::string_view id) const;
  bool operator==(const EvaluationReport&) const = default;
};

struct CorpusEntry {
  std::string image_path;
  // Optional mock side-channel label; see mock_label().
  std::string label;
  std::map<std::string, Polarity> labels;

  // `label` if set, otherwise "id=polarity" pairs joined by commas.
  std::string mock_label() const;
  bool operator==(const CorpusEntry&) const = default;
};

struct CorpusManifest {
  std::vector<CorpusEntry> entries;
  // Relative image paths resolve against this directory.
  std::string base_dir;

  std::string resolve(const CorpusEntry& entry) const;
  bool operator==(const CorpusManifest&) const = default;
};

Json to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const Json& j, std::string base_dir = "");
CorpusManifest load_manifest(const std::string& path);

// Checks that every image exists and decodes and that every label names a
// known spec.
std::vector<FieldIssue> validate_manifest(const CorpusManifest& manifest,
                                          const std::vector<StateSpec>& specs);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

struct EvaluationOptions {
  AugmentConfig augment;
  AggregationConfig aggregation;
  // Spec ids to evaluate; empty means every spec an entry is labeled for.
  std::vector<std::string> spec_ids;
  ProgressFn progress;
};

/// Runs a recognition for every (entry, labeled spec) pair and scores every
/// answer. Entry i uses seed derive_key(augment.seed, i) for augmentation and
/// the mock stream. Failing entries are reported in `errors` and skipped.
EvaluationReport evaluate_corpus(const CorpusManifest& manifest,
                                 const std::vector<StateSpec>& specs,
                                 const BackendBinding& backend,
                                 const EvaluationOptions& options);

std::uint64_t entry_seed(std::uint64_t seed, std::size_t entry_index);

struct JointRow {
  Polarity truth_a = Polarity::Positive;
  Polarity truth_b = Polarity::Positive;
  std::uint64_t entries = 0;
  std::uint64_t a_correct = 0;
  std::uint64_t b_correct = 0;
  std::uint64_t both_correct = 0;
  Tally a_answers;
  Tally b_answers;

  bool operator==(const JointRow&) const = default;
};

struct MultiSpecReport {
  std::string spec_a;
  std::string spec_b;
  EvaluationReport report_a;
  EvaluationReport report_b;
  // Rows in (a, b) order: (+,+), (+,-), (-,+), (-,-).
  std::array<JointRow, 4> joint{};
  std::vector<EntryError> errors;

  bool operator==(const MultiSpecReport&) const = default;
};

MultiSpecReport multi_spec_scenario(const CorpusManifest& manifest,
                                    const StateSpec& spec_a,
                                    const StateSpec& spec_b,
                                    const BackendBinding& backend,
                                    const EvaluationOptions& options);

Json to_json(const Tally& t);
Json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const Json& j);
Json to_json(const MultiSpecReport& report);

// Plain-text tables laid out like the accuracy matrices and the form/article
// breakdown table.
std::string render_report_text(const EvaluationReport& report,
                               const std::vector<StateSpec>& specs);
std::string render_joint_text(const MultiSpecReport& report);

}  // namespace vqastate
