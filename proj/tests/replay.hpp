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

#include <memory>
#include <string>

#include "support.hpp"
#include "vqastate/evaluation.hpp"

namespace vqastate::test {

// Corpus of `per_state` positive and `per_state` negative entries for the
// door spec. Entries share one small PNG; per-entry seeds keep draws apart.
inline CorpusManifest door_corpus(const TempDir& dir, std::size_t per_state) {
  dir.write("door.png", encode_png(noise_image(6, 4, 11)));
  CorpusManifest m;
  m.base_dir = dir.path().string();
  for (auto truth : {Polarity::Positive, Polarity::Negative})
    for (std::size_t i = 0; i < per_state; ++i)
      m.entries.push_back({"door.png", "", {{"door", truth}}});
  return m;
}

// Door cell rates: [image open/closed][question open/closed].
inline constexpr double kDoorCellRates[2][2] = {{0.983, 0.824}, {0.992, 0.988}};
inline constexpr double kDoorRowRates[2] = {0.904, 0.990};
inline constexpr double kDoorColumnRates[2] = {0.987, 0.906};

inline std::shared_ptr<const MockRuleSet> door_cell_rules() {
  return std::make_shared<const MockRuleSet>(
      cell_rules("door", kDoorCellRates[0][0], kDoorCellRates[0][1], kDoorCellRates[1][0],
                 kDoorCellRates[1][1], "open", "closed"));
}

// Invalid rate 0.124 on Is-form and 0.000 on Does-form. Per-article
// rates over both forms are 0.047, 0.079, 0.037, 0.084; since Does never
// emits Invalid, the Is-form rate per article is twice that.
inline constexpr double kInvalidIs = 0.124;
inline constexpr double kInvalidDoes = 0.000;
inline constexpr double kInvalidByArticle[4] = {0.047, 0.079, 0.037, 0.084};

inline std::shared_ptr<const MockRuleSet> invalid_rate_rules() {
  auto s = std::make_shared<MockRuleSet>();
  const char* arts[] = {"a", "the", "this", "that"};
  for (int a = 0; a < 4; ++a) {
    const double inv = 2.0 * kInvalidByArticle[a];
    MockRule r;
    r.question_pattern = std::string("Is ") + arts[a] + " *";
    r.distribution = {{"It is hard to say", inv},
                      {"yes", (1.0 - inv) / 2.0},
                      {"no", (1.0 - inv) / 2.0}};
    s->rules.push_back(r);
  }
  MockRule does;
  does.question_pattern = "Does *";
  does.distribution = {{"yes", 0.5}, {"no", 0.5}};
  s->rules.push_back(does);
  return s;
}

inline EvaluationReport run_replay(const CorpusManifest& corpus,
                                   std::shared_ptr<const MockRuleSet> rules,
                                   std::uint64_t seed) {
  EvaluationOptions opts;
  opts.augment.seed = seed;
  return evaluate_corpus(corpus, {door_spec()}, BackendBinding::mock(rules), opts);
}

}  // namespace vqastate::test
