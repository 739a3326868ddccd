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

#include <string>
#include <string_view>
#include <vector>

#include "vqastate/types.hpp"

namespace vqastate {

struct FormTemplate {
  Form form;
  std::string_view pattern;

  static const FormTemplate& of(Form form);
};

inline constexpr std::string_view kIsPattern = "Is {subject} {complement}?";
inline constexpr std::string_view kDoesPattern =
    "Does this image look like {subject} is {complement}?";
inline constexpr std::string_view kCaptionPrompt =
    "What does the image describe?";

/// Renders one question. The wording is substituted into the subject
/// template first, then the article into subject and complement, and the
/// result is injected into the form pattern. Whitespace runs collapse to one
/// space and the text ends in exactly one '?'.
std::string render(const FormTemplate& form, Article article,
                   std::string_view wording, Polarity polarity,
                   const StateSpec& spec);

/// Full question matrix of a spec in (form, article, polarity, wording)
/// order, each coordinate in its canonical declaration order.
std::vector<QuestionVariant> expand_questions(const StateSpec& spec);

struct WordingSuggestion {
  std::string caption;
  std::vector<std::string> candidates;

  bool operator==(const WordingSuggestion&) const = default;
};

// Lower-cased caption tokens without stopwords, in caption order, deduped.
WordingSuggestion suggest_wordings(std::string_view caption);

bool is_stopword(std::string_view lowercase_token);

}  // namespace vqastate
