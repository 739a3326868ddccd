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

#include "vqastate/question_engine.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace vqastate {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

// Removes trailing spaces and question marks so the pattern's own '?' is the
// only terminal one.
std::string strip_terminal_marks(std::string s) {
  while (!s.empty() && (s.back() == '?' || std::isspace(
                                               static_cast<unsigned char>(s.back()))))
    s.pop_back();
  return s;
}

constexpr std::array<std::string_view, 52> kStopwords{
    // articles and determiners
    "a", "an", "the", "this", "that", "these", "those", "some", "its", "it",
    "there", "their",
    // prepositions
    "of", "on", "in", "at", "to", "from", "by", "for", "with", "through",
    "into", "onto", "over", "under", "near", "behind", "above", "below",
    "inside", "outside", "across", "around", "beside", "next", "up", "down",
    // copulas and conjunctions
    "is", "are", "was", "were", "be", "been", "being", "am", "and", "or",
    // caption boilerplate
    "view", "image", "top", "picture"};

}  // namespace

const FormTemplate& FormTemplate::of(Form form) {
  static const FormTemplate is{Form::Is, kIsPattern};
  static const FormTemplate does{Form::Does, kDoesPattern};
  return form == Form::Is ? is : does;
}

std::string render(const FormTemplate& form, Article article,
                   std::string_view wording, Polarity polarity,
                   const StateSpec& spec) {
  const auto& wordings = spec.concept_wordings();
  if (std::find(wordings.begin(), wordings.end(), wording) == wordings.end())
    throw TemplateError("wording '" + std::string(wording) +
                        "' is not one of the spec's concept wordings");

  const std::string_view article_text = to_string(article);
  std::string subject = spec.subject_template();
  replace_all(subject, "{wording}", wording);
  replace_all(subject, "{article}", article_text);

  std::string complement = spec.expression(polarity);
  replace_all(complement, "{wording}", wording);
  replace_all(complement, "{article}", article_text);
  complement = strip_terminal_marks(std::move(complement));

  std::string text(form.pattern);
  replace_all(text, "{subject}", collapse_whitespace(subject));
  replace_all(text, "{complement}", collapse_whitespace(complement));
  text = collapse_whitespace(text);

  if (text.find('{') != std::string::npos || text.find('}') != std::string::npos)
    throw TemplateError("unresolved placeholder in '" + text + "'");
  if (!text.empty())
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text;
}

std::vector<QuestionVariant> expand_questions(const StateSpec& spec) {
  std::vector<QuestionVariant> out;
  out.reserve(spec.forms().size() * spec.articles().size() *
              spec.enabled_polarities().size() *
              spec.concept_wordings().size());
  for (Form form : kAllForms) {
    if (!spec.has_form(form)) continue;
    const auto& tmpl = FormTemplate::of(form);
    for (Article article : kAllArticles) {
      if (!spec.has_article(article)) continue;
      for (Polarity polarity : kAllPolarities) {
        if (!spec.has_polarity(polarity)) continue;
        for (std::size_t w = 0; w < spec.concept_wordings().size(); ++w) {
          out.emplace_back(render(tmpl, article, spec.concept_wordings()[w],
                                  polarity, spec),
                           form, article, polarity, w);
        }
      }
    }
  }
  return out;
}

bool is_stopword(std::string_view token) {
  return std::find(kStopwords.begin(), kStopwords.end(), token) !=
         kStopwords.end();
}

WordingSuggestion suggest_wordings(std::string_view caption) {
  if (caption.empty())
    throw ValidationError("caption", "caption must be non-empty");

  WordingSuggestion out{std::string(caption), {}};
  std::unordered_set<std::string> seen;
  std::string token;
  auto flush = [&] {
    if (!token.empty() && !is_stopword(token) && seen.insert(token).second)
      out.candidates.push_back(token);
    token.clear();
  };
  for (unsigned char c : caption) {
    if (std::isalnum(c) || c == '-' || c == '\'') {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace vqastate
