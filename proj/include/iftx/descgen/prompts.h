/*
 * Copyright 2026 The IFTX Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Two-stage description prompts. Stage one asks for the visual components of
// a class; stage two asks for a one-line, noun-heavy summary of a single
// component, optionally pointing the model at the class's Wikipedia page.

#ifndef IFTX_DESCGEN_PROMPTS_H_
#define IFTX_DESCGEN_PROMPTS_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace iftx::descgen {

inline constexpr std::string_view kClassNameHole = "{class name}";
inline constexpr std::string_view kComponentHole = "{components of each class}";
inline constexpr std::string_view kUrlHole = "{Wikipedia url}";

enum class PromptStage { kComponents, kSummary };

struct PromptTemplate {
  PromptStage stage = PromptStage::kComponents;
  // The final question; holes are filled by Render.
  std::string template_text;
  // Worked Q/A example placed before the question.
  std::string few_shot_prefix;
};

// Holes the template must contain, each exactly once.
std::vector<std::string_view> RequiredHoles(const PromptTemplate& t);

absl::Status ValidateTemplate(const PromptTemplate& t);

// Prefix followed by the question with every hole replaced. Fails when a
// value is missing or empty, or when anything hole-shaped survives.
absl::StatusOr<std::string> Render(
    const PromptTemplate& t,
    const std::map<std::string_view, std::string>& values);

const PromptTemplate& ComponentTemplate();

// With `wiki` false the url clause is replaced by the class name so that
// summaries of the same component stay distinct across classes.
const PromptTemplate& SummaryTemplate(bool wiki);

absl::StatusOr<std::string> BuildComponentPrompt(std::string_view subject);

// `url` present selects the grounded wording. Without a url, `class_name`
// names the subject instead.
absl::StatusOr<std::string> BuildSummaryPrompt(
    std::string_view component, const std::optional<std::string>& url,
    std::string_view class_name = "");

struct ComponentList {
  std::string subject;
  std::vector<std::string> components;
};

// Keeps "<n>. text" lines (an "A :" scaffold in front is tolerated), drops
// the numbering, trims, and removes repeats. No numbered line is an error
// that quotes the raw response.
absl::StatusOr<ComponentList> ExtractComponents(std::string_view response,
                                                std::string_view subject = "");

// Single-line description from a stage-two answer: scaffold stripped and
// internal whitespace runs collapsed.
absl::StatusOr<std::string> CleanSummary(std::string_view response);

}  // namespace iftx::descgen

#endif  // IFTX_DESCGEN_PROMPTS_H_
