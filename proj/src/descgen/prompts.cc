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

#include "iftx/descgen/prompts.h"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::descgen {
namespace {

constexpr std::string_view kComponentPrefix =
    "Q : Can you tell me the components of American Bulldog from the "
    "perspective of appearance?\n"
    "A : 1. Coat Type and Texture\n"
    "2. Coat Color\n"
    "3. Body Build\n"
    "4. Size\n"
    "5. Head\n"
    "6. Muzzle and Nose\n"
    "7. Eyes\n"
    "8. Ears\n"
    "9. Tail\n"
    "10. Legs and Paws\n"
    "11. Coat Patterns\n"
    "12. Facial Features\n"
    "13. Unique Breed Traits\n"
    "\n";

constexpr std::string_view kComponentQuestion =
    "Q : Can you tell me the components of {class name} from the perspective "
    "of appearance?\n"
    "A :";

constexpr std::string_view kExemplarAnswer =
    "A : A short to medium-length muzzle with a nose that can be black, "
    "brown, or pigmented, often matching the coat color, and it is a "
    "distinctive feature on the breed's square-shaped head.\n"
    "\n";

constexpr std::string_view kSummaryTail =
    " in one line composed of nouns. If you couldn't find related "
    "information, you must answer general information you know";

std::string SummaryPrefix(bool wiki) {
  return util::StrCat(
      "Q : Please summarize the information of appearance about nose ",
      wiki ? "in this url https://en.wikipedia.org/wiki/American_Bulldog"
           : "of American Bulldog",
      kSummaryTail, " like the above questions.\n", kExemplarAnswer);
}

std::string SummaryQuestion(bool wiki) {
  return util::StrCat(
      "Q : Please summarize the information of appearance about ",
      kComponentHole, wiki ? " in this url " : " of ",
      wiki ? kUrlHole : kClassNameHole, kSummaryTail, ".\nA :");
}

size_t CountOf(std::string_view text, std::string_view needle) {
  size_t n = 0;
  for (size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// "A :" or "A:" at the start of a line.
std::string_view StripAnswerScaffold(std::string_view line) {
  line = util::TrimWhitespace(line);
  if (line.empty() || line[0] != 'A') return line;
  std::string_view rest = util::TrimWhitespace(line.substr(1));
  if (rest.empty() || rest[0] != ':') return line;
  return util::TrimWhitespace(rest.substr(1));
}

}  // namespace

std::vector<std::string_view> RequiredHoles(const PromptTemplate& t) {
  if (t.stage == PromptStage::kComponents) return {kClassNameHole};
  if (t.template_text.find(kUrlHole) != std::string::npos) {
    return {kComponentHole, kUrlHole};
  }
  return {kComponentHole, kClassNameHole};
}

absl::Status ValidateTemplate(const PromptTemplate& t) {
  for (std::string_view hole : RequiredHoles(t)) {
    const size_t n = CountOf(t.template_text, hole);
    if (n != 1) {
      return absl::InvalidArgumentError(
          util::StrCat("template has ", n, " copies of ", hole));
    }
  }
  for (std::string_view hole : {kClassNameHole, kComponentHole, kUrlHole}) {
    if (t.few_shot_prefix.find(hole) != std::string::npos) {
      return absl::InvalidArgumentError(
          util::StrCat("few-shot prefix contains ", hole));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::string> Render(
    const PromptTemplate& t,
    const std::map<std::string_view, std::string>& values) {
  IFTX_RETURN_IF_ERROR(ValidateTemplate(t));
  struct Slot {
    size_t pos;
    std::string_view hole;
  };
  std::vector<Slot> slots;
  for (std::string_view hole : RequiredHoles(t)) {
    const auto it = values.find(hole);
    if (it == values.end() || util::TrimWhitespace(it->second).empty()) {
      return absl::InvalidArgumentError(
          util::StrCat("no value for ", hole));
    }
    slots.push_back({t.template_text.find(hole), hole});
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.pos < b.pos; });
  std::string out = t.few_shot_prefix;
  size_t at = 0;
  for (const Slot& s : slots) {
    out.append(t.template_text, at, s.pos - at);
    out.append(values.at(s.hole));
    at = s.pos + s.hole.size();
  }
  out.append(t.template_text, at);
  return out;
}

const PromptTemplate& ComponentTemplate() {
  static const PromptTemplate* t = new PromptTemplate{
      PromptStage::kComponents, std::string(kComponentQuestion),
      std::string(kComponentPrefix)};
  return *t;
}

const PromptTemplate& SummaryTemplate(bool wiki) {
  static const PromptTemplate* with_url = new PromptTemplate{
      PromptStage::kSummary, SummaryQuestion(true), SummaryPrefix(true)};
  static const PromptTemplate* without_url = new PromptTemplate{
      PromptStage::kSummary, SummaryQuestion(false), SummaryPrefix(false)};
  return wiki ? *with_url : *without_url;
}

absl::StatusOr<std::string> BuildComponentPrompt(std::string_view subject) {
  subject = util::TrimWhitespace(subject);
  if (subject.empty()) {
    return absl::InvalidArgumentError("empty class name");
  }
  return Render(ComponentTemplate(), {{kClassNameHole, std::string(subject)}});
}

absl::StatusOr<std::string> BuildSummaryPrompt(
    std::string_view component, const std::optional<std::string>& url,
    std::string_view class_name) {
  component = util::TrimWhitespace(component);
  if (component.empty()) {
    return absl::InvalidArgumentError("empty component");
  }
  if (url.has_value()) {
    if (util::TrimWhitespace(*url).empty()) {
      return absl::InvalidArgumentError("empty url");
    }
    return Render(SummaryTemplate(true), {{kComponentHole, std::string(component)},
                                          {kUrlHole, *url}});
  }
  class_name = util::TrimWhitespace(class_name);
  if (class_name.empty()) {
    return absl::InvalidArgumentError("no url and no class name");
  }
  return Render(SummaryTemplate(false),
                {{kComponentHole, std::string(component)},
                 {kClassNameHole, std::string(class_name)}});
}

absl::StatusOr<ComponentList> ExtractComponents(std::string_view response,
                                                std::string_view subject) {
  ComponentList out;
  out.subject = std::string(subject);
  std::unordered_set<std::string> seen;
  for (std::string_view line : util::SplitLines(response)) {
    line = StripAnswerScaffold(line);
    size_t digits = 0;
    while (digits < line.size() &&
           std::isdigit(static_cast<unsigned char>(line[digits]))) {
      ++digits;
    }
    if (digits == 0 || digits >= line.size() || line[digits] != '.') continue;
    const std::string_view text = util::TrimWhitespace(line.substr(digits + 1));
    if (text.empty()) continue;
    if (seen.emplace(text).second) out.components.emplace_back(text);
  }
  if (out.components.empty()) {
    return absl::InvalidArgumentError(util::StrCat(
        "no numbered components in response: ", util::EscapeLine(response)));
  }
  return out;
}

absl::StatusOr<std::string> CleanSummary(std::string_view response) {
  std::string out;
  for (std::string_view line : util::SplitLines(response)) {
    line = StripAnswerScaffold(line);
    for (char ch : line) {
      const bool space = std::isspace(static_cast<unsigned char>(ch));
      if (space) {
        if (!out.empty() && out.back() != ' ') out.push_back(' ');
      } else {
        out.push_back(ch);
      }
    }
    if (!out.empty() && out.back() != ' ') out.push_back(' ');
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  if (out.empty()) {
    return absl::InvalidArgumentError("empty summary response");
  }
  return out;
}

}  // namespace iftx::descgen
