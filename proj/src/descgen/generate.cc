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

#include "iftx/descgen/generate.h"

#include <algorithm>
#include <map>
#include <optional>

#include "iftx/descgen/prompts.h"
#include "iftx/util/parallel.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::descgen {
namespace {

std::string SubjectOf(const corpus::ClassEntry& c) {
  return c.superclass.has_value() && !c.superclass->empty() ? *c.superclass
                                                            : c.name;
}

}  // namespace

absl::Status ValidateGenerationRequest(const GenerationRequest& req) {
  if (req.max_retries < 0) {
    return absl::InvalidArgumentError("max_retries must be >= 0");
  }
  if (req.concurrency < 1) {
    return absl::InvalidArgumentError("concurrency must be >= 1");
  }
  if (req.model.empty()) return absl::InvalidArgumentError("empty model name");
  if (req.method.empty()) return absl::InvalidArgumentError("empty method name");
  return absl::OkStatus();
}

absl::StatusOr<GenerationResult> GenerateDescriptions(
    const corpus::DatasetManifest& manifest, const GenerationRequest& req,
    LlmClient& client, ResponseCache* cache) {
  IFTX_RETURN_IF_ERROR(ValidateGenerationRequest(req));
  CallStats counters;
  GenerationResult result;

  // Stage one, one prompt per distinct subject.
  std::vector<std::string> subjects;
  std::map<std::string, size_t> subject_slot;
  std::vector<size_t> class_subject;
  for (const corpus::ClassEntry& c : manifest.classes) {
    const std::string s = SubjectOf(c);
    const auto [it, fresh] = subject_slot.emplace(s, subjects.size());
    if (fresh) subjects.push_back(s);
    class_subject.push_back(it->second);
  }
  std::vector<absl::StatusOr<ComponentList>> lists(
      subjects.size(), absl::UnknownError("not run"));
  util::ParallelFor(subjects.size(), req.concurrency, [&](size_t i) {
    absl::StatusOr<std::string> prompt = BuildComponentPrompt(subjects[i]);
    if (!prompt.ok()) {
      lists[i] = prompt.status();
      return;
    }
    absl::StatusOr<std::string> answer =
        CompleteWithRetry({req.model, *prompt, req.temperature, {}},
                          req.max_retries, client, cache, counters);
    if (!answer.ok()) {
      lists[i] = answer.status();
      return;
    }
    lists[i] = ExtractComponents(*answer, subjects[i]);
  });
  result.stats.component_requests = static_cast<int>(subjects.size());
  for (auto& l : lists) {
    if (l.ok()) result.components.push_back(*l);
  }

  // Stage two, one prompt per (class, component).
  struct Task {
    int class_index;
    std::string component;
    std::string prompt;
  };
  std::vector<Task> tasks;
  for (const corpus::ClassEntry& c : manifest.classes) {
    const absl::StatusOr<ComponentList>& list = lists[class_subject[c.index]];
    if (!list.ok()) {
      result.errors.push_back({c.index, Stage::kComponents, "",
                               std::string(list.status().message())});
      continue;
    }
    std::optional<std::string> url;
    if (req.wiki_grounded) {
      if (!c.wikipedia_url.has_value() || c.wikipedia_url->empty()) {
        result.errors.push_back({c.index, Stage::kSummary, "",
                                 "class has no Wikipedia url"});
        continue;
      }
      url = c.wikipedia_url;
    }
    for (const std::string& component : list->components) {
      absl::StatusOr<std::string> prompt =
          BuildSummaryPrompt(component, url, c.name);
      if (!prompt.ok()) {
        result.errors.push_back({c.index, Stage::kSummary, component,
                                 std::string(prompt.status().message())});
        continue;
      }
      tasks.push_back({c.index, component, *std::move(prompt)});
    }
  }
  std::vector<absl::StatusOr<std::string>> summaries(
      tasks.size(), absl::UnknownError("not run"));
  util::ParallelFor(tasks.size(), req.concurrency, [&](size_t i) {
    absl::StatusOr<std::string> answer =
        CompleteWithRetry({req.model, tasks[i].prompt, req.temperature, {}},
                          req.max_retries, client, cache, counters);
    summaries[i] = answer.ok() ? CleanSummary(*answer) : answer.status();
  });
  result.stats.summary_requests = static_cast<int>(tasks.size());

  std::map<int, int> ordinal;
  for (size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    if (!summaries[i].ok()) {
      result.errors.push_back({t.class_index, Stage::kSummary, t.component,
                               std::string(summaries[i].status().message())});
      continue;
    }
    corpus::DescriptionRecord rec;
    rec.class_index = t.class_index;
    rec.text = *summaries[i];
    rec.method = req.method;
    rec.component_name = t.component;
    rec.wiki_grounded = req.wiki_grounded;
    rec.text_id = corpus::MakeTextId(req.method, t.class_index,
                                     ordinal[t.class_index]++);
    result.records.push_back(std::move(rec));
  }
  std::stable_sort(result.errors.begin(), result.errors.end(),
                   [](const GenerationError& a, const GenerationError& b) {
                     return a.class_index < b.class_index;
                   });
  result.stats.cache_hits = counters.cache_hits.load();
  result.stats.client_calls = counters.client_calls.load();
  return result;
}

std::string FormatErrors(const std::vector<GenerationError>& errors,
                         const corpus::DatasetManifest& manifest) {
  std::string out;
  for (const GenerationError& e : errors) {
    const std::string name =
        e.class_index >= 0 && e.class_index < manifest.num_classes()
            ? manifest.classes[e.class_index].name
            : std::to_string(e.class_index);
    util::StrAppend(&out, name, "\t",
                    e.stage == Stage::kComponents ? "components" : "summary",
                    "\t", e.component, "\t", util::EscapeLine(e.message), "\n");
  }
  return out;
}

}  // namespace iftx::descgen
