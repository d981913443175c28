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

// Runs both prompting stages over every class of a manifest and turns the
// answers into description records.

#ifndef IFTX_DESCGEN_GENERATE_H_
#define IFTX_DESCGEN_GENERATE_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/corpus/descriptions.h"
#include "iftx/corpus/manifest.h"
#include "iftx/descgen/llm_client.h"
#include "iftx/descgen/prompts.h"

namespace iftx::descgen {

struct GenerationRequest {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  bool wiki_grounded = true;
  int max_retries = 2;
  // Upper bound on requests in flight.
  int concurrency = 4;
  std::string method = "ours";
};

absl::Status ValidateGenerationRequest(const GenerationRequest& req);

enum class Stage { kComponents, kSummary };

struct GenerationError {
  int class_index = 0;
  Stage stage = Stage::kComponents;
  std::string component;  // empty for stage one
  std::string message;
};

struct GenerationStats {
  int component_requests = 0;  // distinct stage-one prompts
  int summary_requests = 0;
  int cache_hits = 0;
  int client_calls = 0;  // including retries
};

struct GenerationResult {
  // Grouped by class index, component order within a class.
  std::vector<corpus::DescriptionRecord> records;
  // Components per stage-one subject, in first-use order.
  std::vector<ComponentList> components;
  std::vector<GenerationError> errors;
  GenerationStats stats;
};

// Stage one is asked once per subject: the superclass when a class has one,
// otherwise the class name. Stage two is asked once per (class, component).
// Every fresh answer is written to `cache` when one is given. Failures after
// the retry budget are collected in `errors`; records for everything else
// are still returned. In grounded mode a class without a Wikipedia url is an
// error for that class.
absl::StatusOr<GenerationResult> GenerateDescriptions(
    const corpus::DatasetManifest& manifest, const GenerationRequest& req,
    LlmClient& client, ResponseCache* cache);

// One line per error: "<class name>\t<stage>\t<component>\t<message>".
std::string FormatErrors(const std::vector<GenerationError>& errors,
                         const corpus::DatasetManifest& manifest);

}  // namespace iftx::descgen

#endif  // IFTX_DESCGEN_GENERATE_H_
