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

// Third-party evaluation of descriptions by a vision-language model: each
// instance shows two images of a class and one description from each of
// five methods in shuffled order; the judge names the best description per
// criterion (Top-1) or ranks all five with ties (rank groups).

#ifndef IFTX_JUDGE_JUDGE_H_
#define IFTX_JUDGE_JUDGE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/corpus/descriptions.h"
#include "iftx/corpus/manifest.h"
#include "iftx/descgen/llm_client.h"

namespace iftx::judge {

inline constexpr int kEntriesPerInstance = 5;

enum class Criterion { kHelpful, kInformative, kRelevant };
inline constexpr std::array<Criterion, 3> kCriteria = {
    Criterion::kHelpful, Criterion::kInformative, Criterion::kRelevant};
std::string_view CriterionName(Criterion c);

struct JudgeEntry {
  std::string method;
  std::string text;
};

struct EvalInstance {
  std::string instance_id;
  int class_index = 0;
  std::string image_ref_a;
  std::string image_ref_b;
  // Presentation order: entries[k] is shown as description k + 1.
  std::vector<JudgeEntry> entries;
};

absl::Status ValidateInstance(const EvalInstance& inst);

// Entries in a seeded random order.
absl::StatusOr<EvalInstance> MakeInstance(std::string instance_id,
                                          int class_index, std::string image_a,
                                          std::string image_b,
                                          std::vector<JudgeEntry> entries,
                                          uint64_t seed);

struct MethodPool {
  std::string method;
  std::vector<corpus::DescriptionRecord> records;
};

struct SamplingOptions {
  // Classes drawn without replacement; 0 or more than available means all.
  int num_classes = 100;
  int instances_per_class = 3;
  uint64_t seed = 0;
};

// Draws classes, two reference images per class (test split first, then
// any split), and for every instance one description per method. Each
// instance of a class gets a different description per method while the
// method has enough. Image refs are the samples' source paths.
absl::StatusOr<std::vector<EvalInstance>> SampleInstances(
    const corpus::DatasetManifest& manifest,
    const std::vector<MethodPool>& pools, const SamplingOptions& options);

absl::StatusOr<std::string> BuildTop1Prompt(const EvalInstance& inst);
absl::StatusOr<std::string> BuildRankPrompt(const EvalInstance& inst);

// Description positions are 1-based, as shown to the judge.
struct Top1Judgment {
  std::array<std::vector<int>, 3> winners;  // by Criterion
};

struct RankGroups {
  // groups[c][r] holds the positions at dense rank r + 1.
  std::array<std::vector<std::vector<int>>, 3> groups;

  // Dense rank of every position 1..5 under one criterion (index 0 unused).
  std::array<int, kEntriesPerInstance + 1> RanksOf(Criterion c) const;
};

absl::StatusOr<Top1Judgment> ParseTop1(std::string_view response);
absl::StatusOr<RankGroups> ParseRankGroups(std::string_view response);

struct JudgedInstance {
  std::string instance_id;
  int class_index = 0;
  std::vector<std::string> methods;  // presentation order
  std::optional<Top1Judgment> top1;
  std::optional<RankGroups> ranks;
};

struct JudgeMetric {
  std::string method;
  Criterion criterion = Criterion::kHelpful;
  double top1_rate = 0.0;  // fraction in [0, 1]
  double mean_rank = 0.0;  // NaN when no instance carried ranks
  int n_instances = 0;
};

// Top-1 rates come from Top-1 judgments, falling back to rank group 1 for
// instances without one. Ties count as a win for every tied method. Rows are
// ordered by method name, then criterion.
absl::StatusOr<std::vector<JudgeMetric>> Aggregate(
    std::vector<JudgedInstance> instances);

// method<TAB>criterion<TAB>top1_rate<TAB>mean_rank, with a header line.
std::string FormatMetrics(const std::vector<JudgeMetric>& metrics);

// One JSON object per line: instance_id, class_index, image_refs, methods
// (the presentation permutation) and the raw Top-1 and rank responses.
struct JudgmentRecord {
  EvalInstance instance;
  std::string top1_response;
  std::string rank_response;
};
std::string FormatJudgments(const std::vector<JudgmentRecord>& records);
absl::StatusOr<std::vector<JudgmentRecord>> ParseJudgmentsFile(
    std::string_view jsonl);

// Parses the raw responses of a record.
absl::StatusOr<JudgedInstance> Interpret(const JudgmentRecord& record);

struct JudgeOptions {
  std::string model = "gpt-4o";
  int max_retries = 2;
  int concurrency = 4;
};

struct JudgeRun {
  std::vector<JudgmentRecord> records;  // sorted by instance id
  // "<instance id>: <message>" for instances that failed.
  std::vector<std::string> errors;
  int client_calls = 0;
  int cache_hits = 0;
};

// Asks both prompts for every instance with the two images attached.
absl::StatusOr<JudgeRun> RunJudge(const std::vector<EvalInstance>& instances,
                                  const JudgeOptions& options,
                                  descgen::LlmClient& client,
                                  descgen::ResponseCache* cache);

}  // namespace iftx::judge

#endif  // IFTX_JUDGE_JUDGE_H_
