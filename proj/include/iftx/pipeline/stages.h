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

// One function per subcommand. Each reads its declared inputs, writes its
// declared outputs under the output directory and stamps them with the
// config fingerprint.
//
//   split        manifest.json
//   describe     descriptions_ours.tsv (+ describe_errors.tsv)
//   train        checkpoints.tsv, checkpoints/*.xckpt, head_images.xckpt,
//                train_log.tsv
//   influence    influence.tsv
//   ift          ift_scores.tsv
//   select       proponents.tsv, class_weights.tsv
//   xmodal       results_xmodal.tsv
//   zeroshot     results_zeroshot.tsv
//   judge        judgments.jsonl, judge_metrics.tsv
//   export-proj  projection.csv
//   report       report.md
//
// Status codes follow one convention: InvalidArgument for configuration
// problems, NotFound for a missing upstream artifact or input, anything else
// for failures while computing.

#ifndef IFTX_PIPELINE_STAGES_H_
#define IFTX_PIPELINE_STAGES_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "iftx/judge/judge.h"
#include "iftx/pipeline/config.h"

namespace iftx::pipeline {

absl::Status RunSplit(const PipelineConfig& cfg);
absl::Status RunDescribe(const PipelineConfig& cfg);
absl::Status RunTrain(const PipelineConfig& cfg);
absl::Status RunInfluence(const PipelineConfig& cfg);
absl::Status RunIft(const PipelineConfig& cfg);
absl::Status RunSelect(const PipelineConfig& cfg);
absl::Status RunXModal(const PipelineConfig& cfg);
absl::Status RunZeroShot(const PipelineConfig& cfg);
absl::Status RunJudgeStage(const PipelineConfig& cfg);
// The instances the judge stage would ask about, with image refs as stored
// in the manifest.
absl::StatusOr<std::vector<judge::EvalInstance>> BuildJudgeInstances(
    const PipelineConfig& cfg);
absl::Status RunExportProjection(const PipelineConfig& cfg);

// Merges result and judge-metric files into markdown. Inputs must share one
// fingerprint unless `force` is set.
absl::Status RunReport(const std::vector<std::string>& inputs, bool force,
                       const std::string& output_path);

// The default report inputs of an output directory: whichever of the
// results and judge-metric files exist.
std::vector<std::string> DefaultReportInputs(const PipelineConfig& cfg);

// Every stage in order, then the report. Writes config.resolved.json first.
absl::Status RunPipeline(const PipelineConfig& cfg);

}  // namespace iftx::pipeline

#endif  // IFTX_PIPELINE_STAGES_H_
