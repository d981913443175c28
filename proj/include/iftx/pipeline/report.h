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

// Markdown result tables and the projection export.

#ifndef IFTX_PIPELINE_REPORT_H_
#define IFTX_PIPELINE_REPORT_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/embed/embedding_matrix.h"
#include "iftx/judge/judge.h"
#include "iftx/xmodal/xmodal.h"

namespace iftx::pipeline {

// One table for zero-shot rows and one for cross-modal rows (only-images
// first, then every method's xmodal result). Rows are datasets in sorted
// order, columns methods in first-seen order, cells percentages with three
// decimals. Per row the best value is bold and the second-best distinct
// value underlined; ties share the mark. Missing cells show "-".
std::string FormatResultTables(const std::vector<xmodal::ResultRow>& rows);

// Top-1 rate (%) and mean rank per method and criterion.
std::string FormatJudgeTable(const std::vector<judge::JudgeMetric>& metrics);

absl::StatusOr<std::vector<judge::JudgeMetric>> ParseMetrics(
    std::string_view text);

struct ProjectionText {
  int class_index = 0;
  std::string method;
};

// CSV with header id,kind,class,method,v_0..v_{D-1}. Images carry an empty
// method. Fields holding commas or quotes are quoted.
absl::StatusOr<std::string> ExportProjection(
    const embed::EmbeddingMatrix& images, std::span<const int> image_classes,
    const embed::EmbeddingMatrix& texts,
    std::span<const ProjectionText> text_info,
    const std::vector<std::string>& class_names);

}  // namespace iftx::pipeline

#endif  // IFTX_PIPELINE_REPORT_H_
