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

// Candidate class descriptions, ours or a baseline's, in the tab-separated
// description format:
//
//   # comment
//   class_name<TAB>description text
//
// Blank lines and '#' lines are skipped. Class names resolve against the
// manifest with case and underscore/space folding.

#ifndef IFTX_CORPUS_DESCRIPTIONS_H_
#define IFTX_CORPUS_DESCRIPTIONS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/corpus/manifest.h"

namespace iftx::corpus {

struct DescriptionRecord {
  int class_index = 0;
  std::string text;
  // "ours", "menon", "labo", "cupl", "vdt", ...
  std::string method;
  std::optional<std::string> component_name;
  bool wiki_grounded = false;
  // "<method>/<class:04>/<ordinal within class:04>"; also the row id of the
  // description's embedding.
  std::string text_id;
};

std::string MakeTextId(std::string_view method, int class_index, int ordinal);

// Parses a description file. Records come back grouped by class index, file
// order within a class, with text ids assigned by that order.
absl::StatusOr<std::vector<DescriptionRecord>> ParseDescriptions(
    std::string_view contents, std::string_view method,
    const DatasetManifest& manifest);

absl::StatusOr<std::vector<DescriptionRecord>> LoadDescriptions(
    const std::string& path, std::string_view method,
    const DatasetManifest& manifest);

// Writes records in the description format. `header_comments` lines are
// emitted first, each prefixed with "# ".
std::string FormatDescriptions(const std::vector<DescriptionRecord>& records,
                               const DatasetManifest& manifest,
                               const std::vector<std::string>& header_comments);

// Records of one class, in order.
std::vector<const DescriptionRecord*> RecordsOfClass(
    const std::vector<DescriptionRecord>& records, int class_index);

}  // namespace iftx::corpus

#endif  // IFTX_CORPUS_DESCRIPTIONS_H_
