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

#include "iftx/corpus/descriptions.h"

#include <algorithm>
#include <set>

#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::corpus {

std::string MakeTextId(std::string_view method, int class_index, int ordinal) {
  return fmt::format("{}/{:04d}/{:04d}", method, class_index, ordinal);
}

absl::StatusOr<std::vector<DescriptionRecord>> ParseDescriptions(
    std::string_view contents, std::string_view method,
    const DatasetManifest& manifest) {
  std::vector<DescriptionRecord> records;
  std::set<std::string> unknown;
  const auto lines = util::SplitLines(contents);
  for (size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = lines[n];
    const std::string_view trimmed = util::TrimWhitespace(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      return absl::InvalidArgumentError(util::StrCat(
          "line ", n + 1, ": expected class_name<TAB>description"));
    }
    const std::string_view name = util::TrimWhitespace(line.substr(0, tab));
    const std::string_view text = util::TrimWhitespace(line.substr(tab + 1));
    if (text.empty()) {
      return absl::InvalidArgumentError(
          util::StrCat("line ", n + 1, ": empty description for '", name, "'"));
    }
    const std::optional<int> cls = manifest.FindClass(name);
    if (!cls) {
      unknown.insert(std::string(name));
      continue;
    }
    DescriptionRecord record;
    record.class_index = *cls;
    record.text = std::string(text);
    record.method = std::string(method);
    records.push_back(std::move(record));
  }
  if (!unknown.empty()) {
    return absl::InvalidArgumentError(fmt::format(
        "unknown class name(s): {}", fmt::join(unknown, ", ")));
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const DescriptionRecord& a, const DescriptionRecord& b) {
                     return a.class_index < b.class_index;
                   });
  int ordinal = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].class_index != records[i - 1].class_index) {
      ordinal = 0;
    }
    records[i].text_id = MakeTextId(method, records[i].class_index, ordinal++);
  }
  return records;
}

absl::StatusOr<std::vector<DescriptionRecord>> LoadDescriptions(
    const std::string& path, std::string_view method,
    const DatasetManifest& manifest) {
  IFTX_ASSIGN_OR_RETURN(const std::string contents, util::ReadFile(path));
  auto records = ParseDescriptions(contents, method, manifest);
  if (!records.ok()) {
    return absl::Status(records.status().code(),
                        util::StrCat(path, ": ", records.status().message()));
  }
  return records;
}

std::string FormatDescriptions(const std::vector<DescriptionRecord>& records,
                               const DatasetManifest& manifest,
                               const std::vector<std::string>& header_comments) {
  std::string out;
  for (const std::string& comment : header_comments) {
    util::StrAppend(&out, "# ", comment, "\n");
  }
  for (const DescriptionRecord& r : records) {
    // Tabs and newlines inside a description would break the line format.
    std::string text = r.text;
    std::replace(text.begin(), text.end(), '\t', ' ');
    std::replace(text.begin(), text.end(), '\n', ' ');
    util::StrAppend(&out, manifest.classes[r.class_index].name, "\t", text,
                    "\n");
  }
  return out;
}

std::vector<const DescriptionRecord*> RecordsOfClass(
    const std::vector<DescriptionRecord>& records, int class_index) {
  std::vector<const DescriptionRecord*> out;
  for (const DescriptionRecord& r : records) {
    if (r.class_index == class_index) out.push_back(&r);
  }
  return out;
}

}  // namespace iftx::corpus
