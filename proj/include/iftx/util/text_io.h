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

// File and string helpers shared by every artifact reader and writer.

#ifndef IFTX_UTIL_TEXT_IO_H_
#define IFTX_UTIL_TEXT_IO_H_

#include <cstdint>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/base/config.h"
#include "absl/strings/string_view.h"
#include "fmt/format.h"
#include "fmt/ranges.h"

#if !defined(ABSL_USES_STD_STRING_VIEW)
// Lets absl::Status::message() flow straight into fmt-based formatting.
template <>
struct fmt::formatter<absl::string_view> : fmt::formatter<std::string_view> {
  template <typename FormatContext>
  auto format(absl::string_view s, FormatContext& ctx) {
    return fmt::formatter<std::string_view>::format(
        std::string_view(s.data(), s.size()), ctx);
  }
};
#endif

namespace iftx::util {

// Concatenates the fmt "{}" rendering of every argument.
template <typename... Args>
std::string StrCat(const Args&... args) {
  std::string out;
  (fmt::format_to(std::back_inserter(out), "{}", args), ...);
  return out;
}

template <typename... Args>
void StrAppend(std::string* out, const Args&... args) {
  (fmt::format_to(std::back_inserter(*out), "{}", args), ...);
}

// Reads the whole file as bytes. Missing files yield NotFound.
absl::StatusOr<std::string> ReadFile(const std::string& path);

// Writes `contents` to `path` via a temporary file and rename, creating the
// parent directory if needed.
absl::Status WriteFile(const std::string& path, std::string_view contents);

bool FileExists(const std::string& path);

std::string_view TrimWhitespace(std::string_view s);

// Splits on '\n'. A trailing '\r' on each line is dropped. A final empty line
// after the last '\n' is not returned.
std::vector<std::string_view> SplitLines(std::string_view text);

// Splits on `sep`, dropping empty fields.
std::vector<std::string_view> SplitFields(std::string_view text, char sep);

// Escapes '\\', '\n' and '\r' so that an id occupies exactly one line.
std::string EscapeLine(std::string_view s);
absl::StatusOr<std::string> UnescapeLine(std::string_view s);

// Shortest decimal that parses back to the same double.
std::string FormatDouble(double value);
absl::StatusOr<double> ParseDouble(std::string_view s);
absl::StatusOr<int64_t> ParseInt(std::string_view s);

// Lower-cases ASCII and folds '_' to ' ' and runs of spaces to one space.
std::string FoldName(std::string_view name);

}  // namespace iftx::util

#endif  // IFTX_UTIL_TEXT_IO_H_
