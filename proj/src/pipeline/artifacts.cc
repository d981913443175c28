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

#include "iftx/pipeline/artifacts.h"

#include "iftx/util/text_io.h"

namespace iftx::pipeline {

std::string Stamp(std::string_view fingerprint, std::string_view body) {
  return util::StrCat(kFingerprintPrefix, fingerprint, "\n", body);
}

StampedText SplitStamp(std::string contents) {
  StampedText out;
  if (!std::string_view(contents).starts_with(kFingerprintPrefix)) {
    out.body = std::move(contents);
    return out;
  }
  const size_t nl = contents.find('\n');
  const size_t start = kFingerprintPrefix.size();
  out.fingerprint = std::string(util::TrimWhitespace(
      std::string_view(contents).substr(start, nl == std::string::npos
                                                   ? std::string::npos
                                                   : nl - start)));
  out.body = nl == std::string::npos ? "" : contents.substr(nl + 1);
  return out;
}

absl::StatusOr<StampedText> ReadArtifact(const std::string& path,
                                         std::string_view producer) {
  absl::StatusOr<std::string> contents = util::ReadFile(path);
  if (!contents.ok()) {
    if (contents.status().code() == absl::StatusCode::kNotFound) {
      return absl::NotFoundError(util::StrCat(
          "missing artifact ", path, "; run `iftx ", producer, "` first"));
    }
    return contents.status();
  }
  return SplitStamp(*std::move(contents));
}

absl::StatusOr<std::string> ReadInput(const std::string& path,
                                      std::string_view what) {
  absl::StatusOr<std::string> contents = util::ReadFile(path);
  if (!contents.ok() && contents.status().code() == absl::StatusCode::kNotFound) {
    return absl::NotFoundError(
        util::StrCat("missing input ", path, " (", what, ")"));
  }
  return contents;
}

absl::Status CheckFingerprint(const std::string& path,
                              std::string_view expected,
                              std::string_view found) {
  if (found == expected) return absl::OkStatus();
  return absl::FailedPreconditionError(util::StrCat(
      path, " was produced under config ",
      found.empty() ? "<none>" : found.substr(0, 12), ", current config is ",
      expected.substr(0, 12)));
}

}  // namespace iftx::pipeline
