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

// Every text artifact starts with a fingerprint line,
//
//   # iftx-fingerprint: <hex>
//
// JSON artifacts carry a top-level "fingerprint" key instead. Binary
// checkpoints are listed in a stamped index file.

#ifndef IFTX_PIPELINE_ARTIFACTS_H_
#define IFTX_PIPELINE_ARTIFACTS_H_

#include <string>
#include <string_view>

#include "absl/status/statusor.h"

namespace iftx::pipeline {

inline constexpr std::string_view kFingerprintPrefix = "# iftx-fingerprint: ";

std::string Stamp(std::string_view fingerprint, std::string_view body);

struct StampedText {
  std::string fingerprint;  // empty when the file carries none
  std::string body;
};

StampedText SplitStamp(std::string contents);

// Reads an artifact produced by `producer` (a subcommand name). A missing
// file is NotFound with a message naming the subcommand to run.
absl::StatusOr<StampedText> ReadArtifact(const std::string& path,
                                         std::string_view producer);

// For inputs that come from outside the pipeline.
absl::StatusOr<std::string> ReadInput(const std::string& path,
                                      std::string_view what);

// Fails unless `found` equals `expected`; unstamped files always fail.
absl::Status CheckFingerprint(const std::string& path,
                              std::string_view expected,
                              std::string_view found);

}  // namespace iftx::pipeline

#endif  // IFTX_PIPELINE_ARTIFACTS_H_
