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

// Dataset manifests: the class registry, per-sample split membership and the
// policy used to obtain a validation split.
//
// A manifest is a JSON document:
//
//   {
//     "dataset": "cub200",
//     "classes": [{"index": 0, "name": "Black footed Albatross",
//                  "superclass": "birds",
//                  "wikipedia_url": "https://en.wikipedia.org/wiki/..."}],
//     "samples": [{"id": "img_0001", "class": 0, "split": "train",
//                  "path": "images/0001.jpg"}],
//     "split": {"mode": "official", "val_fraction": 0.2, "seed": 0}
//   }

#ifndef IFTX_CORPUS_MANIFEST_H_
#define IFTX_CORPUS_MANIFEST_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace iftx::corpus {

enum class Split { kTrain, kVal, kTest };

std::string_view SplitName(Split split);
absl::StatusOr<Split> ParseSplit(std::string_view name);

enum class SplitMode { kOfficial, kCarveValFromTrain, kRandom };

std::string_view SplitModeName(SplitMode mode);
absl::StatusOr<SplitMode> ParseSplitMode(std::string_view name);

struct ClassEntry {
  int index = 0;
  std::string name;
  std::optional<std::string> superclass;
  std::optional<std::string> wikipedia_url;
};

struct SampleRecord {
  std::string sample_id;
  int class_index = 0;
  Split split = Split::kTrain;
  std::string source_path;
};

struct SplitSpec {
  SplitMode mode = SplitMode::kOfficial;
  // Only consulted when mode != kOfficial.
  double val_fraction = 0.2;
  uint64_t seed = 0;
};

struct DatasetManifest {
  std::string dataset_name;
  // Ordered by index; classes[i].index == i.
  std::vector<ClassEntry> classes;
  std::vector<SampleRecord> samples;
  SplitSpec split_policy;

  int num_classes() const { return static_cast<int>(classes.size()); }

  // Number of samples in each split, indexed by Split.
  std::array<size_t, 3> SplitSizes() const;

  // Samples of one split, in manifest order.
  std::vector<const SampleRecord*> SamplesIn(Split split) const;

  // Resolves a class name with case and underscore/space folding.
  std::optional<int> FindClass(std::string_view name) const;
};

// Checks every manifest invariant; errors carry the offending location.
absl::Status ValidateManifest(const DatasetManifest& manifest);

absl::StatusOr<DatasetManifest> ParseManifest(std::string_view json_text);
absl::StatusOr<DatasetManifest> LoadManifest(const std::string& path);

// Serializes to the JSON layout above with stable key order.
std::string SerializeManifest(const DatasetManifest& manifest);
absl::Status SaveManifest(const DatasetManifest& manifest,
                          const std::string& path);

// Moves floor(val_fraction * n_c) train samples of every class c to val,
// chosen by a seeded shuffle of that class's train samples. Fails if the
// manifest already has validation samples or a class has fewer than two
// train samples.
absl::StatusOr<DatasetManifest> CarveValidation(const DatasetManifest& manifest,
                                                const SplitSpec& spec);

// For datasets without any official partition: every sample of class c is
// reassigned, floor(val_fraction * n_c) to val, the same count to test and the
// remainder to train. Classes with fewer than three samples are rejected.
absl::StatusOr<DatasetManifest> AssignRandomSplit(
    const DatasetManifest& manifest, const SplitSpec& spec);

// Number of samples carved from a class holding `class_train_count` samples.
size_t CarvedCount(size_t class_train_count, double val_fraction);

}  // namespace iftx::corpus

#endif  // IFTX_CORPUS_MANIFEST_H_
