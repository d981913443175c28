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

// The single configuration document driving every subcommand, and its
// fingerprint. Relative paths resolve against the directory holding the
// config file.
//
//   {
//     "seed": 0,
//     "output": "out",
//     "paths": {"manifest": "...", "image_embeddings": "...",
//               "text_embeddings": "...", "descriptions": "...",
//               "llm_fixture": "...", "judge_fixture": "...",
//               "cache": "..."},
//     "baselines": [{"method": "menon", "descriptions": "...",
//                    "embeddings": "..."}],
//     "split": {"mode": "carve_val_from_train", "val_fraction": 0.2},
//     "describe": {"backend": "fixture", "model": "...", "wiki": true, ...},
//     "train": {"lr0": 0.1, "batch_size": 64, "epochs": 200, ...},
//     "influence": {"include_bias": true},
//     "ift": {"mode": "ift", "image_scope": "class_proponents", ...},
//     "xmodal": {"text_epochs": 30, "text_lr0": 0.1, ...},
//     "judge": {"enabled": true, "backend": "fixture", ...},
//     "export_projection": true
//   }
//
// Every key is optional except paths.manifest and paths.image_embeddings;
// unknown keys are errors.

#ifndef IFTX_PIPELINE_CONFIG_H_
#define IFTX_PIPELINE_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/corpus/manifest.h"
#include "iftx/ift/ift.h"
#include "iftx/trainer/train.h"
#include "iftx/xmodal/xmodal.h"

namespace iftx::pipeline {

enum class Backend { kFixture, kOpenAi, kCacheOnly, kFile };
absl::StatusOr<Backend> ParseBackend(std::string_view name);
std::string_view BackendName(Backend b);

struct BaselineSpec {
  std::string method;
  std::string descriptions;
  std::string embeddings;
};

struct Paths {
  std::string manifest;
  std::string image_embeddings;
  std::string text_embeddings;
  std::string descriptions;
  std::string llm_fixture;
  std::string judge_fixture;
  std::string cache;  // empty: <output>/cache
};

struct DescribeConfig {
  // kFile copies paths.descriptions instead of prompting.
  Backend backend = Backend::kFixture;
  std::string model = "gpt-3.5-turbo";
  bool wiki = true;
  int max_retries = 2;
  int concurrency = 4;
};

struct JudgeConfig {
  bool enabled = true;
  Backend backend = Backend::kFixture;
  std::string model = "gpt-4o";
  int num_classes = 100;
  int instances_per_class = 3;
  int max_retries = 2;
  int concurrency = 4;
};

struct PipelineConfig {
  // Not part of the fingerprint.
  std::string config_dir = ".";
  std::string output_dir = "out";

  uint64_t seed = 0;
  Paths paths;
  std::vector<BaselineSpec> baselines;
  // Unset keeps the manifest's own policy.
  std::optional<corpus::SplitMode> split_mode;
  std::optional<double> val_fraction;
  DescribeConfig describe;
  // L2-normalize every embedding once, before training, scoring and
  // evaluation.
  bool normalize_inputs = true;
  trainer::TrainConfig train;
  bool include_bias = true;
  ift::ScoringMode scoring;
  int texts_per_class = ift::kProponentTextsPerClass;
  xmodal::XModalConfig xmodal;
  JudgeConfig judge;
  bool export_projection = true;

  // Resolves `path` against config_dir unless it is absolute.
  std::string Resolve(const std::string& path) const;
  std::string OutPath(std::string_view name) const;
  std::string CacheDir() const;
};

absl::StatusOr<PipelineConfig> ParseConfig(std::string_view json_text,
                                           std::string config_dir);
absl::StatusOr<PipelineConfig> LoadConfig(const std::string& path);

// Canonical JSON of every setting except the output directory, with paths
// as written. Keys sorted, no insignificant whitespace.
std::string CanonicalJson(const PipelineConfig& cfg);

// Lower-case hex SHA-256 of CanonicalJson.
std::string Fingerprint(const PipelineConfig& cfg);

// "ift" / "if" / "clip" as accepted on the command line.
absl::StatusOr<ift::ScoreMode> ParseModeFlag(std::string_view flag);
// "loss" / "scale".
absl::StatusOr<xmodal::WeightApplication> ParseWeightFlag(std::string_view flag);

}  // namespace iftx::pipeline

#endif  // IFTX_PIPELINE_CONFIG_H_
