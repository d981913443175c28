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

// Influence-plus-CLIP scoring of candidate texts, proponent-text selection
// and per-class weights.
//
// For a text T of class c with image set I_c (class-c train images, all of
// them or only the proponents of class-c validation images) and validation
// set V_c:
//
//   influence_term = mean over (i, v) in I_c x V_c of Influence(i, v)
//   clip_term      = mean over i in I_c of cosine(i, T)
//   total          = influence_term + clip_term

#ifndef IFTX_IFT_IFT_H_
#define IFTX_IFT_IFT_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/corpus/manifest.h"
#include "iftx/embed/embedding_matrix.h"
#include "iftx/influence/tracin.h"

namespace iftx::ift {

// values[i * text_ids.size() + t] = cosine(image i, text t).
struct ClipScoreTable {
  std::vector<std::string> image_ids;
  std::vector<std::string> text_ids;
  std::vector<double> values;

  double at(size_t i, size_t t) const { return values[i * text_ids.size() + t]; }
};

absl::StatusOr<ClipScoreTable> ClipTable(const embed::EmbeddingMatrix& images,
                                         const embed::EmbeddingMatrix& texts);

enum class ScoreMode { kIft, kInfluenceOnly, kClipOnly };
enum class ImageScope { kClassTrainAll, kClassProponents };

absl::StatusOr<ScoreMode> ParseScoreMode(std::string_view name);
std::string_view ScoreModeName(ScoreMode mode);
absl::StatusOr<ImageScope> ParseImageScope(std::string_view name);
std::string_view ImageScopeName(ImageScope scope);

struct ScoringMode {
  ScoreMode mode = ScoreMode::kIft;
  ImageScope image_scope = ImageScope::kClassProponents;
  // How proponent images are picked per validation sample when
  // image_scope is kClassProponents.
  influence::ProponentMode proponent_mode = influence::ProponentMode::kPositive;
  int proponent_k = 10;
};

struct IftRecord {
  std::string text_id;
  int class_index = 0;
  double influence_term = 0.0;
  double clip_term = 0.0;
  double total = 0.0;
};

// Class of each id, looked up in the manifest's samples.
absl::StatusOr<std::vector<int>> ClassesOf(const corpus::DatasetManifest& m,
                                           const std::vector<std::string>& ids);

// One record per text, in clip.text_ids order.
//
// train_classes and val_classes align with infl.train_ids / infl.val_ids;
// text_classes aligns with clip.text_ids. Every train image used must have a
// row in clip. A class that has texts but no qualifying images (or no
// validation images) is an error naming the class.
absl::StatusOr<std::vector<IftRecord>> IftScores(
    const influence::InfluenceMatrix& infl, const ClipScoreTable& clip,
    std::span<const int> train_classes, std::span<const int> val_classes,
    std::span<const int> text_classes, const ScoringMode& mode);

struct ProponentSet {
  int class_index = 0;
  // Sorted by total descending, ties by ascending text id.
  std::vector<IftRecord> texts;
  // Mean total over `texts`.
  double class_weight_raw = 0.0;
};

inline constexpr int kProponentTextsPerClass = 10;

// Per class (ascending class index), the top per_class_k records by total.
std::vector<ProponentSet> SelectProponentTexts(
    const std::vector<IftRecord>& records,
    int per_class_k = kProponentTextsPerClass);

struct ClassWeights {
  std::vector<double> weights;  // indexed by class
  // All raw scores were unusable; weights fell back to uniform.
  bool degenerate = false;
};

inline constexpr double kWeightShiftEpsilon = 1e-6;

// w_c = IFT_c / sum IFT_c, after shifting every IFT_c by (-min + 1e-6) when
// min IFT_c <= 0. Every class in [0, num_classes) needs a proponent set.
absl::StatusOr<ClassWeights> DeriveClassWeights(
    const std::vector<ProponentSet>& sets, int num_classes);

// class<TAB>text_id<TAB>influence_term<TAB>clip_term<TAB>total<TAB>selected
// with one header row.
std::string FormatIftReport(const std::vector<IftRecord>& records,
                            const std::vector<ProponentSet>& sets,
                            const corpus::DatasetManifest& manifest);

// Reads a report written by FormatIftReport. The selected column is not
// consulted; class names resolve through the manifest.
absl::StatusOr<std::vector<IftRecord>> ParseIftReport(
    std::string_view text, const corpus::DatasetManifest& manifest);

}  // namespace iftx::ift

#endif  // IFTX_IFT_IFT_H_
