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

// The two evaluation tracks: cross-modal transfer (train the head on images,
// then continue on weighted proponent texts) and zero-shot classification by
// description.

#ifndef IFTX_XMODAL_XMODAL_H_
#define IFTX_XMODAL_XMODAL_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/embed/embedding_matrix.h"
#include "iftx/ift/ift.h"
#include "iftx/trainer/train.h"

namespace iftx::xmodal {

enum class WeightApplication {
  // Text-stage loss w_c * CE, averaged over the batch.
  kLossWeight,
  // The head sees w_c * e_T in place of e_T.
  kEmbeddingScale,
};

absl::StatusOr<WeightApplication> ParseWeightApplication(std::string_view name);
std::string_view WeightApplicationName(WeightApplication w);

struct XModalConfig {
  trainer::TrainConfig image_stage;
  int text_epochs = 30;
  // Text-stage learning rate; its cosine schedule restarts with
  // t_max = text_epochs. Zero skips the text stage.
  double text_lr0 = 0.1;
  int text_batch_size = 64;
  WeightApplication weight_application = WeightApplication::kLossWeight;
  // Copies of each proponent text per epoch.
  int text_replication = 1;
  // L2-normalize images and texts before both stages.
  bool normalize_inputs = true;
};

absl::Status ValidateXModalConfig(const XModalConfig& cfg);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<int> class_sizes;
  std::vector<int> predictions;
};

struct XModalResult {
  Evaluation after_images;  // Step 1 only
  Evaluation after_texts;   // Step 1 + Step 2
  trainer::LinearHead head;
  std::string fingerprint;
};

// Accuracy of a fixed prediction list; classes with no test rows get 0.
Evaluation Score(std::span<const int> predictions, std::span<const int> labels,
                 int num_classes);

Evaluation EvaluateHead(const trainer::LinearHead& head,
                        const embed::EmbeddingMatrix& test,
                        std::span<const int> labels);

// Text-stage training set: each selected text, in proponent-set order,
// text_replication times, labeled by its class.
struct TextStageData {
  embed::EmbeddingMatrix inputs;
  std::vector<int> labels;
  std::vector<double> weights;  // w_c per row
};

absl::StatusOr<TextStageData> BuildTextStage(
    const embed::EmbeddingMatrix& texts,
    const std::vector<ift::ProponentSet>& sets,
    std::span<const double> class_weights, int num_classes,
    const XModalConfig& cfg);

// Step 2 starting from `head`. Empty `class_weights` trains unweighted.
absl::StatusOr<trainer::LinearHead> TrainTextStage(
    const trainer::LinearHead& head, const embed::EmbeddingMatrix& texts,
    const std::vector<ift::ProponentSet>& sets,
    std::span<const double> class_weights, const XModalConfig& cfg);

// Steps 1 and 2, then evaluation on `test`. When `image_head` is given it is
// used as the Step 1 result instead of training one.
absl::StatusOr<XModalResult> RunCrossModal(
    const embed::EmbeddingMatrix& train, std::span<const int> train_labels,
    const embed::EmbeddingMatrix& test, std::span<const int> test_labels,
    const embed::EmbeddingMatrix& texts,
    const std::vector<ift::ProponentSet>& sets,
    std::span<const double> class_weights, int num_classes,
    const XModalConfig& cfg,
    const std::optional<trainer::LinearHead>& image_head = std::nullopt);

// score(x, c) = mean over class-c descriptions of cosine(x, e_T); the
// prediction is the arg max, ties to the lower class index.
absl::StatusOr<Evaluation> ZeroShotClassify(
    const embed::EmbeddingMatrix& test, std::span<const int> test_labels,
    const embed::EmbeddingMatrix& descriptions,
    std::span<const int> description_classes, int num_classes);

struct MethodDescriptions {
  std::string method;
  embed::EmbeddingMatrix embeddings;
  std::vector<int> classes;
};

struct MethodAccuracy {
  std::string method;
  double accuracy = 0.0;
};

// One zero-shot run per method, in input order. Methods that miss classes
// are all reported in one error.
absl::StatusOr<std::vector<MethodAccuracy>> CompareMethods(
    const std::vector<MethodDescriptions>& methods,
    const embed::EmbeddingMatrix& test, std::span<const int> test_labels,
    int num_classes);

enum class Track { kZeroShot, kXModal, kOnlyImages };
std::string_view TrackName(Track t);
absl::StatusOr<Track> ParseTrack(std::string_view name);

// method<TAB>dataset<TAB>track<TAB>accuracy
std::string FormatResultLine(std::string_view method, std::string_view dataset,
                             Track track, double accuracy);

struct ResultRow {
  std::string method;
  std::string dataset;
  Track track = Track::kZeroShot;
  double accuracy = 0.0;
};
absl::StatusOr<std::vector<ResultRow>> ParseResults(std::string_view text);

}  // namespace iftx::xmodal

#endif  // IFTX_XMODAL_XMODAL_H_
