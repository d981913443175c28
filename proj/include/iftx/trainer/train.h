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

// Mini-batch SGD for the linear head, with learning-rate schedules and
// periodic checkpoints. The checkpoint trajectory is what the influence
// estimator consumes.

#ifndef IFTX_TRAINER_TRAIN_H_
#define IFTX_TRAINER_TRAIN_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/embed/embedding_matrix.h"
#include "iftx/trainer/linear_head.h"

namespace iftx::trainer {

enum class LrSchedule {
  // lr0 * (1 + cos(pi * min(t, t_max) / t_max)) / 2
  kCosine,
  // lr0 * gamma^floor(t / step_every)
  kStep,
};

// How per-sample loss weights combine within a mini-batch.
enum class WeightReduction {
  // sum_i w_i * CE_i
  kSum,
  // (1 / |batch|) * sum_i w_i * CE_i
  kBatchMean,
};

struct TrainConfig {
  double lr0 = 0.1;
  int batch_size = 64;
  int epochs = 200;
  int t_max = 200;
  uint64_t seed = 0;
  // A checkpoint is kept after every epoch e with (e + 1) % checkpoint_every
  // == 0. Zero disables checkpoints.
  int checkpoint_every = 10;
  // L2-normalize the inputs before training.
  bool normalize_inputs = false;
  LrSchedule schedule = LrSchedule::kCosine;
  int step_every = 30;
  double step_gamma = 0.1;
  // First epoch to run; lets a run resume from a checkpoint with the same
  // shuffles and learning rates it would have seen uninterrupted.
  int start_epoch = 0;
  WeightReduction weight_reduction = WeightReduction::kSum;
};

absl::Status ValidateTrainConfig(const TrainConfig& cfg);

double CosineLr(int t, const TrainConfig& cfg);
// Learning rate for epoch t under cfg.schedule. The schedule steps per epoch.
double LearningRate(int t, const TrainConfig& cfg);

struct Checkpoint {
  LinearHead params;
  // Learning rate used during the epoch that produced `params`.
  double lr_at_save = 0.0;
  // Completed epochs.
  int epoch = 0;
};

struct TrainResult {
  LinearHead head;
  std::vector<Checkpoint> checkpoints;
  // Unweighted mean cross-entropy over the whole data set after each epoch.
  std::vector<double> epoch_losses;
};

// Trains `init` on (inputs, labels).
//
// Each epoch shuffles the sample order with a seed derived from (seed,
// epoch), walks it in batches of batch_size (the last partial batch is kept)
// and takes one plain SGD step per batch. Without `loss_weights` the batch
// objective is the mean cross-entropy; with them it is the weighted loss
// reduced per cfg.weight_reduction.
absl::StatusOr<TrainResult> Train(const LinearHead& init,
                                  const embed::EmbeddingMatrix& inputs,
                                  std::span<const int> labels,
                                  const TrainConfig& cfg,
                                  std::span<const double> loss_weights = {});

// Gradient of one mini-batch objective over `rows`, accumulated in double in
// row order. `loss` receives the batch objective.
struct BatchGradient {
  HeadGradient grad;
  double loss = 0.0;
};
absl::StatusOr<BatchGradient> ComputeBatchGradient(
    const LinearHead& head, const embed::EmbeddingMatrix& inputs,
    std::span<const int> labels, std::span<const size_t> rows,
    std::span<const double> loss_weights, WeightReduction reduction);

// Unweighted mean cross-entropy over all rows.
absl::StatusOr<double> MeanLoss(const LinearHead& head,
                                const embed::EmbeddingMatrix& inputs,
                                std::span<const int> labels);

// Fraction of rows whose prediction equals the label.
double Accuracy(const LinearHead& head, const embed::EmbeddingMatrix& inputs,
                std::span<const int> labels);

// XCKPT1 checkpoint files:
//   XCKPT1 dim=<D> classes=<C> epoch=<e> lr=<decimal>\n
//   <C*D little-endian float32 W, row-major><C float32 b>
std::string EncodeCheckpoint(const Checkpoint& ckpt);
absl::StatusOr<Checkpoint> DecodeCheckpoint(std::string_view bytes);
absl::Status WriteCheckpoint(const Checkpoint& ckpt, const std::string& path);
absl::StatusOr<Checkpoint> ReadCheckpoint(const std::string& path);

}  // namespace iftx::trainer

#endif  // IFTX_TRAINER_TRAIN_H_
