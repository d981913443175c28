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

// TracIn influence over a checkpoint trajectory.
//
// For a training sample t and a validation sample v the score is
//
//   sum_j eta_j * <grad loss(w_j, t), grad loss(w_j, v)>
//
// For the linear softmax head the gradient of sample (x, y) is the outer
// product r x^T with residual r = p - e_y, plus r for the bias, so the inner
// product factors as <r_t, r_v> * (<x_t, x_v> + 1). TracInMatrix uses that
// factorization with one Gram matrix shared by all checkpoints.

#ifndef IFTX_INFLUENCE_TRACIN_H_
#define IFTX_INFLUENCE_TRACIN_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "iftx/embed/embedding_matrix.h"
#include "iftx/trainer/train.h"

namespace iftx::influence {

struct CheckpointSet {
  std::vector<trainer::Checkpoint> checkpoints;
};

// Nonempty, one shape throughout, finite parameters.
absl::Status ValidateCheckpointSet(const CheckpointSet& set);

// values is train-major: values[i * val_ids.size() + j].
struct InfluenceMatrix {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<double> values;

  size_t num_train() const { return train_ids.size(); }
  size_t num_val() const { return val_ids.size(); }
  double at(size_t i, size_t j) const { return values[i * val_ids.size() + j]; }
};

absl::Status ValidateInfluenceMatrix(const InfluenceMatrix& m);

struct TracInOptions {
  // Include the bias gradient (the "+1" in the factorization).
  bool include_bias = true;
};

absl::StatusOr<double> TracInPair(const CheckpointSet& ckpts,
                                  std::span<const float> x_train, int y_train,
                                  std::span<const float> x_val, int y_val,
                                  const TracInOptions& opts = {});

absl::StatusOr<InfluenceMatrix> TracInMatrix(
    const CheckpointSet& ckpts, const embed::EmbeddingMatrix& train,
    std::span<const int> train_labels, const embed::EmbeddingMatrix& val,
    std::span<const int> val_labels, const TracInOptions& opts = {});

// Per-sample flattened loss gradients at one checkpoint.
struct GradientTable {
  std::string tag;
  double eta = 0.0;
  int length = 0;
  std::vector<std::string> ids;
  std::vector<float> data;  // ids.size() x length

  std::span<const float> row(size_t r) const {
    return std::span<const float>(data).subspan(r * length, length);
  }
};

absl::Status ValidateGradientTable(const GradientTable& table);

// Explicit gradients of the linear head at a checkpoint, flattened as W
// (row-major) followed by b when include_bias is set. eta is the
// checkpoint's learning rate.
absl::StatusOr<GradientTable> GradientTableFromCheckpoint(
    const trainer::Checkpoint& ckpt, const embed::EmbeddingMatrix& inputs,
    std::span<const int> labels, std::string tag, bool include_bias = true);

// values = sum_j etas[j] * G_train_j G_val_j^T, where each table must hold a
// row for every requested train and val id.
absl::StatusOr<InfluenceMatrix> TracInMatrixExternal(
    std::span<const GradientTable> tables, std::span<const double> etas,
    const std::vector<std::string>& train_ids,
    const std::vector<std::string>& val_ids);

// XGRAD1 files:
//   XGRAD1 len=<L> count=<N> eta=<decimal> tag=<string>\n
//   N escaped id lines, then N*L little-endian float32 values.
std::string EncodeGradientTable(const GradientTable& table);
absl::StatusOr<GradientTable> DecodeGradientTable(std::string_view bytes);
absl::Status WriteGradientTable(const GradientTable& table,
                                const std::string& path);
absl::StatusOr<GradientTable> ReadGradientTable(const std::string& path);

enum class ProponentMode { kTopK, kPositive };

absl::StatusOr<ProponentMode> ParseProponentMode(std::string_view name);
std::string_view ProponentModeName(ProponentMode mode);

// For each val column, train indices ordered by influence descending with
// ties broken by ascending train id. kTopK keeps the first k; kPositive keeps
// entries > 0.
std::vector<std::vector<size_t>> SelectProponentImages(
    const InfluenceMatrix& infl, ProponentMode mode, int k);

// TSV with a header row of val ids, one row per train id.
std::string FormatInfluenceMatrix(const InfluenceMatrix& m);
absl::StatusOr<InfluenceMatrix> ParseInfluenceMatrix(std::string_view text);

}  // namespace iftx::influence

#endif  // IFTX_INFLUENCE_TRACIN_H_
