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

#ifndef IFTX_EMBED_KERNELS_H_
#define IFTX_EMBED_KERNELS_H_

#include <span>

#include "absl/status/statusor.h"
#include "iftx/embed/embedding_matrix.h"

namespace iftx::embed {

// Sums accumulate in double.
double Dot(std::span<const float> u, std::span<const float> v);
double SquaredNorm(std::span<const float> u);

// Cosine similarity clamped to [-1, 1]. A zero vector is an error.
absl::StatusOr<double> Cosine(std::span<const float> u,
                              std::span<const float> v);

// Scales every row to unit L2 norm. Matrices already flagged normalized are
// returned unchanged. A zero row is an error naming the row id.
absl::StatusOr<EmbeddingMatrix> L2Normalize(const EmbeddingMatrix& m);

}  // namespace iftx::embed

#endif  // IFTX_EMBED_KERNELS_H_
