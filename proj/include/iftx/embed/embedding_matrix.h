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

#ifndef IFTX_EMBED_EMBEDDING_MATRIX_H_
#define IFTX_EMBED_EMBEDDING_MATRIX_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"

namespace iftx::embed {

// Tolerance on row norms of a matrix flagged as normalized.
inline constexpr double kUnitNormTolerance = 1e-4;

// N row vectors of dimension D in a shared image/text space, row-major, each
// row named by a string id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  // Validates shape, finiteness and (if `normalized`) unit row norms.
  static absl::StatusOr<EmbeddingMatrix> Create(int dim,
                                                std::vector<std::string> ids,
                                                std::vector<float> data,
                                                bool normalized);

  int dim() const { return dim_; }
  int count() const { return static_cast<int>(ids_.size()); }
  bool normalized() const { return normalized_; }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(int row) const { return ids_[row]; }
  std::span<const float> data() const { return data_; }

  std::span<const float> row(int r) const {
    return std::span<const float>(data_).subspan(
        static_cast<size_t>(r) * dim_, dim_);
  }

  // Row index of `id`, or nullopt.
  std::optional<int> Find(std::string_view id) const;

  // New matrix holding the given rows in the given order.
  EmbeddingMatrix Select(std::span<const int> rows) const;

  // New matrix holding the rows named by `ids`; NotFound lists missing ids.
  absl::StatusOr<EmbeddingMatrix> SelectByIds(
      std::span<const std::string> ids) const;

 private:
  EmbeddingMatrix(int dim, std::vector<std::string> ids,
                  std::vector<float> data, bool normalized);

  int dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  bool normalized_ = false;
  std::unordered_map<std::string, int> index_;
};

// Bitwise equality of two matrices, including ids and the normalized flag.
bool BitwiseEqual(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

}  // namespace iftx::embed

#endif  // IFTX_EMBED_EMBEDDING_MATRIX_H_
