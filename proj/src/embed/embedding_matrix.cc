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

#include "iftx/embed/embedding_matrix.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include "iftx/util/text_io.h"


namespace iftx::embed {

EmbeddingMatrix::EmbeddingMatrix(int dim, std::vector<std::string> ids,
                                 std::vector<float> data, bool normalized)
    : dim_(dim),
      ids_(std::move(ids)),
      data_(std::move(data)),
      normalized_(normalized) {
  index_.reserve(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    index_.emplace(ids_[i], static_cast<int>(i));
  }
}

absl::StatusOr<EmbeddingMatrix> EmbeddingMatrix::Create(
    int dim, std::vector<std::string> ids, std::vector<float> data,
    bool normalized) {
  if (dim < 0) {
    return absl::InvalidArgumentError(util::StrCat("negative dim ", dim));
  }
  if (data.size() != ids.size() * static_cast<size_t>(dim)) {
    return absl::InvalidArgumentError(
        util::StrCat("data length ", data.size(), " != count ", ids.size(),
                     " * dim ", dim));
  }
  for (size_t i = 0; i < data.size(); ++i) {
    if (std::isnan(data[i])) {
      return absl::InvalidArgumentError(
          util::StrCat("NaN at row ", i / dim, " ('", ids[i / dim], "')"));
    }
    if (std::isinf(data[i])) {
      return absl::InvalidArgumentError(
          util::StrCat("Inf at row ", i / dim, " ('", ids[i / dim], "')"));
    }
  }
  if (normalized) {
    for (size_t r = 0; r < ids.size(); ++r) {
      double sq = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double v = data[r * dim + k];
        sq += v * v;
      }
      const double norm = std::sqrt(sq);
      if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        return absl::InvalidArgumentError(
            util::StrCat("row ", r, " ('", ids[r], "') has norm ", norm,
                         " but the matrix is flagged normalized"));
      }
    }
  }
  EmbeddingMatrix m(dim, std::move(ids), std::move(data), normalized);
  if (m.index_.size() != m.ids_.size()) {
    for (size_t i = 0; i < m.ids_.size(); ++i) {
      if (m.index_.at(m.ids_[i]) != static_cast<int>(i)) {
        return absl::InvalidArgumentError(
            util::StrCat("duplicate row id '", m.ids_[i], "'"));
      }
    }
  }
  return m;
}

std::optional<int> EmbeddingMatrix::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::Select(std::span<const int> rows) const {
  std::vector<std::string> ids;
  std::vector<float> data;
  ids.reserve(rows.size());
  data.reserve(rows.size() * dim_);
  for (int r : rows) {
    ids.push_back(ids_[r]);
    const auto src = row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(dim_, std::move(ids), std::move(data), normalized_);
}

absl::StatusOr<EmbeddingMatrix> EmbeddingMatrix::SelectByIds(
    std::span<const std::string> ids) const {
  std::vector<int> rows;
  std::vector<std::string_view> missing;
  rows.reserve(ids.size());
  for (const std::string& id : ids) {
    if (auto r = Find(id)) {
      rows.push_back(*r);
    } else {
      missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    const size_t shown = std::min<size_t>(missing.size(), 5);
    return absl::NotFoundError(fmt::format(
        "{} id(s) have no embedding row, e.g. {}", missing.size(),
        fmt::join(missing.begin(), missing.begin() + shown, ", ")));
  }
  return Select(rows);
}

bool BitwiseEqual(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim() != b.dim() || a.ids() != b.ids() ||
      a.normalized() != b.normalized()) {
    return false;
  }
  const auto da = a.data();
  const auto db = b.data();
  for (size_t i = 0; i < da.size(); ++i) {
    if (std::bit_cast<uint32_t>(da[i]) != std::bit_cast<uint32_t>(db[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace iftx::embed
