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

#include "iftx/embed/kernels.h"

#include <algorithm>
#include <cmath>

#include "iftx/util/text_io.h"


namespace iftx::embed {

double Dot(std::span<const float> u, std::span<const float> v) {
  double sum = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    sum += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  }
  return sum;
}

double SquaredNorm(std::span<const float> u) { return Dot(u, u); }

absl::StatusOr<double> Cosine(std::span<const float> u,
                              std::span<const float> v) {
  if (u.size() != v.size()) {
    return absl::InvalidArgumentError(util::StrCat(
        "cosine of vectors with dims ", u.size(), " and ", v.size()));
  }
  const double nu = SquaredNorm(u);
  const double nv = SquaredNorm(v);
  if (nu == 0.0 || nv == 0.0) {
    return absl::InvalidArgumentError("cosine of a zero vector");
  }
  const double c = Dot(u, v) / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

absl::StatusOr<EmbeddingMatrix> L2Normalize(const EmbeddingMatrix& m) {
  if (m.normalized()) return m;
  std::vector<float> data(m.data().begin(), m.data().end());
  const int dim = m.dim();
  for (int r = 0; r < m.count(); ++r) {
    const double norm = std::sqrt(SquaredNorm(m.row(r)));
    if (norm == 0.0) {
      return absl::InvalidArgumentError(
          util::StrCat("zero-norm row ", r, " ('", m.id(r), "')"));
    }
    for (int k = 0; k < dim; ++k) {
      float& x = data[static_cast<size_t>(r) * dim + k];
      x = static_cast<float>(static_cast<double>(x) / norm);
    }
  }
  return EmbeddingMatrix::Create(dim, m.ids(), std::move(data),
                                 /*normalized=*/true);
}

}  // namespace iftx::embed
