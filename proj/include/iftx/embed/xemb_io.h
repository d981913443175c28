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

// XEMB1 embedding files.
//
//   XEMB1\n
//   dim=<D> count=<N> dtype=f32le normalized=<0|1>\n
//   <escaped id of row 0>\n
//   ...
//   <escaped id of row N-1>\n
//   \n
//   <N*D little-endian float32, row-major>
//
// Ids escape '\\', '\n' and '\r' as two-character sequences.

#ifndef IFTX_EMBED_XEMB_IO_H_
#define IFTX_EMBED_XEMB_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "iftx/embed/embedding_matrix.h"

namespace iftx::embed {

inline constexpr std::string_view kXembMagic = "XEMB1\n";
inline constexpr std::string_view kDtypeF32Le = "f32le";

struct EmbeddingHeader {
  int dim = 0;
  int count = 0;
  std::string dtype{kDtypeF32Le};
  bool normalized = false;
};

std::string EncodeEmbeddings(const EmbeddingMatrix& m);
absl::StatusOr<EmbeddingMatrix> DecodeEmbeddings(std::string_view bytes);

absl::Status WriteEmbeddings(const EmbeddingMatrix& m, const std::string& path);
absl::StatusOr<EmbeddingMatrix> ReadEmbeddings(const std::string& path);

// Little-endian float32 packing shared by the binary artifact formats.
void AppendF32Le(std::span<const float> values, std::string* out);
// Fails with "truncated payload" when `bytes` is shorter than 4 * count.
absl::Status ReadF32Le(std::string_view bytes, size_t count,
                       std::vector<float>* out);

}  // namespace iftx::embed

#endif  // IFTX_EMBED_XEMB_IO_H_
