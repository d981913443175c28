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

#include "iftx/embed/xemb_io.h"

#include <bit>
#include <cmath>

#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::embed {
namespace {

// Pulls the next '\n'-terminated line off the front of `rest`.
absl::StatusOr<std::string_view> TakeLine(std::string_view* rest,
                                          std::string_view what) {
  const size_t nl = rest->find('\n');
  if (nl == std::string_view::npos) {
    return absl::DataLossError(util::StrCat("truncated header: missing ", what));
  }
  std::string_view line = rest->substr(0, nl);
  rest->remove_prefix(nl + 1);
  return line;
}

absl::StatusOr<EmbeddingHeader> ParseHeaderLine(std::string_view line) {
  EmbeddingHeader header;
  bool has_dim = false, has_count = false, has_dtype = false, has_norm = false;
  for (std::string_view field : util::SplitFields(line, ' ')) {
    const size_t eq = field.find('=');
    if (eq == std::string_view::npos) {
      return absl::InvalidArgumentError(
          util::StrCat("bad header field '", field, "'"));
    }
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "dim") {
      IFTX_ASSIGN_OR_RETURN(const int64_t dim, util::ParseInt(value));
      header.dim = static_cast<int>(dim);
      has_dim = dim >= 0;
    } else if (key == "count") {
      IFTX_ASSIGN_OR_RETURN(const int64_t count, util::ParseInt(value));
      header.count = static_cast<int>(count);
      has_count = count >= 0;
    } else if (key == "dtype") {
      header.dtype = std::string(value);
      has_dtype = true;
    } else if (key == "normalized") {
      if (value != "0" && value != "1") {
        return absl::InvalidArgumentError(
            util::StrCat("bad normalized flag '", value, "'"));
      }
      header.normalized = value == "1";
      has_norm = true;
    } else {
      return absl::InvalidArgumentError(
          util::StrCat("unknown header key '", key, "'"));
    }
  }
  if (!(has_dim && has_count && has_dtype && has_norm)) {
    return absl::InvalidArgumentError(
        util::StrCat("incomplete header line '", line, "'"));
  }
  if (header.dtype != kDtypeF32Le) {
    return absl::InvalidArgumentError(
        util::StrCat("unsupported dtype '", header.dtype, "'"));
  }
  return header;
}

}  // namespace

void AppendF32Le(std::span<const float> values, std::string* out) {
  out->reserve(out->size() + values.size() * 4);
  for (float v : values) {
    const uint32_t bits = std::bit_cast<uint32_t>(v);
    out->push_back(static_cast<char>(bits & 0xff));
    out->push_back(static_cast<char>((bits >> 8) & 0xff));
    out->push_back(static_cast<char>((bits >> 16) & 0xff));
    out->push_back(static_cast<char>((bits >> 24) & 0xff));
  }
}

absl::Status ReadF32Le(std::string_view bytes, size_t count,
                       std::vector<float>* out) {
  if (bytes.size() < count * 4) {
    return absl::DataLossError(util::StrCat("truncated payload: expected ",
                                            count * 4, " bytes, found ",
                                            bytes.size()));
  }
  out->resize(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < count; ++i, p += 4) {
    const uint32_t bits = static_cast<uint32_t>(p[0]) |
                          (static_cast<uint32_t>(p[1]) << 8) |
                          (static_cast<uint32_t>(p[2]) << 16) |
                          (static_cast<uint32_t>(p[3]) << 24);
    (*out)[i] = std::bit_cast<float>(bits);
  }
  return absl::OkStatus();
}

std::string EncodeEmbeddings(const EmbeddingMatrix& m) {
  std::string out(kXembMagic);
  util::StrAppend(&out, "dim=", m.dim(), " count=", m.count(),
                  " dtype=", kDtypeF32Le,
                  " normalized=", m.normalized() ? 1 : 0, "\n");
  for (const std::string& id : m.ids()) {
    util::StrAppend(&out, util::EscapeLine(id), "\n");
  }
  out += '\n';
  AppendF32Le(m.data(), &out);
  return out;
}

absl::StatusOr<EmbeddingMatrix> DecodeEmbeddings(std::string_view bytes) {
  if (!bytes.starts_with(kXembMagic)) {
    return absl::InvalidArgumentError("bad magic");
  }
  std::string_view rest = bytes.substr(kXembMagic.size());
  IFTX_ASSIGN_OR_RETURN(const std::string_view header_line,
                        TakeLine(&rest, "header line"));
  IFTX_ASSIGN_OR_RETURN(const EmbeddingHeader header,
                        ParseHeaderLine(header_line));

  std::vector<std::string> ids;
  ids.reserve(header.count);
  for (int i = 0; i < header.count; ++i) {
    IFTX_ASSIGN_OR_RETURN(const std::string_view line,
                          TakeLine(&rest, "id line"));
    IFTX_ASSIGN_OR_RETURN(std::string id, util::UnescapeLine(line));
    ids.push_back(std::move(id));
  }
  IFTX_ASSIGN_OR_RETURN(const std::string_view separator,
                        TakeLine(&rest, "id terminator"));
  if (!separator.empty()) {
    return absl::InvalidArgumentError(
        "id list not terminated by an empty line (count mismatch?)");
  }

  const size_t values =
      static_cast<size_t>(header.count) * static_cast<size_t>(header.dim);
  std::vector<float> data;
  IFTX_RETURN_IF_ERROR(ReadF32Le(rest, values, &data));
  if (rest.size() > values * 4) {
    return absl::InvalidArgumentError(util::StrCat(
        "trailing bytes after payload: ", rest.size() - values * 4));
  }
  for (size_t i = 0; i < data.size(); ++i) {
    if (std::isnan(data[i])) {
      return absl::DataLossError(util::StrCat("NaN in payload at row ",
                                              i / header.dim, " ('",
                                              ids[i / header.dim], "')"));
    }
    if (std::isinf(data[i])) {
      return absl::DataLossError(util::StrCat("Inf in payload at row ",
                                              i / header.dim, " ('",
                                              ids[i / header.dim], "')"));
    }
  }
  return EmbeddingMatrix::Create(header.dim, std::move(ids), std::move(data),
                                 header.normalized);
}

absl::Status WriteEmbeddings(const EmbeddingMatrix& m,
                             const std::string& path) {
  return util::WriteFile(path, EncodeEmbeddings(m));
}

absl::StatusOr<EmbeddingMatrix> ReadEmbeddings(const std::string& path) {
  IFTX_ASSIGN_OR_RETURN(const std::string bytes, util::ReadFile(path));
  auto m = DecodeEmbeddings(bytes);
  if (!m.ok()) {
    return absl::Status(m.status().code(),
                        util::StrCat(path, ": ", m.status().message()));
  }
  return m;
}

}  // namespace iftx::embed
