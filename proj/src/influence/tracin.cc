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

#include "iftx/influence/tracin.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "iftx/embed/kernels.h"
#include "iftx/embed/xemb_io.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::influence {
namespace {

constexpr std::string_view kGradMagic = "XGRAD1";

// p - e_y for every row, row-major n x C.
absl::StatusOr<std::vector<double>> Residuals(
    const trainer::LinearHead& head, const embed::EmbeddingMatrix& inputs,
    std::span<const int> labels) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(inputs.count()) * head.num_classes);
  for (int r = 0; r < inputs.count(); ++r) {
    IFTX_ASSIGN_OR_RETURN(
        const trainer::CrossEntropy ce,
        trainer::SoftmaxCrossEntropy(head, inputs.row(r), labels[r]));
    for (int c = 0; c < head.num_classes; ++c) {
      out.push_back(ce.probs[c] - (c == labels[r] ? 1.0 : 0.0));
    }
  }
  return out;
}

double ResidualDot(const double* a, const double* b, int classes) {
  double s = 0.0;
  for (int c = 0; c < classes; ++c) s += a[c] * b[c];
  return s;
}

absl::Status CheckSamples(const CheckpointSet& ckpts,
                          const embed::EmbeddingMatrix& m,
                          std::span<const int> labels, std::string_view what) {
  const trainer::LinearHead& head = ckpts.checkpoints.front().params;
  if (m.dim() != head.dim) {
    return absl::InvalidArgumentError(util::StrCat(
        what, " dim ", m.dim(), " != checkpoint dim ", head.dim));
  }
  if (labels.size() != static_cast<size_t>(m.count())) {
    return absl::InvalidArgumentError(util::StrCat(
        what, ": ", labels.size(), " labels for ", m.count(), " rows"));
  }
  for (int label : labels) {
    if (label < 0 || label >= head.num_classes) {
      return absl::InvalidArgumentError(
          util::StrCat(what, ": label ", label, " out of range"));
    }
  }
  return absl::OkStatus();
}

// Id order used for tie-breaking.
std::vector<size_t> OrderByValue(const InfluenceMatrix& infl, size_t col) {
  std::vector<size_t> order(infl.num_train());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const double va = infl.at(a, col), vb = infl.at(b, col);
    if (va != vb) return va > vb;
    return infl.train_ids[a] < infl.train_ids[b];
  });
  return order;
}

}  // namespace

absl::Status ValidateCheckpointSet(const CheckpointSet& set) {
  if (set.checkpoints.empty()) {
    return absl::InvalidArgumentError("empty checkpoint set");
  }
  const trainer::LinearHead& first = set.checkpoints.front().params;
  for (size_t j = 0; j < set.checkpoints.size(); ++j) {
    const trainer::Checkpoint& ck = set.checkpoints[j];
    IFTX_RETURN_IF_ERROR(trainer::ValidateHead(ck.params));
    if (ck.params.dim != first.dim ||
        ck.params.num_classes != first.num_classes) {
      return absl::InvalidArgumentError(
          util::StrCat("checkpoint ", j, " has a different shape"));
    }
    if (!std::isfinite(ck.lr_at_save)) {
      return absl::InvalidArgumentError(
          util::StrCat("checkpoint ", j, " has a non-finite learning rate"));
    }
  }
  return absl::OkStatus();
}

absl::Status ValidateInfluenceMatrix(const InfluenceMatrix& m) {
  if (m.values.size() != m.num_train() * m.num_val()) {
    return absl::InvalidArgumentError("influence matrix shape mismatch");
  }
  for (double v : m.values) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("non-finite influence value");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<double> TracInPair(const CheckpointSet& ckpts,
                                  std::span<const float> x_train, int y_train,
                                  std::span<const float> x_val, int y_val,
                                  const TracInOptions& opts) {
  IFTX_RETURN_IF_ERROR(ValidateCheckpointSet(ckpts));
  if (x_train.size() != x_val.size()) {
    return absl::InvalidArgumentError("train and val dims differ");
  }
  const double gram =
      embed::Dot(x_train, x_val) + (opts.include_bias ? 1.0 : 0.0);
  double total = 0.0;
  for (const trainer::Checkpoint& ck : ckpts.checkpoints) {
    IFTX_ASSIGN_OR_RETURN(
        const trainer::CrossEntropy t,
        trainer::SoftmaxCrossEntropy(ck.params, x_train, y_train));
    IFTX_ASSIGN_OR_RETURN(const trainer::CrossEntropy v,
                          trainer::SoftmaxCrossEntropy(ck.params, x_val, y_val));
    std::vector<double> rt = t.probs, rv = v.probs;
    rt[y_train] -= 1.0;
    rv[y_val] -= 1.0;
    const double rdot =
        ResidualDot(rt.data(), rv.data(), ck.params.num_classes);
    total += ck.lr_at_save * (rdot * gram);
  }
  return total;
}

absl::StatusOr<InfluenceMatrix> TracInMatrix(
    const CheckpointSet& ckpts, const embed::EmbeddingMatrix& train,
    std::span<const int> train_labels, const embed::EmbeddingMatrix& val,
    std::span<const int> val_labels, const TracInOptions& opts) {
  IFTX_RETURN_IF_ERROR(ValidateCheckpointSet(ckpts));
  IFTX_RETURN_IF_ERROR(CheckSamples(ckpts, train, train_labels, "train"));
  IFTX_RETURN_IF_ERROR(CheckSamples(ckpts, val, val_labels, "val"));
  const size_t nt = train.count(), nv = val.count();
  const int classes = ckpts.checkpoints.front().params.num_classes;

  std::vector<double> gram(nt * nv);
  for (size_t i = 0; i < nt; ++i) {
    for (size_t j = 0; j < nv; ++j) {
      gram[i * nv + j] = embed::Dot(train.row(i), val.row(j)) +
                         (opts.include_bias ? 1.0 : 0.0);
    }
  }
  InfluenceMatrix out;
  out.train_ids = train.ids();
  out.val_ids = val.ids();
  out.values.assign(nt * nv, 0.0);
  for (const trainer::Checkpoint& ck : ckpts.checkpoints) {
    IFTX_ASSIGN_OR_RETURN(const std::vector<double> rt,
                          Residuals(ck.params, train, train_labels));
    IFTX_ASSIGN_OR_RETURN(const std::vector<double> rv,
                          Residuals(ck.params, val, val_labels));
    for (size_t i = 0; i < nt; ++i) {
      for (size_t j = 0; j < nv; ++j) {
        const double rdot =
            ResidualDot(&rt[i * classes], &rv[j * classes], classes);
        out.values[i * nv + j] += ck.lr_at_save * (rdot * gram[i * nv + j]);
      }
    }
  }
  IFTX_RETURN_IF_ERROR(ValidateInfluenceMatrix(out));
  return out;
}

absl::Status ValidateGradientTable(const GradientTable& table) {
  if (table.length < 0) {
    return absl::InvalidArgumentError("negative gradient length");
  }
  if (table.data.size() != table.ids.size() * table.length) {
    return absl::InvalidArgumentError(util::StrCat(
        "gradient table ", table.tag, ": ", table.data.size(),
        " values for ", table.ids.size(), " rows of length ", table.length));
  }
  if (!std::isfinite(table.eta)) {
    return absl::InvalidArgumentError("non-finite eta");
  }
  for (float v : table.data) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError(
          util::StrCat("gradient table ", table.tag, ": non-finite value"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<GradientTable> GradientTableFromCheckpoint(
    const trainer::Checkpoint& ckpt, const embed::EmbeddingMatrix& inputs,
    std::span<const int> labels, std::string tag, bool include_bias) {
  const CheckpointSet one{{ckpt}};
  IFTX_RETURN_IF_ERROR(ValidateCheckpointSet(one));
  IFTX_RETURN_IF_ERROR(CheckSamples(one, inputs, labels, "inputs"));
  const trainer::LinearHead& head = ckpt.params;
  GradientTable table;
  table.tag = std::move(tag);
  table.eta = ckpt.lr_at_save;
  table.length = head.num_classes * head.dim +
                 (include_bias ? head.num_classes : 0);
  table.ids = inputs.ids();
  table.data.reserve(table.ids.size() * table.length);
  for (int r = 0; r < inputs.count(); ++r) {
    IFTX_ASSIGN_OR_RETURN(
        const trainer::HeadGradient g,
        trainer::CrossEntropyGradient(head, inputs.row(r), labels[r]));
    for (double v : g.weights) table.data.push_back(static_cast<float>(v));
    if (include_bias) {
      for (double v : g.bias) table.data.push_back(static_cast<float>(v));
    }
  }
  return table;
}

absl::StatusOr<InfluenceMatrix> TracInMatrixExternal(
    std::span<const GradientTable> tables, std::span<const double> etas,
    const std::vector<std::string>& train_ids,
    const std::vector<std::string>& val_ids) {
  if (tables.empty()) return absl::InvalidArgumentError("no gradient tables");
  if (etas.size() != tables.size()) {
    return absl::InvalidArgumentError(util::StrCat(
        etas.size(), " etas for ", tables.size(), " gradient tables"));
  }
  const int length = tables.front().length;
  InfluenceMatrix out;
  out.train_ids = train_ids;
  out.val_ids = val_ids;
  const size_t nt = train_ids.size(), nv = val_ids.size();
  out.values.assign(nt * nv, 0.0);
  for (size_t j = 0; j < tables.size(); ++j) {
    const GradientTable& table = tables[j];
    IFTX_RETURN_IF_ERROR(ValidateGradientTable(table));
    if (table.length != length) {
      return absl::InvalidArgumentError(util::StrCat(
          "gradient table ", table.tag, " has length ", table.length,
          ", expected ", length));
    }
    std::unordered_map<std::string_view, size_t> index;
    for (size_t r = 0; r < table.ids.size(); ++r) index.emplace(table.ids[r], r);
    const auto lookup = [&](const std::vector<std::string>& ids)
        -> absl::StatusOr<std::vector<size_t>> {
      std::vector<size_t> rows;
      for (const std::string& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) {
          return absl::InvalidArgumentError(util::StrCat(
              "id misalignment: gradient table ", table.tag, " has no row ",
              id));
        }
        rows.push_back(it->second);
      }
      return rows;
    };
    IFTX_ASSIGN_OR_RETURN(const std::vector<size_t> tr, lookup(train_ids));
    IFTX_ASSIGN_OR_RETURN(const std::vector<size_t> vr, lookup(val_ids));
    for (size_t a = 0; a < nt; ++a) {
      for (size_t b = 0; b < nv; ++b) {
        out.values[a * nv + b] +=
            etas[j] * embed::Dot(table.row(tr[a]), table.row(vr[b]));
      }
    }
  }
  IFTX_RETURN_IF_ERROR(ValidateInfluenceMatrix(out));
  return out;
}

std::string EncodeGradientTable(const GradientTable& table) {
  std::string out = util::StrCat(kGradMagic, " len=", table.length,
                                 " count=", table.ids.size(),
                                 " eta=", util::FormatDouble(table.eta),
                                 " tag=", util::EscapeLine(table.tag), "\n");
  for (const std::string& id : table.ids) {
    util::StrAppend(&out, util::EscapeLine(id), "\n");
  }
  embed::AppendF32Le(table.data, &out);
  return out;
}

absl::StatusOr<GradientTable> DecodeGradientTable(std::string_view bytes) {
  size_t pos = bytes.find('\n');
  if (pos == std::string_view::npos) {
    return absl::DataLossError("gradient table: truncated header");
  }
  const std::string_view header = bytes.substr(0, pos);
  const size_t tag_at = header.find(" tag=");
  if (header.substr(0, kGradMagic.size() + 1) != util::StrCat(kGradMagic, " ") ||
      tag_at == std::string_view::npos) {
    return absl::DataLossError("gradient table: bad magic");
  }
  const std::vector<std::string_view> fields =
      util::SplitFields(header.substr(0, tag_at), ' ');
  if (fields.size() != 4 || fields[1].substr(0, 4) != "len=" ||
      fields[2].substr(0, 6) != "count=" || fields[3].substr(0, 4) != "eta=") {
    return absl::DataLossError("gradient table: malformed header");
  }
  GradientTable table;
  IFTX_ASSIGN_OR_RETURN(const int64_t len, util::ParseInt(fields[1].substr(4)));
  IFTX_ASSIGN_OR_RETURN(const int64_t count,
                        util::ParseInt(fields[2].substr(6)));
  IFTX_ASSIGN_OR_RETURN(table.eta, util::ParseDouble(fields[3].substr(4)));
  IFTX_ASSIGN_OR_RETURN(table.tag, util::UnescapeLine(header.substr(tag_at + 5)));
  if (len < 0 || count < 0) {
    return absl::DataLossError("gradient table: negative shape");
  }
  table.length = static_cast<int>(len);
  for (int64_t r = 0; r < count; ++r) {
    const size_t next = bytes.find('\n', pos + 1);
    if (next == std::string_view::npos) {
      return absl::DataLossError("gradient table: truncated id list");
    }
    IFTX_ASSIGN_OR_RETURN(std::string id,
                          util::UnescapeLine(bytes.substr(pos + 1, next - pos - 1)));
    table.ids.push_back(std::move(id));
    pos = next;
  }
  const std::string_view payload = bytes.substr(pos + 1);
  const size_t n = static_cast<size_t>(count * len);
  if (payload.size() != 4 * n) {
    return absl::DataLossError(util::StrCat(
        "gradient table: payload is ", payload.size(), " bytes, expected ",
        4 * n));
  }
  IFTX_RETURN_IF_ERROR(embed::ReadF32Le(payload, n, &table.data));
  IFTX_RETURN_IF_ERROR(ValidateGradientTable(table));
  return table;
}

absl::Status WriteGradientTable(const GradientTable& table,
                                const std::string& path) {
  IFTX_RETURN_IF_ERROR(ValidateGradientTable(table));
  return util::WriteFile(path, EncodeGradientTable(table));
}

absl::StatusOr<GradientTable> ReadGradientTable(const std::string& path) {
  IFTX_ASSIGN_OR_RETURN(const std::string bytes, util::ReadFile(path));
  auto table = DecodeGradientTable(bytes);
  if (!table.ok()) {
    return absl::Status(table.status().code(),
                        util::StrCat(path, ": ", table.status().message()));
  }
  return table;
}

absl::StatusOr<ProponentMode> ParseProponentMode(std::string_view name) {
  if (name == "top_k") return ProponentMode::kTopK;
  if (name == "positive") return ProponentMode::kPositive;
  return absl::InvalidArgumentError(
      util::StrCat("unknown proponent mode '", name, "'"));
}

std::string_view ProponentModeName(ProponentMode mode) {
  return mode == ProponentMode::kTopK ? "top_k" : "positive";
}

std::vector<std::vector<size_t>> SelectProponentImages(
    const InfluenceMatrix& infl, ProponentMode mode, int k) {
  std::vector<std::vector<size_t>> out(infl.num_val());
  for (size_t j = 0; j < infl.num_val(); ++j) {
    std::vector<size_t> order = OrderByValue(infl, j);
    if (mode == ProponentMode::kTopK) {
      order.resize(std::min(order.size(), static_cast<size_t>(std::max(k, 0))));
    } else {
      order.erase(std::find_if(order.begin(), order.end(),
                               [&](size_t i) { return !(infl.at(i, j) > 0.0); }),
                  order.end());
    }
    out[j] = std::move(order);
  }
  return out;
}

std::string FormatInfluenceMatrix(const InfluenceMatrix& m) {
  std::string out = "train_id";
  for (const std::string& id : m.val_ids) util::StrAppend(&out, "\t", id);
  out += "\n";
  for (size_t i = 0; i < m.num_train(); ++i) {
    out += m.train_ids[i];
    for (size_t j = 0; j < m.num_val(); ++j) {
      util::StrAppend(&out, "\t", util::FormatDouble(m.at(i, j)));
    }
    out += "\n";
  }
  return out;
}

absl::StatusOr<InfluenceMatrix> ParseInfluenceMatrix(std::string_view text) {
  const std::vector<std::string_view> lines = util::SplitLines(text);
  if (lines.empty()) return absl::InvalidArgumentError("empty influence file");
  const std::vector<std::string_view> head = util::SplitFields(lines[0], '\t');
  if (head.empty() || head[0] != "train_id") {
    return absl::InvalidArgumentError("influence file: missing header");
  }
  InfluenceMatrix m;
  for (size_t j = 1; j < head.size(); ++j) m.val_ids.emplace_back(head[j]);
  for (size_t l = 1; l < lines.size(); ++l) {
    if (lines[l].empty()) continue;
    const std::vector<std::string_view> f = util::SplitFields(lines[l], '\t');
    if (f.size() != head.size()) {
      return absl::InvalidArgumentError(util::StrCat(
          "influence file line ", l + 1, ": expected ", head.size(),
          " fields, got ", f.size()));
    }
    m.train_ids.emplace_back(f[0]);
    for (size_t j = 1; j < f.size(); ++j) {
      IFTX_ASSIGN_OR_RETURN(const double v, util::ParseDouble(f[j]));
      m.values.push_back(v);
    }
  }
  IFTX_RETURN_IF_ERROR(ValidateInfluenceMatrix(m));
  return m;
}

}  // namespace iftx::influence
