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

#include "iftx/pipeline/report.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::pipeline {
namespace {

std::string Percent(double accuracy) {
  return fmt::format("{:.3f}%", 100.0 * accuracy);
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string MethodHeader(const std::string& method) {
  return method == "only_images" ? "Only Images" : method;
}

// A markdown table; higher values rank first.
std::string Table(const std::vector<std::string>& columns,
                  const std::map<std::string, std::map<std::string, double>>& cells,
                  const std::string& row_title) {
  std::string out = util::StrCat("| ", row_title, " |");
  for (const std::string& c : columns) util::StrAppend(&out, " ", MethodHeader(c), " |");
  out += "\n|---|";
  for (size_t i = 0; i < columns.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& [dataset, row] : cells) {
    std::set<double, std::greater<>> distinct;
    for (const auto& [m, v] : row) distinct.insert(v);
    const std::vector<double> ranked(distinct.begin(), distinct.end());
    util::StrAppend(&out, "| ", dataset, " |");
    for (const std::string& c : columns) {
      const auto it = row.find(c);
      if (it == row.end()) {
        out += " - |";
        continue;
      }
      const std::string cell = Percent(it->second);
      if (!ranked.empty() && it->second == ranked[0]) {
        util::StrAppend(&out, " **", cell, "** |");
      } else if (ranked.size() > 1 && it->second == ranked[1]) {
        util::StrAppend(&out, " <u>", cell, "</u> |");
      } else {
        util::StrAppend(&out, " ", cell, " |");
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string FormatResultTables(const std::vector<xmodal::ResultRow>& rows) {
  std::vector<std::string> zs_cols, xm_cols;
  std::map<std::string, std::map<std::string, double>> zs, xm;
  bool has_only_images = false;
  for (const xmodal::ResultRow& r : rows) {
    switch (r.track) {
      case xmodal::Track::kZeroShot:
        if (std::find(zs_cols.begin(), zs_cols.end(), r.method) == zs_cols.end()) {
          zs_cols.push_back(r.method);
        }
        zs[r.dataset][r.method] = r.accuracy;
        break;
      case xmodal::Track::kOnlyImages:
        has_only_images = true;
        xm[r.dataset]["only_images"] = r.accuracy;
        break;
      case xmodal::Track::kXModal:
        if (std::find(xm_cols.begin(), xm_cols.end(), r.method) == xm_cols.end()) {
          xm_cols.push_back(r.method);
        }
        xm[r.dataset][r.method] = r.accuracy;
        break;
    }
  }
  if (has_only_images) xm_cols.insert(xm_cols.begin(), "only_images");
  std::string out;
  if (!zs.empty()) {
    out += "## Zero-shot classification\n\n";
    out += Table(zs_cols, zs, "Dataset");
  }
  if (!xm.empty()) {
    if (!out.empty()) out += "\n";
    out += "## Cross-modal transfer\n\n";
    out += Table(xm_cols, xm, "Dataset");
  }
  return out;
}

std::string FormatJudgeTable(const std::vector<judge::JudgeMetric>& metrics) {
  std::string out =
      "## Description quality (judge)\n\n"
      "| Method | Criterion | Top-1 (%) | Mean rank |\n|---|---|---|---|\n";
  for (const judge::JudgeMetric& m : metrics) {
    util::StrAppend(&out, "| ", m.method, " | ", judge::CriterionName(m.criterion),
                    " | ", fmt::format("{:.2f}", 100.0 * m.top1_rate), " | ",
                    std::isnan(m.mean_rank) ? std::string("-")
                                            : fmt::format("{:.3f}", m.mean_rank),
                    " |\n");
  }
  return out;
}

absl::StatusOr<std::vector<judge::JudgeMetric>> ParseMetrics(
    std::string_view text) {
  std::vector<judge::JudgeMetric> out;
  bool header = false;
  for (std::string_view line : util::SplitLines(text)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const std::vector<std::string_view> f = util::SplitFields(line, '\t');
    if (f.size() != 4) {
      return absl::InvalidArgumentError("metrics: expected 4 fields per line");
    }
    judge::JudgeMetric m;
    m.method = std::string(f[0]);
    bool found = false;
    for (judge::Criterion c : judge::kCriteria) {
      if (judge::CriterionName(c) == f[1]) {
        m.criterion = c;
        found = true;
      }
    }
    if (!found) {
      return absl::InvalidArgumentError(
          util::StrCat("metrics: unknown criterion '", f[1], "'"));
    }
    IFTX_ASSIGN_OR_RETURN(m.top1_rate, util::ParseDouble(f[2]));
    if (f[3] == "nan") {
      m.mean_rank = std::nan("");
    } else {
      IFTX_ASSIGN_OR_RETURN(m.mean_rank, util::ParseDouble(f[3]));
    }
    out.push_back(std::move(m));
  }
  return out;
}

absl::StatusOr<std::string> ExportProjection(
    const embed::EmbeddingMatrix& images, std::span<const int> image_classes,
    const embed::EmbeddingMatrix& texts,
    std::span<const ProjectionText> text_info,
    const std::vector<std::string>& class_names) {
  if (!images.empty() && !texts.empty() && images.dim() != texts.dim()) {
    return absl::InvalidArgumentError(util::StrCat(
        "image dim ", images.dim(), " != text dim ", texts.dim()));
  }
  if (image_classes.size() != static_cast<size_t>(images.count()) ||
      text_info.size() != static_cast<size_t>(texts.count())) {
    return absl::InvalidArgumentError("labels do not match embedding rows");
  }
  const int dim = !images.empty() ? images.dim() : (!texts.empty() ? texts.dim() : 0);
  std::string out = "id,kind,class,method";
  for (int d = 0; d < dim; ++d) util::StrAppend(&out, ",v_", d);
  out += "\n";
  const auto class_name = [&](int c) -> absl::StatusOr<std::string> {
    if (c < 0 || c >= static_cast<int>(class_names.size())) {
      return absl::InvalidArgumentError(util::StrCat("class ", c, " out of range"));
    }
    return CsvField(class_names[c]);
  };
  const auto emit = [&](const embed::EmbeddingMatrix& m, int r,
                        std::string_view kind, int c,
                        std::string_view method) -> absl::Status {
    IFTX_ASSIGN_OR_RETURN(const std::string name, class_name(c));
    util::StrAppend(&out, CsvField(m.id(r)), ",", kind, ",", name, ",",
                    CsvField(method));
    for (float v : m.row(r)) util::StrAppend(&out, ",", v);
    out += "\n";
    return absl::OkStatus();
  };
  for (int r = 0; r < images.count(); ++r) {
    IFTX_RETURN_IF_ERROR(emit(images, r, "image", image_classes[r], ""));
  }
  for (int r = 0; r < texts.count(); ++r) {
    IFTX_RETURN_IF_ERROR(
        emit(texts, r, "text", text_info[r].class_index, text_info[r].method));
  }
  return out;
}

}  // namespace iftx::pipeline
