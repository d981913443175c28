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

#include "iftx/ift/ift.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "iftx/embed/kernels.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::ift {
namespace {

bool ByTotalThenId(const IftRecord& a, const IftRecord& b) {
  if (a.total != b.total) return a.total > b.total;
  return a.text_id < b.text_id;
}

}  // namespace

absl::StatusOr<ClipScoreTable> ClipTable(const embed::EmbeddingMatrix& images,
                                         const embed::EmbeddingMatrix& texts) {
  if (images.dim() != texts.dim()) {
    return absl::InvalidArgumentError(util::StrCat(
        "image dim ", images.dim(), " != text dim ", texts.dim()));
  }
  const auto norms = [](const embed::EmbeddingMatrix& m,
                        std::string_view what) -> absl::StatusOr<std::vector<double>> {
    std::vector<double> out;
    for (int r = 0; r < m.count(); ++r) {
      const double n2 = embed::SquaredNorm(m.row(r));
      if (!(n2 > 0.0)) {
        return absl::InvalidArgumentError(
            util::StrCat(what, " row ", m.id(r), " has zero norm"));
      }
      out.push_back(n2);
    }
    return out;
  };
  IFTX_ASSIGN_OR_RETURN(const std::vector<double> img_n2, norms(images, "image"));
  IFTX_ASSIGN_OR_RETURN(const std::vector<double> txt_n2, norms(texts, "text"));
  ClipScoreTable table;
  table.image_ids = images.ids();
  table.text_ids = texts.ids();
  table.values.reserve(img_n2.size() * txt_n2.size());
  for (int i = 0; i < images.count(); ++i) {
    for (int t = 0; t < texts.count(); ++t) {
      const double cos = embed::Dot(images.row(i), texts.row(t)) /
                         std::sqrt(img_n2[i] * txt_n2[t]);
      table.values.push_back(std::clamp(cos, -1.0, 1.0));
    }
  }
  return table;
}

absl::StatusOr<ScoreMode> ParseScoreMode(std::string_view name) {
  if (name == "ift") return ScoreMode::kIft;
  if (name == "influence_only") return ScoreMode::kInfluenceOnly;
  if (name == "clip_only") return ScoreMode::kClipOnly;
  return absl::InvalidArgumentError(
      util::StrCat("unknown scoring mode '", name, "'"));
}

std::string_view ScoreModeName(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kIft:
      return "ift";
    case ScoreMode::kInfluenceOnly:
      return "influence_only";
    case ScoreMode::kClipOnly:
      return "clip_only";
  }
  return "";
}

absl::StatusOr<ImageScope> ParseImageScope(std::string_view name) {
  if (name == "class_train_all") return ImageScope::kClassTrainAll;
  if (name == "class_proponents") return ImageScope::kClassProponents;
  return absl::InvalidArgumentError(
      util::StrCat("unknown image scope '", name, "'"));
}

std::string_view ImageScopeName(ImageScope scope) {
  return scope == ImageScope::kClassTrainAll ? "class_train_all"
                                             : "class_proponents";
}

absl::StatusOr<std::vector<int>> ClassesOf(const corpus::DatasetManifest& m,
                                           const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, int> by_id;
  for (const corpus::SampleRecord& s : m.samples) {
    by_id.emplace(s.sample_id, s.class_index);
  }
  std::vector<int> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      return absl::NotFoundError(
          util::StrCat("sample '", id, "' is not in the manifest"));
    }
    out.push_back(it->second);
  }
  return out;
}

absl::StatusOr<std::vector<IftRecord>> IftScores(
    const influence::InfluenceMatrix& infl, const ClipScoreTable& clip,
    std::span<const int> train_classes, std::span<const int> val_classes,
    std::span<const int> text_classes, const ScoringMode& mode) {
  IFTX_RETURN_IF_ERROR(influence::ValidateInfluenceMatrix(infl));
  if (train_classes.size() != infl.num_train() ||
      val_classes.size() != infl.num_val() ||
      text_classes.size() != clip.text_ids.size()) {
    return absl::InvalidArgumentError("class lists do not match id lists");
  }
  std::unordered_map<std::string_view, size_t> clip_row;
  for (size_t i = 0; i < clip.image_ids.size(); ++i) {
    clip_row.emplace(clip.image_ids[i], i);
  }

  std::vector<std::vector<size_t>> proponents;
  if (mode.image_scope == ImageScope::kClassProponents) {
    proponents = influence::SelectProponentImages(infl, mode.proponent_mode,
                                                  mode.proponent_k);
  }

  struct ClassImages {
    std::vector<size_t> train;  // rows of infl, ascending
    std::vector<size_t> clip_rows;
    double influence_term = 0.0;
  };
  std::map<int, ClassImages> per_class;
  for (int c : std::set<int>(text_classes.begin(), text_classes.end())) {
    ClassImages ci;
    std::vector<size_t> val;
    for (size_t j = 0; j < infl.num_val(); ++j) {
      if (val_classes[j] == c) val.push_back(j);
    }
    if (mode.image_scope == ImageScope::kClassTrainAll) {
      for (size_t i = 0; i < infl.num_train(); ++i) {
        if (train_classes[i] == c) ci.train.push_back(i);
      }
    } else {
      std::set<size_t> picked;
      for (size_t j : val) {
        for (size_t i : proponents[j]) {
          if (train_classes[i] == c) picked.insert(i);
        }
      }
      ci.train.assign(picked.begin(), picked.end());
    }
    if (ci.train.empty() || val.empty()) {
      return absl::FailedPreconditionError(util::StrCat(
          "class ", c, ": no qualifying ",
          val.empty() ? "validation" : "train", " images for scope ",
          ImageScopeName(mode.image_scope)));
    }
    double sum = 0.0;
    for (size_t i : ci.train) {
      for (size_t j : val) sum += infl.at(i, j);
      const auto it = clip_row.find(infl.train_ids[i]);
      if (it == clip_row.end()) {
        return absl::NotFoundError(util::StrCat(
            "image '", infl.train_ids[i], "' has no CLIP score row"));
      }
      ci.clip_rows.push_back(it->second);
    }
    ci.influence_term =
        sum / static_cast<double>(ci.train.size() * val.size());
    per_class.emplace(c, std::move(ci));
  }

  std::vector<IftRecord> records;
  records.reserve(clip.text_ids.size());
  for (size_t t = 0; t < clip.text_ids.size(); ++t) {
    const ClassImages& ci = per_class.at(text_classes[t]);
    double clip_sum = 0.0;
    for (size_t r : ci.clip_rows) clip_sum += clip.at(r, t);
    IftRecord rec;
    rec.text_id = clip.text_ids[t];
    rec.class_index = text_classes[t];
    rec.influence_term = ci.influence_term;
    rec.clip_term = clip_sum / static_cast<double>(ci.clip_rows.size());
    switch (mode.mode) {
      case ScoreMode::kIft:
        break;
      case ScoreMode::kInfluenceOnly:
        rec.clip_term = 0.0;
        break;
      case ScoreMode::kClipOnly:
        rec.influence_term = 0.0;
        break;
    }
    rec.total = rec.influence_term + rec.clip_term;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ProponentSet> SelectProponentTexts(
    const std::vector<IftRecord>& records, int per_class_k) {
  std::map<int, std::vector<IftRecord>> by_class;
  for (const IftRecord& r : records) by_class[r.class_index].push_back(r);
  std::vector<ProponentSet> out;
  for (auto& [c, texts] : by_class) {
    std::sort(texts.begin(), texts.end(), ByTotalThenId);
    if (static_cast<int>(texts.size()) > per_class_k) {
      texts.resize(std::max(per_class_k, 0));
    }
    ProponentSet set;
    set.class_index = c;
    double sum = 0.0;
    for (const IftRecord& r : texts) sum += r.total;
    set.class_weight_raw =
        texts.empty() ? 0.0 : sum / static_cast<double>(texts.size());
    set.texts = std::move(texts);
    out.push_back(std::move(set));
  }
  return out;
}

absl::StatusOr<ClassWeights> DeriveClassWeights(
    const std::vector<ProponentSet>& sets, int num_classes) {
  std::vector<double> raw(num_classes, 0.0);
  std::vector<bool> seen(num_classes, false);
  for (const ProponentSet& s : sets) {
    if (s.class_index < 0 || s.class_index >= num_classes) {
      return absl::InvalidArgumentError(
          util::StrCat("proponent set for unknown class ", s.class_index));
    }
    raw[s.class_index] = s.class_weight_raw;
    seen[s.class_index] = true;
  }
  std::vector<int> missing;
  for (int c = 0; c < num_classes; ++c) {
    if (!seen[c]) missing.push_back(c);
  }
  if (!missing.empty()) {
    return absl::FailedPreconditionError(fmt::format(
        "no proponent texts for class(es) {}", fmt::join(missing, ", ")));
  }
  ClassWeights out;
  const double lo = *std::min_element(raw.begin(), raw.end());
  if (lo <= 0.0) {
    for (double& v : raw) v += -lo + kWeightShiftEpsilon;
  }
  double sum = 0.0;
  for (double v : raw) sum += v;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    out.degenerate = true;
    out.weights.assign(num_classes, 1.0 / num_classes);
    return out;
  }
  out.weights.reserve(num_classes);
  for (double v : raw) out.weights.push_back(v / sum);
  return out;
}

std::string FormatIftReport(const std::vector<IftRecord>& records,
                            const std::vector<ProponentSet>& sets,
                            const corpus::DatasetManifest& manifest) {
  std::unordered_set<std::string_view> selected;
  for (const ProponentSet& s : sets) {
    for (const IftRecord& r : s.texts) selected.insert(r.text_id);
  }
  std::string out = "class\ttext_id\tinfluence_term\tclip_term\ttotal\tselected\n";
  for (const IftRecord& r : records) {
    const std::string& name =
        r.class_index >= 0 && r.class_index < manifest.num_classes()
            ? manifest.classes[r.class_index].name
            : std::to_string(r.class_index);
    util::StrAppend(&out, name, "\t", r.text_id, "\t",
                    util::FormatDouble(r.influence_term), "\t",
                    util::FormatDouble(r.clip_term), "\t",
                    util::FormatDouble(r.total), "\t",
                    selected.contains(r.text_id) ? 1 : 0, "\n");
  }
  return out;
}

absl::StatusOr<std::vector<IftRecord>> ParseIftReport(
    std::string_view text, const corpus::DatasetManifest& manifest) {
  std::vector<IftRecord> out;
  bool header = false;
  int line_no = 0;
  for (std::string_view line : util::SplitLines(text)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (!line.starts_with("class\ttext_id\t")) {
        return absl::InvalidArgumentError("IFT report: missing header");
      }
      header = true;
      continue;
    }
    const std::vector<std::string_view> f = util::SplitFields(line, '\t');
    if (f.size() != 6) {
      return absl::InvalidArgumentError(util::StrCat(
          "IFT report line ", line_no, ": expected 6 fields, got ", f.size()));
    }
    const std::optional<int> c = manifest.FindClass(f[0]);
    if (!c.has_value()) {
      return absl::InvalidArgumentError(util::StrCat(
          "IFT report line ", line_no, ": unknown class '", f[0], "'"));
    }
    IftRecord r;
    r.class_index = *c;
    r.text_id = std::string(f[1]);
    IFTX_ASSIGN_OR_RETURN(r.influence_term, util::ParseDouble(f[2]));
    IFTX_ASSIGN_OR_RETURN(r.clip_term, util::ParseDouble(f[3]));
    IFTX_ASSIGN_OR_RETURN(r.total, util::ParseDouble(f[4]));
    out.push_back(std::move(r));
  }
  if (!header) return absl::InvalidArgumentError("IFT report: missing header");
  return out;
}

}  // namespace iftx::ift
