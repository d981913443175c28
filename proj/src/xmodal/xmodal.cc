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

#include "iftx/xmodal/xmodal.h"

#include <cmath>

#include "iftx/embed/kernels.h"
#include "iftx/util/rng.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::xmodal {
namespace {

absl::StatusOr<embed::EmbeddingMatrix> MaybeNormalize(
    const embed::EmbeddingMatrix& m, bool normalize) {
  if (!normalize) return m;
  return embed::L2Normalize(m);
}

}  // namespace

absl::StatusOr<WeightApplication> ParseWeightApplication(std::string_view name) {
  if (name == "loss_weight") return WeightApplication::kLossWeight;
  if (name == "embedding_scale") return WeightApplication::kEmbeddingScale;
  return absl::InvalidArgumentError(
      util::StrCat("unknown weight application '", name, "'"));
}

std::string_view WeightApplicationName(WeightApplication w) {
  return w == WeightApplication::kLossWeight ? "loss_weight"
                                             : "embedding_scale";
}

absl::Status ValidateXModalConfig(const XModalConfig& cfg) {
  IFTX_RETURN_IF_ERROR(trainer::ValidateTrainConfig(cfg.image_stage));
  if (cfg.text_epochs < 1) {
    return absl::InvalidArgumentError("text_epochs must be >= 1");
  }
  if (cfg.text_replication < 1) {
    return absl::InvalidArgumentError("text_replication must be >= 1");
  }
  if (cfg.text_batch_size < 1) {
    return absl::InvalidArgumentError("text_batch_size must be >= 1");
  }
  if (!(cfg.text_lr0 >= 0.0) || !std::isfinite(cfg.text_lr0)) {
    return absl::InvalidArgumentError("text_lr0 must be >= 0");
  }
  return absl::OkStatus();
}

Evaluation Score(std::span<const int> predictions, std::span<const int> labels,
                 int num_classes) {
  Evaluation e;
  e.predictions.assign(predictions.begin(), predictions.end());
  e.class_sizes.assign(num_classes, 0);
  std::vector<int> correct(num_classes, 0);
  int total_correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    ++e.class_sizes[labels[i]];
    if (predictions[i] == labels[i]) {
      ++correct[labels[i]];
      ++total_correct;
    }
  }
  e.per_class_accuracy.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    e.per_class_accuracy[c] =
        e.class_sizes[c] == 0 ? 0.0
                              : static_cast<double>(correct[c]) / e.class_sizes[c];
  }
  e.accuracy = labels.empty() ? 0.0
                              : static_cast<double>(total_correct) /
                                    static_cast<double>(labels.size());
  return e;
}

Evaluation EvaluateHead(const trainer::LinearHead& head,
                        const embed::EmbeddingMatrix& test,
                        std::span<const int> labels) {
  std::vector<int> predictions;
  predictions.reserve(test.count());
  for (int r = 0; r < test.count(); ++r) {
    predictions.push_back(head.Predict(test.row(r)));
  }
  return Score(predictions, labels, head.num_classes);
}

absl::StatusOr<TextStageData> BuildTextStage(
    const embed::EmbeddingMatrix& texts,
    const std::vector<ift::ProponentSet>& sets,
    std::span<const double> class_weights, int num_classes,
    const XModalConfig& cfg) {
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<size_t>(num_classes)) {
    return absl::InvalidArgumentError(util::StrCat(
        class_weights.size(), " class weights for ", num_classes, " classes"));
  }
  std::vector<bool> covered(num_classes, false);
  for (const ift::ProponentSet& s : sets) {
    if (s.class_index < 0 || s.class_index >= num_classes) {
      return absl::InvalidArgumentError(
          util::StrCat("proponent set for unknown class ", s.class_index));
    }
    if (!s.texts.empty()) covered[s.class_index] = true;
  }
  std::vector<int> missing;
  for (int c = 0; c < num_classes; ++c) {
    if (!covered[c]) missing.push_back(c);
  }
  if (!missing.empty()) {
    return absl::FailedPreconditionError(fmt::format(
        "no proponent texts for class(es) {}", fmt::join(missing, ", ")));
  }

  std::vector<std::string> ids;
  for (const ift::ProponentSet& s : sets) {
    for (const ift::IftRecord& r : s.texts) ids.push_back(r.text_id);
  }
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix selected,
                        texts.SelectByIds(ids));
  TextStageData out;
  std::vector<std::string> row_ids;
  std::vector<float> data;
  size_t row = 0;
  for (const ift::ProponentSet& s : sets) {
    const double w = class_weights.empty() ? 1.0 : class_weights[s.class_index];
    for (size_t t = 0; t < s.texts.size(); ++t, ++row) {
      const auto x = selected.row(row);
      for (int rep = 0; rep < cfg.text_replication; ++rep) {
        row_ids.push_back(cfg.text_replication == 1
                              ? s.texts[t].text_id
                              : util::StrCat(s.texts[t].text_id, "#", rep));
        for (float v : x) {
          data.push_back(
              cfg.weight_application == WeightApplication::kEmbeddingScale
                  ? static_cast<float>(w * v)
                  : v);
        }
        out.labels.push_back(s.class_index);
        out.weights.push_back(w);
      }
    }
  }
  IFTX_ASSIGN_OR_RETURN(out.inputs,
                        embed::EmbeddingMatrix::Create(
                            texts.dim(), std::move(row_ids), std::move(data),
                            /*normalized=*/false));
  return out;
}

absl::StatusOr<trainer::LinearHead> TrainTextStage(
    const trainer::LinearHead& head, const embed::EmbeddingMatrix& texts,
    const std::vector<ift::ProponentSet>& sets,
    std::span<const double> class_weights, const XModalConfig& cfg) {
  IFTX_RETURN_IF_ERROR(ValidateXModalConfig(cfg));
  IFTX_ASSIGN_OR_RETURN(
      const TextStageData stage,
      BuildTextStage(texts, sets, class_weights, head.num_classes, cfg));
  if (cfg.text_lr0 == 0.0) return head;
  trainer::TrainConfig tc;
  tc.lr0 = cfg.text_lr0;
  tc.batch_size = cfg.text_batch_size;
  tc.epochs = cfg.text_epochs;
  tc.t_max = cfg.text_epochs;
  tc.seed = util::MixSeed(cfg.image_stage.seed, 2);
  tc.checkpoint_every = 0;
  tc.weight_reduction = trainer::WeightReduction::kBatchMean;
  const bool weighted = !class_weights.empty() &&
                        cfg.weight_application == WeightApplication::kLossWeight;
  IFTX_ASSIGN_OR_RETURN(
      trainer::TrainResult result,
      trainer::Train(head, stage.inputs, stage.labels, tc,
                     weighted ? std::span<const double>(stage.weights)
                              : std::span<const double>()));
  return std::move(result.head);
}

absl::StatusOr<XModalResult> RunCrossModal(
    const embed::EmbeddingMatrix& train, std::span<const int> train_labels,
    const embed::EmbeddingMatrix& test, std::span<const int> test_labels,
    const embed::EmbeddingMatrix& texts,
    const std::vector<ift::ProponentSet>& sets,
    std::span<const double> class_weights, int num_classes,
    const XModalConfig& cfg,
    const std::optional<trainer::LinearHead>& image_head) {
  IFTX_RETURN_IF_ERROR(ValidateXModalConfig(cfg));
  if (train.dim() != texts.dim() || test.dim() != texts.dim()) {
    return absl::InvalidArgumentError(util::StrCat(
        "image dim ", train.dim(), " and text dim ", texts.dim(), " differ"));
  }
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix train_n,
                        MaybeNormalize(train, cfg.normalize_inputs));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix test_n,
                        MaybeNormalize(test, cfg.normalize_inputs));
  IFTX_ASSIGN_OR_RETURN(const embed::EmbeddingMatrix texts_n,
                        MaybeNormalize(texts, cfg.normalize_inputs));

  XModalResult out;
  if (image_head.has_value()) {
    out.head = *image_head;
  } else {
    trainer::TrainConfig tc = cfg.image_stage;
    tc.normalize_inputs = false;
    IFTX_ASSIGN_OR_RETURN(
        trainer::TrainResult step1,
        trainer::Train(trainer::LinearHead::Zeros(num_classes, train.dim()),
                       train_n, train_labels, tc));
    out.head = std::move(step1.head);
  }
  out.after_images = EvaluateHead(out.head, test_n, test_labels);
  IFTX_ASSIGN_OR_RETURN(
      out.head, TrainTextStage(out.head, texts_n, sets, class_weights, cfg));
  out.after_texts = EvaluateHead(out.head, test_n, test_labels);
  return out;
}

absl::StatusOr<Evaluation> ZeroShotClassify(
    const embed::EmbeddingMatrix& test, std::span<const int> test_labels,
    const embed::EmbeddingMatrix& descriptions,
    std::span<const int> description_classes, int num_classes) {
  if (test.dim() != descriptions.dim()) {
    return absl::InvalidArgumentError(util::StrCat(
        "image dim ", test.dim(), " != description dim ", descriptions.dim()));
  }
  if (description_classes.size() != static_cast<size_t>(descriptions.count())) {
    return absl::InvalidArgumentError("description classes do not match rows");
  }
  std::vector<std::vector<int>> by_class(num_classes);
  for (size_t d = 0; d < description_classes.size(); ++d) {
    const int c = description_classes[d];
    if (c < 0 || c >= num_classes) {
      return absl::InvalidArgumentError(
          util::StrCat("description ", descriptions.id(d), ": bad class ", c));
    }
    by_class[c].push_back(static_cast<int>(d));
  }
  std::vector<int> empty;
  for (int c = 0; c < num_classes; ++c) {
    if (by_class[c].empty()) empty.push_back(c);
  }
  if (!empty.empty()) {
    return absl::FailedPreconditionError(fmt::format(
        "empty description set for class(es) {}", fmt::join(empty, ", ")));
  }
  std::vector<double> desc_norm(descriptions.count());
  for (int d = 0; d < descriptions.count(); ++d) {
    desc_norm[d] = std::sqrt(embed::SquaredNorm(descriptions.row(d)));
    if (!(desc_norm[d] > 0.0)) {
      return absl::InvalidArgumentError(util::StrCat(
          "description ", descriptions.id(d), " has zero norm"));
    }
  }
  std::vector<int> predictions;
  predictions.reserve(test.count());
  for (int i = 0; i < test.count(); ++i) {
    const auto x = test.row(i);
    const double xn = std::sqrt(embed::SquaredNorm(x));
    if (!(xn > 0.0)) {
      return absl::InvalidArgumentError(
          util::StrCat("image ", test.id(i), " has zero norm"));
    }
    int best = 0;
    double best_score = -INFINITY;
    for (int c = 0; c < num_classes; ++c) {
      double sum = 0.0;
      for (int d : by_class[c]) {
        sum += embed::Dot(x, descriptions.row(d)) / (xn * desc_norm[d]);
      }
      const double score = sum / static_cast<double>(by_class[c].size());
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    predictions.push_back(best);
  }
  return Score(predictions, test_labels, num_classes);
}

absl::StatusOr<std::vector<MethodAccuracy>> CompareMethods(
    const std::vector<MethodDescriptions>& methods,
    const embed::EmbeddingMatrix& test, std::span<const int> test_labels,
    int num_classes) {
  std::vector<std::string> problems;
  for (const MethodDescriptions& m : methods) {
    std::vector<bool> seen(num_classes, false);
    for (int c : m.classes) {
      if (c >= 0 && c < num_classes) seen[c] = true;
    }
    std::vector<int> missing;
    for (int c = 0; c < num_classes; ++c) {
      if (!seen[c]) missing.push_back(c);
    }
    if (!missing.empty()) {
      problems.push_back(fmt::format("{}: missing class(es) {}", m.method,
                                     fmt::join(missing, ", ")));
    }
  }
  if (!problems.empty()) {
    return absl::FailedPreconditionError(
        fmt::format("class coverage mismatch; {}", fmt::join(problems, "; ")));
  }
  std::vector<MethodAccuracy> out;
  for (const MethodDescriptions& m : methods) {
    IFTX_ASSIGN_OR_RETURN(const Evaluation e,
                          ZeroShotClassify(test, test_labels, m.embeddings,
                                           m.classes, num_classes));
    out.push_back({m.method, e.accuracy});
  }
  return out;
}

std::string_view TrackName(Track t) {
  switch (t) {
    case Track::kZeroShot:
      return "zero_shot";
    case Track::kXModal:
      return "xmodal";
    case Track::kOnlyImages:
      return "only_images";
  }
  return "";
}

absl::StatusOr<Track> ParseTrack(std::string_view name) {
  for (Track t : {Track::kZeroShot, Track::kXModal, Track::kOnlyImages}) {
    if (name == TrackName(t)) return t;
  }
  return absl::InvalidArgumentError(util::StrCat("unknown track '", name, "'"));
}

std::string FormatResultLine(std::string_view method, std::string_view dataset,
                             Track track, double accuracy) {
  return util::StrCat(method, "\t", dataset, "\t", TrackName(track), "\t",
                      util::FormatDouble(accuracy), "\n");
}

absl::StatusOr<std::vector<ResultRow>> ParseResults(std::string_view text) {
  std::vector<ResultRow> rows;
  const std::vector<std::string_view> lines = util::SplitLines(text);
  for (size_t l = 0; l < lines.size(); ++l) {
    if (util::TrimWhitespace(lines[l]).empty() || lines[l][0] == '#') continue;
    const std::vector<std::string_view> f = util::SplitFields(lines[l], '\t');
    if (f.size() != 4) {
      return absl::InvalidArgumentError(util::StrCat(
          "results line ", l + 1, ": expected 4 fields, got ", f.size()));
    }
    ResultRow row;
    row.method = std::string(f[0]);
    row.dataset = std::string(f[1]);
    IFTX_ASSIGN_OR_RETURN(row.track, ParseTrack(f[2]));
    IFTX_ASSIGN_OR_RETURN(row.accuracy, util::ParseDouble(f[3]));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace iftx::xmodal
