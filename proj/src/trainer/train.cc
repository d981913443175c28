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

#include "iftx/trainer/train.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "iftx/embed/kernels.h"
#include "iftx/embed/xemb_io.h"
#include "iftx/util/rng.h"
#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::trainer {
namespace {

constexpr std::string_view kCheckpointMagic = "XCKPT1";

absl::Status CheckData(const LinearHead& head,
                       const embed::EmbeddingMatrix& inputs,
                       std::span<const int> labels) {
  IFTX_RETURN_IF_ERROR(ValidateHead(head));
  if (inputs.dim() != head.dim) {
    return absl::InvalidArgumentError(util::StrCat(
        "embedding dim ", inputs.dim(), " != head dim ", head.dim));
  }
  if (labels.size() != static_cast<size_t>(inputs.count())) {
    return absl::InvalidArgumentError(util::StrCat(
        labels.size(), " labels for ", inputs.count(), " rows"));
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= head.num_classes) {
      return absl::InvalidArgumentError(util::StrCat(
          "row ", i, " (", inputs.id(i), "): label ", labels[i],
          " outside [0, ", head.num_classes, ")"));
    }
  }
  return absl::OkStatus();
}

void ApplyStep(const HeadGradient& grad, double lr, LinearHead* head) {
  for (size_t i = 0; i < head->weights.size(); ++i) {
    head->weights[i] = static_cast<float>(head->weights[i] - lr * grad.weights[i]);
  }
  for (size_t c = 0; c < head->bias.size(); ++c) {
    head->bias[c] = static_cast<float>(head->bias[c] - lr * grad.bias[c]);
  }
}

}  // namespace

absl::Status ValidateTrainConfig(const TrainConfig& cfg) {
  if (!(cfg.lr0 > 0.0) || !std::isfinite(cfg.lr0)) {
    return absl::InvalidArgumentError("lr0 must be > 0");
  }
  if (cfg.batch_size < 1) {
    return absl::InvalidArgumentError("batch_size must be >= 1");
  }
  if (cfg.t_max < 1) return absl::InvalidArgumentError("t_max must be >= 1");
  if (cfg.epochs < 0 || cfg.start_epoch < 0) {
    return absl::InvalidArgumentError("epochs and start_epoch must be >= 0");
  }
  if (cfg.checkpoint_every < 0) {
    return absl::InvalidArgumentError("checkpoint_every must be >= 0");
  }
  if (cfg.schedule == LrSchedule::kStep &&
      (cfg.step_every < 1 || !(cfg.step_gamma > 0.0))) {
    return absl::InvalidArgumentError("bad step schedule");
  }
  return absl::OkStatus();
}

double CosineLr(int t, const TrainConfig& cfg) {
  const double frac =
      static_cast<double>(std::min(t, cfg.t_max)) / static_cast<double>(cfg.t_max);
  return cfg.lr0 * (1.0 + std::cos(std::numbers::pi * frac)) / 2.0;
}

double LearningRate(int t, const TrainConfig& cfg) {
  switch (cfg.schedule) {
    case LrSchedule::kCosine:
      return CosineLr(t, cfg);
    case LrSchedule::kStep:
      return cfg.lr0 * std::pow(cfg.step_gamma, t / cfg.step_every);
  }
  return 0.0;
}

absl::StatusOr<BatchGradient> ComputeBatchGradient(
    const LinearHead& head, const embed::EmbeddingMatrix& inputs,
    std::span<const int> labels, std::span<const size_t> rows,
    std::span<const double> loss_weights, WeightReduction reduction) {
  BatchGradient out;
  out.grad.weights.assign(head.weights.size(), 0.0);
  out.grad.bias.assign(head.bias.size(), 0.0);
  if (rows.empty()) return out;
  const double inv_batch = 1.0 / static_cast<double>(rows.size());
  for (size_t r : rows) {
    const auto x = inputs.row(r);
    IFTX_ASSIGN_OR_RETURN(const CrossEntropy ce,
                          SoftmaxCrossEntropy(head, x, labels[r]));
    double coef = inv_batch;
    if (!loss_weights.empty()) {
      coef = reduction == WeightReduction::kSum
                 ? loss_weights[r]
                 : loss_weights[r] * inv_batch;
    }
    out.loss += coef * ce.loss;
    for (int c = 0; c < head.num_classes; ++c) {
      const double residual =
          coef * (ce.probs[c] - (c == labels[r] ? 1.0 : 0.0));
      out.grad.bias[c] += residual;
      double* gw = out.grad.weights.data() + static_cast<size_t>(c) * head.dim;
      for (int k = 0; k < head.dim; ++k) gw[k] += residual * x[k];
    }
  }
  return out;
}

absl::StatusOr<double> MeanLoss(const LinearHead& head,
                                const embed::EmbeddingMatrix& inputs,
                                std::span<const int> labels) {
  IFTX_RETURN_IF_ERROR(CheckData(head, inputs, labels));
  if (inputs.count() == 0) return 0.0;
  double total = 0.0;
  for (int r = 0; r < inputs.count(); ++r) {
    IFTX_ASSIGN_OR_RETURN(const CrossEntropy ce,
                          SoftmaxCrossEntropy(head, inputs.row(r), labels[r]));
    total += ce.loss;
  }
  return total / static_cast<double>(inputs.count());
}

absl::StatusOr<TrainResult> Train(const LinearHead& init,
                                  const embed::EmbeddingMatrix& inputs,
                                  std::span<const int> labels,
                                  const TrainConfig& cfg,
                                  std::span<const double> loss_weights) {
  IFTX_RETURN_IF_ERROR(ValidateTrainConfig(cfg));
  IFTX_RETURN_IF_ERROR(CheckData(init, inputs, labels));
  if (inputs.empty()) {
    return absl::InvalidArgumentError("training data is empty");
  }
  if (!loss_weights.empty() && loss_weights.size() != static_cast<size_t>(inputs.count())) {
    return absl::InvalidArgumentError(util::StrCat(
        loss_weights.size(), " loss weights for ", inputs.count(), " rows"));
  }
  for (double w : loss_weights) {
    if (!std::isfinite(w)) {
      return absl::InvalidArgumentError("non-finite loss weight");
    }
  }

  embed::EmbeddingMatrix data = inputs;
  if (cfg.normalize_inputs) {
    IFTX_ASSIGN_OR_RETURN(data, embed::L2Normalize(inputs));
  }

  TrainResult result;
  result.head = init;
  const size_t n = data.count();
  std::vector<size_t> order(n);
  for (int epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    util::Rng rng(util::MixSeed(cfg.seed, static_cast<uint64_t>(epoch)));
    rng.Shuffle(std::span<size_t>(order));
    const double lr = LearningRate(epoch, cfg);
    int batch_index = 0;
    for (size_t begin = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
      const size_t end = std::min(n, begin + static_cast<size_t>(cfg.batch_size));
      const std::span<const size_t> rows(order.data() + begin, end - begin);
      auto batch = ComputeBatchGradient(result.head, data, labels, rows,
                                        loss_weights, cfg.weight_reduction);
      if (!batch.ok() || !std::isfinite(batch->loss)) {
        return absl::AbortedError(util::StrCat(
            "non-finite loss at epoch ", epoch, ", batch ", batch_index,
            batch.ok() ? "" : util::StrCat(": ", batch.status().message())));
      }
      ApplyStep(batch->grad, lr, &result.head);
    }
    IFTX_ASSIGN_OR_RETURN(const double loss, MeanLoss(result.head, data, labels));
    result.epoch_losses.push_back(loss);
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
        lr > 0.0) {
      result.checkpoints.push_back({result.head, lr, epoch + 1});
    }
  }
  return result;
}

double Accuracy(const LinearHead& head, const embed::EmbeddingMatrix& inputs,
                std::span<const int> labels) {
  if (inputs.empty()) return 0.0;
  size_t correct = 0;
  for (int r = 0; r < inputs.count(); ++r) {
    correct += head.Predict(inputs.row(r)) == labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(inputs.count());
}

std::string EncodeCheckpoint(const Checkpoint& ckpt) {
  std::string out = util::StrCat(kCheckpointMagic, " dim=", ckpt.params.dim,
                                 " classes=", ckpt.params.num_classes,
                                 " epoch=", ckpt.epoch,
                                 " lr=", util::FormatDouble(ckpt.lr_at_save),
                                 "\n");
  embed::AppendF32Le(ckpt.params.weights, &out);
  embed::AppendF32Le(ckpt.params.bias, &out);
  return out;
}

absl::StatusOr<Checkpoint> DecodeCheckpoint(std::string_view bytes) {
  const size_t newline = bytes.find('\n');
  if (newline == std::string_view::npos) {
    return absl::DataLossError("checkpoint: truncated header");
  }
  const std::vector<std::string_view> fields =
      util::SplitFields(bytes.substr(0, newline), ' ');
  if (fields.size() != 5 || fields[0] != kCheckpointMagic) {
    return absl::DataLossError("checkpoint: bad magic");
  }
  const auto value = [&](size_t i, std::string_view key)
      -> absl::StatusOr<std::string_view> {
    if (fields[i].substr(0, key.size()) != key) {
      return absl::DataLossError(
          util::StrCat("checkpoint: expected field ", key));
    }
    return fields[i].substr(key.size());
  };
  IFTX_ASSIGN_OR_RETURN(const std::string_view dim_s, value(1, "dim="));
  IFTX_ASSIGN_OR_RETURN(const std::string_view classes_s, value(2, "classes="));
  IFTX_ASSIGN_OR_RETURN(const std::string_view epoch_s, value(3, "epoch="));
  IFTX_ASSIGN_OR_RETURN(const std::string_view lr_s, value(4, "lr="));
  IFTX_ASSIGN_OR_RETURN(const int64_t dim, util::ParseInt(dim_s));
  IFTX_ASSIGN_OR_RETURN(const int64_t classes, util::ParseInt(classes_s));
  IFTX_ASSIGN_OR_RETURN(const int64_t epoch, util::ParseInt(epoch_s));
  Checkpoint ckpt;
  IFTX_ASSIGN_OR_RETURN(ckpt.lr_at_save, util::ParseDouble(lr_s));
  if (dim < 0 || classes < 1 || epoch < 0) {
    return absl::DataLossError("checkpoint: bad shape");
  }
  ckpt.epoch = static_cast<int>(epoch);
  ckpt.params.dim = static_cast<int>(dim);
  ckpt.params.num_classes = static_cast<int>(classes);
  const size_t nw = static_cast<size_t>(dim * classes);
  std::string_view payload = bytes.substr(newline + 1);
  if (payload.size() != 4 * (nw + static_cast<size_t>(classes))) {
    return absl::DataLossError(util::StrCat(
        "checkpoint: payload is ", payload.size(), " bytes, expected ",
        4 * (nw + static_cast<size_t>(classes))));
  }
  IFTX_RETURN_IF_ERROR(embed::ReadF32Le(payload, nw, &ckpt.params.weights));
  IFTX_RETURN_IF_ERROR(embed::ReadF32Le(payload.substr(4 * nw),
                                        static_cast<size_t>(classes),
                                        &ckpt.params.bias));
  IFTX_RETURN_IF_ERROR(ValidateHead(ckpt.params));
  return ckpt;
}

absl::Status WriteCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  return util::WriteFile(path, EncodeCheckpoint(ckpt));
}

absl::StatusOr<Checkpoint> ReadCheckpoint(const std::string& path) {
  IFTX_ASSIGN_OR_RETURN(const std::string bytes, util::ReadFile(path));
  auto ckpt = DecodeCheckpoint(bytes);
  if (!ckpt.ok()) {
    return absl::Status(ckpt.status().code(),
                        util::StrCat(path, ": ", ckpt.status().message()));
  }
  return ckpt;
}

}  // namespace iftx::trainer
