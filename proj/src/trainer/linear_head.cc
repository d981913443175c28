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

#include "iftx/trainer/linear_head.h"

#include <algorithm>
#include <cmath>

#include "iftx/util/status_macros.h"
#include "iftx/util/text_io.h"

namespace iftx::trainer {
namespace {

// Loss of a head held in double precision; used by the finite-difference
// check so that perturbations are not swallowed by float rounding.
double LossF64(std::span<const double> weights, std::span<const double> bias,
               int num_classes, int dim, std::span<const float> x, int label) {
  std::vector<double> logits(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    double z = bias[c];
    for (int k = 0; k < dim; ++k) z += weights[c * dim + k] * x[k];
    logits[c] = z;
  }
  return SoftmaxCrossEntropyFromLogits(logits, label)->loss;
}

absl::Status CheckInput(const LinearHead& head, std::span<const float> x,
                        int label) {
  if (static_cast<int>(x.size()) != head.dim) {
    return absl::InvalidArgumentError(
        util::StrCat("input dim ", x.size(), " != head dim ", head.dim));
  }
  if (label < 0 || label >= head.num_classes) {
    return absl::InvalidArgumentError(util::StrCat(
        "label ", label, " outside [0, ", head.num_classes, ")"));
  }
  return absl::OkStatus();
}

}  // namespace

LinearHead LinearHead::Zeros(int num_classes, int dim) {
  LinearHead head;
  head.num_classes = num_classes;
  head.dim = dim;
  head.weights.assign(static_cast<size_t>(num_classes) * dim, 0.0f);
  head.bias.assign(num_classes, 0.0f);
  return head;
}

std::vector<double> LinearHead::Logits(std::span<const float> x) const {
  std::vector<double> logits(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    double z = bias[c];
    const auto w = WeightRow(c);
    for (int k = 0; k < dim; ++k) {
      z += static_cast<double>(w[k]) * static_cast<double>(x[k]);
    }
    logits[c] = z;
  }
  return logits;
}

int LinearHead::Predict(std::span<const float> x) const {
  const std::vector<double> logits = Logits(x);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                          logits.begin());
}

absl::Status ValidateHead(const LinearHead& head) {
  if (head.num_classes < 1 || head.dim < 0) {
    return absl::InvalidArgumentError(util::StrCat(
        "bad head shape ", head.num_classes, "x", head.dim));
  }
  if (head.weights.size() != static_cast<size_t>(head.num_classes) * head.dim ||
      head.bias.size() != static_cast<size_t>(head.num_classes)) {
    return absl::InvalidArgumentError("head parameter sizes do not match shape");
  }
  for (float v : head.weights) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("non-finite head weight");
    }
  }
  for (float v : head.bias) {
    if (!std::isfinite(v)) return absl::InvalidArgumentError("non-finite bias");
  }
  return absl::OkStatus();
}

absl::StatusOr<CrossEntropy> SoftmaxCrossEntropyFromLogits(
    std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    return absl::InvalidArgumentError(util::StrCat("label ", label,
                                                   " out of range"));
  }
  double max_logit = -INFINITY;
  for (double z : logits) {
    if (!std::isfinite(z)) {
      return absl::InvalidArgumentError("non-finite logit");
    }
    max_logit = std::max(max_logit, z);
  }
  CrossEntropy out;
  out.probs.resize(logits.size());
  double denom = 0.0;
  for (size_t c = 0; c < logits.size(); ++c) {
    out.probs[c] = std::exp(logits[c] - max_logit);
    denom += out.probs[c];
  }
  for (double& p : out.probs) p /= denom;
  out.loss = std::log(denom) - (logits[label] - max_logit);
  return out;
}

absl::StatusOr<CrossEntropy> SoftmaxCrossEntropy(const LinearHead& head,
                                                 std::span<const float> x,
                                                 int label) {
  IFTX_RETURN_IF_ERROR(CheckInput(head, x, label));
  return SoftmaxCrossEntropyFromLogits(head.Logits(x), label);
}

absl::StatusOr<HeadGradient> CrossEntropyGradient(const LinearHead& head,
                                                  std::span<const float> x,
                                                  int label) {
  IFTX_ASSIGN_OR_RETURN(const CrossEntropy ce,
                        SoftmaxCrossEntropy(head, x, label));
  HeadGradient grad;
  grad.bias = ce.probs;
  grad.bias[label] -= 1.0;
  grad.weights.resize(static_cast<size_t>(head.num_classes) * head.dim);
  for (int c = 0; c < head.num_classes; ++c) {
    for (int k = 0; k < head.dim; ++k) {
      grad.weights[c * head.dim + k] = grad.bias[c] * x[k];
    }
  }
  return grad;
}

absl::StatusOr<double> GradCheck(const LinearHead& head,
                                 std::span<const float> x, int label,
                                 double step) {
  IFTX_ASSIGN_OR_RETURN(const HeadGradient analytic,
                        CrossEntropyGradient(head, x, label));
  std::vector<double> weights(head.weights.begin(), head.weights.end());
  std::vector<double> bias(head.bias.begin(), head.bias.end());
  const auto central = [&](double& param) {
    const double saved = param;
    param = saved + step;
    const double plus = LossF64(weights, bias, head.num_classes, head.dim, x,
                                label);
    param = saved - step;
    const double minus = LossF64(weights, bias, head.num_classes, head.dim, x,
                                 label);
    param = saved;
    return (plus - minus) / (2.0 * step);
  };
  double max_diff = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(central(weights[i]) -
                                           analytic.weights[i]));
  }
  for (size_t c = 0; c < bias.size(); ++c) {
    max_diff = std::max(max_diff, std::abs(central(bias[c]) - analytic.bias[c]));
  }
  return max_diff;
}

}  // namespace iftx::trainer
