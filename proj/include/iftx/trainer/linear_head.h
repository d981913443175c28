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

// Linear softmax classifier over frozen embeddings, its cross-entropy loss
// and the analytic loss gradient.

#ifndef IFTX_TRAINER_LINEAR_HEAD_H_
#define IFTX_TRAINER_LINEAR_HEAD_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace iftx::trainer {

// logits = W x + b, W is num_classes x dim row-major.
struct LinearHead {
  int num_classes = 0;
  int dim = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  static LinearHead Zeros(int num_classes, int dim);

  std::span<const float> WeightRow(int c) const {
    return std::span<const float>(weights).subspan(
        static_cast<size_t>(c) * dim, dim);
  }

  // Logits accumulated in double.
  std::vector<double> Logits(std::span<const float> x) const;

  // Argmax of the logits; ties go to the lower class index.
  int Predict(std::span<const float> x) const;
};

absl::Status ValidateHead(const LinearHead& head);

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> probs;
};

// Softmax with max-subtraction, then -log p[label].
absl::StatusOr<CrossEntropy> SoftmaxCrossEntropy(const LinearHead& head,
                                                 std::span<const float> x,
                                                 int label);

// Same, from double-precision logits.
absl::StatusOr<CrossEntropy> SoftmaxCrossEntropyFromLogits(
    std::span<const double> logits, int label);

// d loss / d W = (p - e_y) x^T and d loss / d b = p - e_y.
struct HeadGradient {
  std::vector<double> weights;  // num_classes x dim
  std::vector<double> bias;     // num_classes
};

absl::StatusOr<HeadGradient> CrossEntropyGradient(const LinearHead& head,
                                                  std::span<const float> x,
                                                  int label);

// Largest absolute difference between the analytic gradient and central
// finite differences of the loss with the given step, evaluated in double.
absl::StatusOr<double> GradCheck(const LinearHead& head,
                                 std::span<const float> x, int label,
                                 double step = 1e-4);

}  // namespace iftx::trainer

#endif  // IFTX_TRAINER_LINEAR_HEAD_H_
