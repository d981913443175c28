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

#include <cmath>
#include <numbers>
#include <vector>

#include "iftx/trainer/linear_head.h"
#include "iftx/trainer/train.h"
#include "iftx/util/rng.h"
#include "test_support.h"

namespace iftx::trainer {
namespace {

using ::testing::HasSubstr;

LinearHead RandomHead(int classes, int dim, util::Rng& rng, double scale) {
  LinearHead head = LinearHead::Zeros(classes, dim);
  for (float& w : head.weights) w = static_cast<float>(scale * rng.Normal());
  for (float& b : head.bias) b = static_cast<float>(scale * rng.Normal());
  return head;
}

std::vector<float> RandomVector(int dim, util::Rng& rng) {
  std::vector<float> x(dim);
  for (float& v : x) v = static_cast<float>(rng.Normal());
  return x;
}

// -log softmax(z)[y], evaluated directly in long double without the
// max-subtraction trick.
long double ReferenceLoss(const LinearHead& head, const std::vector<float>& x,
                          int y) {
  long double denom = 0.0L, target = 0.0L;
  for (int c = 0; c < head.num_classes; ++c) {
    long double z = head.bias[c];
    for (int k = 0; k < head.dim; ++k) {
      z += static_cast<long double>(head.weights[c * head.dim + k]) * x[k];
    }
    denom += std::exp(z);
    if (c == y) target = z;
  }
  return std::log(denom) - target;
}

embed::EmbeddingMatrix MatrixOf(const std::vector<std::vector<float>>& rows) {
  std::vector<std::string> ids;
  std::vector<float> data;
  for (size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("s" + std::to_string(i));
    data.insert(data.end(), rows[i].begin(), rows[i].end());
  }
  const int dim = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  return embed::EmbeddingMatrix::Create(dim, ids, data, false).value();
}

// Two well-separated 2-D clusters.
struct ToySet {
  embed::EmbeddingMatrix inputs;
  std::vector<int> labels;
};

ToySet SeparableToy(int per_class, uint64_t seed) {
  util::Rng rng(seed);
  std::vector<std::vector<float>> rows;
  ToySet toy;
  for (int c = 0; c < 2; ++c) {
    const float cx = c == 0 ? -1.5f : 1.5f;
    const float cy = c == 0 ? 0.5f : -0.5f;
    for (int i = 0; i < per_class; ++i) {
      rows.push_back({cx + static_cast<float>(0.3 * rng.Normal()),
                      cy + static_cast<float>(0.3 * rng.Normal())});
      toy.labels.push_back(c);
    }
  }
  toy.inputs = MatrixOf(rows);
  return toy;
}

// Searches a grid of directions and offsets for a line splitting the set.
bool BruteForceSeparable(const ToySet& toy) {
  for (int a = 0; a < 360; ++a) {
    const double th = a * std::numbers::pi / 180.0;
    const double u = std::cos(th), v = std::sin(th);
    for (int o = -40; o <= 40; ++o) {
      bool ok = true;
      for (int r = 0; r < toy.inputs.count() && ok; ++r) {
        const auto x = toy.inputs.row(r);
        const double s = u * x[0] + v * x[1] - 0.1 * o;
        ok = toy.labels[r] == 1 ? s > 0 : s < 0;
      }
      if (ok) return true;
    }
  }
  return false;
}

bool SameHead(const LinearHead& a, const LinearHead& b) {
  return a.num_classes == b.num_classes && a.dim == b.dim &&
         a.weights == b.weights && a.bias == b.bias;
}

TEST(SoftmaxTest, ZeroHeadIsUniform) {
  const LinearHead head = LinearHead::Zeros(4, 3);
  IFTX_ASSERT_OK_AND_ASSIGN(const CrossEntropy ce,
                            SoftmaxCrossEntropy(head, {{1.f, 2.f, 3.f}}, 2));
  EXPECT_NEAR(ce.loss, 1.3863, 1e-4);
  EXPECT_DOUBLE_EQ(ce.loss, std::log(4.0));
  for (double p : ce.probs) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(SoftmaxTest, LargeLogitsStayFinite) {
  const std::vector<double> logits = {1000.0, 0.0};
  IFTX_ASSERT_OK_AND_ASSIGN(const CrossEntropy a,
                            SoftmaxCrossEntropyFromLogits(logits, 0));
  IFTX_ASSERT_OK_AND_ASSIGN(const CrossEntropy b,
                            SoftmaxCrossEntropyFromLogits(logits, 1));
  EXPECT_TRUE(std::isfinite(a.loss));
  EXPECT_NEAR(a.loss, 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(b.loss, 1000.0);
}

TEST(SoftmaxTest, MatchesExtendedPrecision) {
  util::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const LinearHead head = RandomHead(5, 6, rng, 0.5);
    const std::vector<float> x = RandomVector(6, rng);
    const int y = static_cast<int>(rng.UniformIndex(5));
    IFTX_ASSERT_OK_AND_ASSIGN(const CrossEntropy ce,
                              SoftmaxCrossEntropy(head, x, y));
    EXPECT_NEAR(ce.loss, static_cast<double>(ReferenceLoss(head, x, y)), 1e-9);
    double sum = 0.0;
    for (double p : ce.probs) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(SoftmaxTest, RejectsBadInput) {
  const LinearHead head = LinearHead::Zeros(3, 2);
  EXPECT_FALSE(SoftmaxCrossEntropy(head, {{1.f}}, 0).ok());
  EXPECT_FALSE(SoftmaxCrossEntropy(head, {{1.f, 1.f}}, 3).ok());
  const std::vector<double> bad = {0.0, NAN};
  EXPECT_THAT(SoftmaxCrossEntropyFromLogits(bad, 0).status().message(),
              HasSubstr("non-finite"));
}

TEST(ScheduleTest, CosineEndpoints) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(CosineLr(0, cfg), 0.1);
  EXPECT_NEAR(CosineLr(200, cfg), 0.0, 1e-17);
  EXPECT_NEAR(CosineLr(100, cfg), 0.05, 1e-15);
  EXPECT_EQ(CosineLr(250, cfg), CosineLr(200, cfg));
  for (int t = 1; t <= 200; ++t) EXPECT_LE(CosineLr(t, cfg), CosineLr(t - 1, cfg));
}

TEST(ScheduleTest, StepDividesByTenEveryThirty) {
  TrainConfig cfg;
  cfg.schedule = LrSchedule::kStep;
  EXPECT_DOUBLE_EQ(LearningRate(0, cfg), 0.1);
  EXPECT_DOUBLE_EQ(LearningRate(29, cfg), 0.1);
  EXPECT_NEAR(LearningRate(30, cfg), 0.01, 1e-15);
  EXPECT_NEAR(LearningRate(65, cfg), 0.001, 1e-15);
}

TEST(GradCheckTest, RandomInstanceAgrees) {
  util::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearHead head = RandomHead(3, 8, rng, 0.3);
    const std::vector<float> x = RandomVector(8, rng);
    IFTX_ASSERT_OK_AND_ASSIGN(
        const double diff,
        GradCheck(head, x, static_cast<int>(rng.UniformIndex(3))));
    EXPECT_LT(diff, 1e-5);
  }
}

TEST(GradCheckTest, ZeroHeadClosedForm) {
  const LinearHead head = LinearHead::Zeros(3, 2);
  const std::vector<float> x = {2.f, -1.f};
  IFTX_ASSERT_OK_AND_ASSIGN(const HeadGradient g,
                            CrossEntropyGradient(head, x, 1));
  const double r[3] = {1.0 / 3, 1.0 / 3 - 1.0, 1.0 / 3};
  for (int c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(g.bias[c], r[c]);
    EXPECT_DOUBLE_EQ(g.weights[c * 2 + 0], r[c] * 2.0);
    EXPECT_DOUBLE_EQ(g.weights[c * 2 + 1], -r[c]);
  }
}

TEST(GradCheckTest, ZeroInputHasZeroWeightGradient) {
  util::Rng rng(5);
  const LinearHead head = RandomHead(4, 3, rng, 1.0);
  const std::vector<float> x(3, 0.f);
  IFTX_ASSERT_OK_AND_ASSIGN(const HeadGradient g,
                            CrossEntropyGradient(head, x, 0));
  IFTX_ASSERT_OK_AND_ASSIGN(const CrossEntropy ce,
                            SoftmaxCrossEntropy(head, x, 0));
  for (double w : g.weights) EXPECT_EQ(w, 0.0);
  for (int c = 0; c < 4; ++c) {
    EXPECT_DOUBLE_EQ(g.bias[c], ce.probs[c] - (c == 0 ? 1.0 : 0.0));
  }
}

TEST(TrainTest, SeparableToyReachesFullAccuracy) {
  const ToySet toy = SeparableToy(40, 11);
  ASSERT_TRUE(BruteForceSeparable(toy));
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.t_max = 30;
  cfg.batch_size = 16;
  cfg.seed = 4;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult result,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  EXPECT_EQ(Accuracy(result.head, toy.inputs, toy.labels), 1.0);
}

TEST(TrainTest, EpochLossMostlyNonIncreasing) {
  const ToySet toy = SeparableToy(50, 12);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.t_max = 60;
  cfg.batch_size = 8;
  cfg.seed = 9;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult result,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  ASSERT_EQ(result.epoch_losses.size(), 60u);
  int ok = 0;
  for (size_t e = 1; e < result.epoch_losses.size(); ++e) {
    ok += result.epoch_losses[e] <= result.epoch_losses[e - 1];
  }
  EXPECT_GE(ok, static_cast<int>(std::ceil(0.9 * 59)));
}

TEST(TrainTest, FullBatchMatchesIndependentGradientDescent) {
  // One batch per epoch makes SGD plain gradient descent, which is simple to
  // replay in long double.
  const ToySet toy = SeparableToy(6, 13);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.t_max = 5;
  cfg.batch_size = 64;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult result,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  long double w[2][2] = {}, b[2] = {};
  const size_t n = toy.inputs.count();
  for (int t = 0; t < 5; ++t) {
    const long double lr =
        0.1L * (1 + std::cos(std::numbers::pi_v<long double> * t / 5)) / 2;
    long double gw[2][2] = {}, gb[2] = {};
    for (size_t r = 0; r < n; ++r) {
      const auto x = toy.inputs.row(r);
      long double z[2], m = -INFINITY, s = 0;
      for (int c = 0; c < 2; ++c) {
        z[c] = b[c] + w[c][0] * x[0] + w[c][1] * x[1];
        m = std::max(m, z[c]);
      }
      for (int c = 0; c < 2; ++c) s += std::exp(z[c] - m);
      for (int c = 0; c < 2; ++c) {
        const long double res =
            std::exp(z[c] - m) / s - (c == toy.labels[r] ? 1 : 0);
        gb[c] += res / n;
        gw[c][0] += res * x[0] / n;
        gw[c][1] += res * x[1] / n;
      }
    }
    for (int c = 0; c < 2; ++c) {
      b[c] -= lr * gb[c];
      w[c][0] -= lr * gw[c][0];
      w[c][1] -= lr * gw[c][1];
    }
  }
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(result.head.bias[c], static_cast<double>(b[c]), 1e-6);
    EXPECT_NEAR(result.head.weights[c * 2], static_cast<double>(w[c][0]), 1e-6);
    EXPECT_NEAR(result.head.weights[c * 2 + 1], static_cast<double>(w[c][1]),
                1e-6);
  }
}

TEST(TrainTest, UniformInverseCountWeightsAreBitIdentical) {
  const ToySet toy = SeparableToy(20, 14);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 64;
  cfg.seed = 2;
  const std::vector<double> weights(toy.inputs.count(),
                                    1.0 / toy.inputs.count());
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult plain,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult weighted,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg, weights));
  EXPECT_TRUE(SameHead(plain.head, weighted.head));
}

TEST(TrainTest, UnitBatchMeanWeightsAreBitIdentical) {
  const ToySet toy = SeparableToy(50, 15);
  TrainConfig cfg;
  cfg.epochs = 7;
  cfg.batch_size = 16;
  cfg.weight_reduction = WeightReduction::kBatchMean;
  const std::vector<double> ones(toy.inputs.count(), 1.0);
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult plain,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult weighted,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg, ones));
  EXPECT_TRUE(SameHead(plain.head, weighted.head));
}

TEST(TrainTest, UniformWeightScalesBatchGradient) {
  util::Rng rng(21);
  const ToySet toy = SeparableToy(10, 16);
  const LinearHead head = RandomHead(2, 2, rng, 0.5);
  std::vector<size_t> rows = {3, 1, 4, 15, 9, 2, 6};
  for (double w : {0.37, 1.0 / 200, 2.5}) {
    const std::vector<double> weights(toy.inputs.count(), w);
    IFTX_ASSERT_OK_AND_ASSIGN(
        const BatchGradient plain,
        ComputeBatchGradient(head, toy.inputs, toy.labels, rows, {},
                             WeightReduction::kBatchMean));
    IFTX_ASSERT_OK_AND_ASSIGN(
        const BatchGradient weighted,
        ComputeBatchGradient(head, toy.inputs, toy.labels, rows, weights,
                             WeightReduction::kBatchMean));
    for (size_t i = 0; i < plain.grad.weights.size(); ++i) {
      EXPECT_NEAR(weighted.grad.weights[i], w * plain.grad.weights[i], 1e-12);
      EXPECT_NEAR(static_cast<float>(weighted.grad.weights[i]),
                  static_cast<float>(w * plain.grad.weights[i]), 1e-6);
    }
    for (size_t c = 0; c < plain.grad.bias.size(); ++c) {
      EXPECT_NEAR(weighted.grad.bias[c], w * plain.grad.bias[c], 1e-12);
    }
  }
}

TEST(TrainTest, SameSeedSameCheckpoints) {
  const ToySet toy = SeparableToy(30, 17);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 7;
  cfg.seed = 5;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult a,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult b,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  ASSERT_EQ(a.checkpoints.size(), 3u);
  ASSERT_EQ(b.checkpoints.size(), 3u);
  for (size_t j = 0; j < 3; ++j) {
    EXPECT_TRUE(SameHead(a.checkpoints[j].params, b.checkpoints[j].params));
    EXPECT_EQ(a.checkpoints[j].lr_at_save, b.checkpoints[j].lr_at_save);
  }
  cfg.seed = 6;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult c,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  EXPECT_FALSE(SameHead(a.checkpoints[0].params, c.checkpoints[0].params));
}

TEST(TrainTest, CheckpointsRecordEpochAndLearningRate) {
  const ToySet toy = SeparableToy(10, 18);
  TrainConfig cfg;
  cfg.epochs = 25;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult result,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  ASSERT_EQ(result.checkpoints.size(), 2u);
  EXPECT_EQ(result.checkpoints[0].epoch, 10);
  EXPECT_EQ(result.checkpoints[1].epoch, 20);
  EXPECT_DOUBLE_EQ(result.checkpoints[0].lr_at_save, CosineLr(9, cfg));
  EXPECT_DOUBLE_EQ(result.checkpoints[1].lr_at_save, CosineLr(19, cfg));
  for (const auto& ck : result.checkpoints) EXPECT_GT(ck.lr_at_save, 0.0);
}

TEST(TrainTest, ResumeFromSavedCheckpointIsIdentical) {
  const ToySet toy = SeparableToy(25, 19);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 9;
  cfg.seed = 8;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult full,
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg));
  const std::string path = testing::ScratchDir() + "/ck10.xckpt";
  IFTX_ASSERT_OK(WriteCheckpoint(full.checkpoints[0], path));
  IFTX_ASSERT_OK_AND_ASSIGN(const Checkpoint loaded, ReadCheckpoint(path));
  EXPECT_TRUE(SameHead(loaded.params, full.checkpoints[0].params));
  EXPECT_EQ(loaded.lr_at_save, full.checkpoints[0].lr_at_save);
  EXPECT_EQ(loaded.epoch, 10);
  TrainConfig resume = cfg;
  resume.start_epoch = loaded.epoch;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const TrainResult rest,
      Train(loaded.params, toy.inputs, toy.labels, resume));
  EXPECT_TRUE(SameHead(rest.head, full.head));
}

TEST(TrainTest, LastPartialBatchIsUsed) {
  // Only sample i carries weight; the head moves in epoch 0 only if the
  // batch holding i is trained on, including the short last batch.
  const ToySet toy = SeparableToy(2, 20);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 3;
  for (size_t i = 0; i < 4; ++i) {
    std::vector<double> weights(4, 0.0);
    weights[i] = 1.0;
    IFTX_ASSERT_OK_AND_ASSIGN(
        const TrainResult r,
        Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg, weights));
    EXPECT_FALSE(SameHead(r.head, LinearHead::Zeros(2, 2))) << "sample " << i;
  }
}

TEST(TrainTest, NonFiniteLossNamesLocation) {
  const embed::EmbeddingMatrix inputs =
      MatrixOf({{1e10f, 1e10f}, {-1e10f, 1e10f}, {1e10f, -1e10f}});
  const std::vector<int> labels = {0, 1, 0};
  TrainConfig cfg;
  cfg.lr0 = 1e30;
  cfg.batch_size = 1;
  const auto r = Train(LinearHead::Zeros(2, 2), inputs, labels, cfg);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.status().code(), absl::StatusCode::kAborted);
  EXPECT_THAT(r.status().message(), HasSubstr("epoch 0, batch 1"));
}

TEST(TrainTest, RejectsMismatchedInputs) {
  const ToySet toy = SeparableToy(3, 21);
  TrainConfig cfg;
  EXPECT_FALSE(
      Train(LinearHead::Zeros(2, 3), toy.inputs, toy.labels, cfg).ok());
  std::vector<int> short_labels(toy.labels.begin(), toy.labels.end() - 1);
  EXPECT_FALSE(
      Train(LinearHead::Zeros(2, 2), toy.inputs, short_labels, cfg).ok());
  const std::vector<double> short_weights(2, 1.0);
  EXPECT_FALSE(Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg,
                     short_weights)
                   .ok());
  cfg.batch_size = 0;
  EXPECT_FALSE(
      Train(LinearHead::Zeros(2, 2), toy.inputs, toy.labels, cfg).ok());
}

TEST(CheckpointFileTest, HeaderAndLayout) {
  Checkpoint ck;
  ck.params = LinearHead::Zeros(2, 3);
  ck.params.weights = {1, 2, 3, 4, 5, 6};
  ck.params.bias = {-1, 0.5f};
  ck.lr_at_save = 0.05;
  ck.epoch = 10;
  const std::string bytes = EncodeCheckpoint(ck);
  const std::string header = "XCKPT1 dim=3 classes=2 epoch=10 lr=0.05\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  EXPECT_EQ(bytes.size(), header.size() + 4 * 8);
  // W[0][1] = 2.0f = 0x40000000 little-endian.
  EXPECT_EQ(bytes.substr(header.size() + 4, 4), std::string("\0\0\0\x40", 4));
  IFTX_ASSERT_OK_AND_ASSIGN(const Checkpoint back, DecodeCheckpoint(bytes));
  EXPECT_TRUE(SameHead(back.params, ck.params));
}

TEST(CheckpointFileTest, CorruptInputsAreRejected) {
  Checkpoint ck;
  ck.params = LinearHead::Zeros(2, 2);
  ck.lr_at_save = 0.1;
  const std::string bytes = EncodeCheckpoint(ck);
  EXPECT_THAT(DecodeCheckpoint("XEMB1 dim=2\n").status().message(),
              HasSubstr("bad magic"));
  EXPECT_THAT(DecodeCheckpoint(bytes.substr(0, bytes.size() - 1))
                  .status()
                  .message(),
              HasSubstr("payload"));
  EXPECT_FALSE(DecodeCheckpoint("XCKPT1 dim=2").ok());
}

}  // namespace
}  // namespace iftx::trainer
