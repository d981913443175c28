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
#include "test_support.h"

namespace iftx::xmodal {
namespace {

using ::testing::HasSubstr;

embed::EmbeddingMatrix Build(const std::string& prefix, int dim,
                             const std::vector<std::vector<float>>& rows) {
  std::vector<std::string> ids;
  std::vector<float> data;
  for (size_t i = 0; i < rows.size(); ++i) {
    ids.push_back(prefix + std::to_string(i));
    data.insert(data.end(), rows[i].begin(), rows[i].end());
  }
  return embed::EmbeddingMatrix::Create(dim, ids, data, false).value();
}

// Gaussian clusters around random unit-ish class means.
struct Clusters {
  int classes = 0;
  int dim = 0;
  std::vector<std::vector<float>> means;
  embed::EmbeddingMatrix train, test;
  std::vector<int> train_labels, clean_train_labels, test_labels;
};

Clusters MakeClusters(int classes, int dim, int train_per_class,
                      int test_per_class, double noise, double corrupt,
                      uint64_t seed) {
  util::Rng rng(seed);
  Clusters c;
  c.classes = classes;
  c.dim = dim;
  for (int k = 0; k < classes; ++k) {
    std::vector<float> m(dim);
    for (float& v : m) v = static_cast<float>(rng.Normal());
    c.means.push_back(m);
  }
  const auto sample = [&](int k) {
    std::vector<float> x(dim);
    for (int d = 0; d < dim; ++d) {
      x[d] = c.means[k][d] + static_cast<float>(noise * rng.Normal());
    }
    return x;
  };
  std::vector<std::vector<float>> tr, te;
  for (int k = 0; k < classes; ++k) {
    for (int i = 0; i < train_per_class; ++i) {
      tr.push_back(sample(k));
      c.clean_train_labels.push_back(k);
      int y = k;
      if (rng.UniformDouble() < corrupt) {
        y = (k + 1 + static_cast<int>(rng.UniformIndex(classes - 1))) % classes;
      }
      c.train_labels.push_back(y);
    }
    for (int i = 0; i < test_per_class; ++i) {
      te.push_back(sample(k));
      c.test_labels.push_back(k);
    }
  }
  c.train = Build("tr", dim, tr);
  c.test = Build("te", dim, te);
  return c;
}

// Proponent sets holding `per_class` texts per class.
std::vector<ift::ProponentSet> SetsFor(const embed::EmbeddingMatrix& texts,
                                       int classes, int per_class) {
  std::vector<ift::ProponentSet> sets(classes);
  for (int k = 0; k < classes; ++k) {
    sets[k].class_index = k;
    for (int t = 0; t < per_class; ++t) {
      ift::IftRecord r;
      r.class_index = k;
      r.text_id = texts.id(k * per_class + t);
      sets[k].texts.push_back(r);
    }
  }
  return sets;
}

// Texts near the class means.
embed::EmbeddingMatrix TextsNearMeans(const Clusters& c, int per_class,
                                      double noise, uint64_t seed) {
  util::Rng rng(seed);
  std::vector<std::vector<float>> rows;
  for (int k = 0; k < c.classes; ++k) {
    for (int t = 0; t < per_class; ++t) {
      std::vector<float> x = c.means[k];
      for (float& v : x) v += static_cast<float>(noise * rng.Normal());
      rows.push_back(x);
    }
  }
  return Build("txt", c.dim, rows);
}

bool SameHead(const trainer::LinearHead& a, const trainer::LinearHead& b) {
  return a.weights == b.weights && a.bias == b.bias;
}

TEST(ZeroShotTest, ExactDescriptionMatch) {
  const auto descs = Build("d", 3, {{1, 0, 0}, {0, 1, 0}, {0, 0.6f, 0.8f}});
  const std::vector<int> dc = {0, 1, 2};
  const auto test = Build("x", 3, {{0, 0.6f, 0.8f}});
  const std::vector<int> labels = {2};
  IFTX_ASSERT_OK_AND_ASSIGN(const Evaluation e,
                            ZeroShotClassify(test, labels, descs, dc, 3));
  EXPECT_EQ(e.predictions[0], 2);
  EXPECT_EQ(e.accuracy, 1.0);
}

TEST(ZeroShotTest, TiesGoToLowerClass) {
  const auto descs = Build("d", 2, {{1, 0}, {0, 1}});
  const std::vector<int> dc = {1, 0};
  const auto test = Build("x", 2, {{1, 1}});
  IFTX_ASSERT_OK_AND_ASSIGN(
      const Evaluation e,
      ZeroShotClassify(test, std::vector<int>{0}, descs, dc, 2));
  EXPECT_EQ(e.predictions[0], 0);
}

TEST(ZeroShotTest, MatchesBruteForceLoop) {
  const Clusters c = MakeClusters(4, 6, 1, 5, 1.0, 0.0, 3);
  const embed::EmbeddingMatrix descs = TextsNearMeans(c, 3, 0.8, 4);
  std::vector<int> dc;
  for (int k = 0; k < 4; ++k) dc.insert(dc.end(), 3, k);
  IFTX_ASSERT_OK_AND_ASSIGN(
      const Evaluation e, ZeroShotClassify(c.test, c.test_labels, descs, dc, 4));
  ASSERT_EQ(c.test.count(), 20);
  int correct = 0;
  for (int i = 0; i < 20; ++i) {
    const auto x = c.test.row(i);
    int best = -1;
    long double best_score = -INFINITY;
    for (int k = 0; k < 4; ++k) {
      long double sum = 0;
      int n = 0;
      for (int d = 0; d < descs.count(); ++d) {
        if (dc[d] != k) continue;
        const auto t = descs.row(d);
        long double dot = 0, nx = 0, nt = 0;
        for (int j = 0; j < 6; ++j) {
          dot += static_cast<long double>(x[j]) * t[j];
          nx += static_cast<long double>(x[j]) * x[j];
          nt += static_cast<long double>(t[j]) * t[j];
        }
        sum += dot / std::sqrt(nx * nt);
        ++n;
      }
      if (sum / n > best_score) {
        best_score = sum / n;
        best = k;
      }
    }
    EXPECT_EQ(e.predictions[i], best) << "image " << i;
    correct += best == c.test_labels[i];
  }
  EXPECT_DOUBLE_EQ(e.accuracy, correct / 20.0);
}

TEST(ZeroShotTest, InvariantToPositiveScaling) {
  const Clusters c = MakeClusters(5, 8, 1, 10, 1.2, 0.0, 5);
  const embed::EmbeddingMatrix descs = TextsNearMeans(c, 2, 1.0, 6);
  std::vector<int> dc;
  for (int k = 0; k < 5; ++k) dc.insert(dc.end(), 2, k);
  IFTX_ASSERT_OK_AND_ASSIGN(
      const Evaluation base, ZeroShotClassify(c.test, c.test_labels, descs, dc, 5));

  IFTX_ASSERT_OK_AND_ASSIGN(const auto test_n, embed::L2Normalize(c.test));
  IFTX_ASSERT_OK_AND_ASSIGN(const auto descs_n, embed::L2Normalize(descs));
  IFTX_ASSERT_OK_AND_ASSIGN(
      const Evaluation normalized,
      ZeroShotClassify(test_n, c.test_labels, descs_n, dc, 5));
  EXPECT_EQ(normalized.predictions, base.predictions);

  util::Rng rng(7);
  std::vector<float> scaled(c.test.data().begin(), c.test.data().end());
  for (int i = 0; i < c.test.count(); ++i) {
    const float s = static_cast<float>(0.1 + 10 * rng.UniformDouble());
    for (int k = 0; k < 8; ++k) scaled[i * 8 + k] *= s;
  }
  std::vector<float> dscaled(descs.data().begin(), descs.data().end());
  for (float& v : dscaled) v *= 3.7f;
  const auto test_s =
      embed::EmbeddingMatrix::Create(8, c.test.ids(), scaled, false).value();
  const auto descs_s =
      embed::EmbeddingMatrix::Create(8, descs.ids(), dscaled, false).value();
  IFTX_ASSERT_OK_AND_ASSIGN(
      const Evaluation s, ZeroShotClassify(test_s, c.test_labels, descs_s, dc, 5));
  EXPECT_EQ(s.predictions, base.predictions);
}

TEST(ZeroShotTest, EmptyClassFails) {
  const auto descs = Build("d", 2, {{1, 0}});
  const auto r = ZeroShotClassify(Build("x", 2, {{1, 1}}), std::vector<int>{0},
                                  descs, std::vector<int>{0}, 2);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(r.status().message(), HasSubstr("class(es) 1"));
}

TEST(ScoreTest, AccuracyConsistentWithPerClass) {
  const std::vector<int> labels = {0, 0, 1, 2, 2, 2};
  const std::vector<int> preds = {0, 1, 1, 2, 0, 2};
  const Evaluation e = Score(preds, labels, 4);
  double weighted = 0;
  for (int c = 0; c < 4; ++c) weighted += e.per_class_accuracy[c] * e.class_sizes[c];
  EXPECT_DOUBLE_EQ(e.accuracy, weighted / 6);
  EXPECT_DOUBLE_EQ(e.accuracy, 4.0 / 6);
  EXPECT_EQ(e.class_sizes[3], 0);
}

TEST(CompareMethodsTest, OrderingAndCoverage) {
  const Clusters c = MakeClusters(4, 12, 1, 15, 1.0, 0.0, 8);
  const embed::EmbeddingMatrix means = TextsNearMeans(c, 1, 0.0, 9);
  util::Rng rng(10);
  std::vector<std::vector<float>> random_rows(4, std::vector<float>(12));
  for (auto& r : random_rows) {
    for (float& v : r) v = static_cast<float>(rng.Normal());
  }
  const std::vector<int> dc = {0, 1, 2, 3};
  std::vector<MethodDescriptions> methods = {
      {"means", means, dc},
      {"random", Build("r", 12, random_rows), dc},
      {"means_again", means, dc}};
  IFTX_ASSERT_OK_AND_ASSIGN(const auto rows,
                            CompareMethods(methods, c.test, c.test_labels, 4));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].accuracy, rows[2].accuracy);
  EXPECT_GT(rows[0].accuracy, rows[1].accuracy);

  methods.push_back({"partial", Build("p", 12, {random_rows[0]}), {0}});
  methods.push_back({"other", Build("o", 12, {random_rows[1]}), {1}});
  const auto bad = CompareMethods(methods, c.test, c.test_labels, 4);
  ASSERT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(), HasSubstr("partial"));
  EXPECT_THAT(bad.status().message(), HasSubstr("other"));
}

class CrossModalTest : public ::testing::Test {
 protected:
  void SetUp() override {
    clusters_ = MakeClusters(3, 16, 40, 60, 1.6, 0.2, 11);
    texts_ = TextsNearMeans(clusters_, 10, 0.3, 12);
    sets_ = SetsFor(texts_, 3, 10);
    cfg_.image_stage.epochs = 20;
    cfg_.image_stage.t_max = 20;
    cfg_.image_stage.batch_size = 16;
    cfg_.image_stage.seed = 3;
    cfg_.text_epochs = 30;
    cfg_.text_batch_size = 8;
  }

  Clusters clusters_;
  embed::EmbeddingMatrix texts_;
  std::vector<ift::ProponentSet> sets_;
  XModalConfig cfg_;
};

TEST_F(CrossModalTest, TextStageHelpsUnderLabelNoise) {
  const std::vector<double> w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  cfg_.text_lr0 = 3.0;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const XModalResult r,
      RunCrossModal(clusters_.train, clusters_.train_labels, clusters_.test,
                    clusters_.test_labels, texts_, sets_, w, 3, cfg_));
  EXPECT_GE(r.after_texts.accuracy, r.after_images.accuracy);

  // Nearest class mean on normalized inputs as the reference ceiling.
  IFTX_ASSERT_OK_AND_ASSIGN(const auto test_n, embed::L2Normalize(clusters_.test));
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto means_n,
      embed::L2Normalize(TextsNearMeans(clusters_, 1, 0.0, 0)));
  int correct = 0;
  for (int i = 0; i < test_n.count(); ++i) {
    int best = 0;
    double bd = INFINITY;
    for (int k = 0; k < 3; ++k) {
      double d = 0;
      for (int j = 0; j < 16; ++j) {
        const double diff = test_n.row(i)[j] - means_n.row(k)[j];
        d += diff * diff;
      }
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    correct += best == clusters_.test_labels[i];
  }
  const double nearest_mean = static_cast<double>(correct) / test_n.count();
  EXPECT_GE(nearest_mean, r.after_images.accuracy);
}

TEST_F(CrossModalTest, ZeroLearningRateKeepsImageModel) {
  const std::vector<double> w = {0.2, 0.3, 0.5};
  cfg_.text_lr0 = 0.0;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const XModalResult r,
      RunCrossModal(clusters_.train, clusters_.train_labels, clusters_.test,
                    clusters_.test_labels, texts_, sets_, w, 3, cfg_));
  EXPECT_EQ(r.after_texts.accuracy, r.after_images.accuracy);
  EXPECT_EQ(r.after_texts.predictions, r.after_images.predictions);
}

TEST_F(CrossModalTest, ZeroWeightsKeepImageModelExactly) {
  util::Rng rng(13);
  trainer::LinearHead head = trainer::LinearHead::Zeros(3, 16);
  for (float& v : head.weights) v = static_cast<float>(rng.Normal());
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  IFTX_ASSERT_OK_AND_ASSIGN(const auto after,
                            TrainTextStage(head, texts_, sets_, zero, cfg_));
  EXPECT_TRUE(SameHead(after, head));
}

TEST_F(CrossModalTest, UniformWeightsAreAGlobalGradientScale) {
  util::Rng rng(14);
  trainer::LinearHead head = trainer::LinearHead::Zeros(3, 16);
  for (float& v : head.weights) v = static_cast<float>(0.3 * rng.Normal());
  const std::vector<double> uniform(3, 1.0 / 3);
  XModalConfig scaled = cfg_;
  scaled.text_lr0 = cfg_.text_lr0 * 3;
  IFTX_ASSERT_OK_AND_ASSIGN(const auto weighted,
                            TrainTextStage(head, texts_, sets_, uniform, scaled));
  IFTX_ASSERT_OK_AND_ASSIGN(const auto plain,
                            TrainTextStage(head, texts_, sets_, {}, cfg_));
  for (size_t i = 0; i < plain.weights.size(); ++i) {
    EXPECT_NEAR(weighted.weights[i], plain.weights[i], 1e-5);
  }
  const Evaluation a = EvaluateHead(weighted, clusters_.test, clusters_.test_labels);
  const Evaluation b = EvaluateHead(plain, clusters_.test, clusters_.test_labels);
  EXPECT_EQ(a.predictions, b.predictions);
}

TEST_F(CrossModalTest, WeightScaleTradesAgainstLearningRateInOneStep) {
  util::Rng rng(15);
  trainer::LinearHead head = trainer::LinearHead::Zeros(3, 16);
  for (float& v : head.weights) v = static_cast<float>(0.3 * rng.Normal());
  XModalConfig one = cfg_;
  one.text_epochs = 1;
  one.text_batch_size = 1000;
  const std::vector<double> w = {0.2, 0.3, 0.5};
  for (double lambda : {0.25, 4.0, 10.0}) {
    std::vector<double> wl = w;
    for (double& v : wl) v *= lambda;
    XModalConfig slow = one;
    slow.text_lr0 = one.text_lr0 / lambda;
    IFTX_ASSERT_OK_AND_ASSIGN(const auto a,
                              TrainTextStage(head, texts_, sets_, w, one));
    IFTX_ASSERT_OK_AND_ASSIGN(const auto b,
                              TrainTextStage(head, texts_, sets_, wl, slow));
    for (size_t i = 0; i < a.weights.size(); ++i) {
      EXPECT_NEAR(a.weights[i], b.weights[i], 1e-6);
    }
    for (size_t i = 0; i < a.bias.size(); ++i) {
      EXPECT_NEAR(a.bias[i], b.bias[i], 1e-6);
    }
  }
}

TEST_F(CrossModalTest, ReplicationIsNotHalvedLearningRate) {
  const std::vector<double> w = {0.2, 0.3, 0.5};
  const trainer::LinearHead head = trainer::LinearHead::Zeros(3, 16);
  XModalConfig twice = cfg_;
  twice.text_replication = 2;
  twice.text_lr0 = cfg_.text_lr0 / 2;
  IFTX_ASSERT_OK_AND_ASSIGN(const auto a,
                            TrainTextStage(head, texts_, sets_, w, cfg_));
  IFTX_ASSERT_OK_AND_ASSIGN(const auto b,
                            TrainTextStage(head, texts_, sets_, w, twice));
  EXPECT_FALSE(SameHead(a, b));
}

TEST_F(CrossModalTest, EmbeddingScaleMultipliesInputs) {
  const std::vector<double> w = {0.5, 0.25, 2.0};
  XModalConfig cfg = cfg_;
  cfg.weight_application = WeightApplication::kEmbeddingScale;
  IFTX_ASSERT_OK_AND_ASSIGN(const TextStageData d,
                            BuildTextStage(texts_, sets_, w, 3, cfg));
  ASSERT_EQ(d.inputs.count(), 30);
  for (int r = 0; r < 30; ++r) {
    const auto src = texts_.row(*texts_.Find(d.inputs.id(r)));
    for (int k = 0; k < 16; ++k) {
      EXPECT_EQ(d.inputs.row(r)[k], static_cast<float>(w[d.labels[r]] * src[k]));
    }
  }
}

TEST_F(CrossModalTest, MissingProponentsFail) {
  std::vector<ift::ProponentSet> partial = sets_;
  partial[1].texts.clear();
  const auto r = TrainTextStage(trainer::LinearHead::Zeros(3, 16), texts_,
                                partial, {}, cfg_);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(r.status().message(), HasSubstr("class(es) 1"));
}

TEST(ResultFileTest, LineFormatAndRoundTrip) {
  const std::string text =
      FormatResultLine("ours", "CUB", Track::kXModal, 0.8125) +
      FormatResultLine("menon", "CUB", Track::kZeroShot, 0.5);
  EXPECT_EQ(text, "ours\tCUB\txmodal\t0.8125\nmenon\tCUB\tzero_shot\t0.5\n");
  IFTX_ASSERT_OK_AND_ASSIGN(const auto rows, ParseResults(text));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].method, "menon");
  EXPECT_EQ(rows[1].track, Track::kZeroShot);
  EXPECT_FALSE(ParseResults("a\tb\tnot_a_track\t1\n").ok());
}

}  // namespace
}  // namespace iftx::xmodal
