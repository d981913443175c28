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

#include "fmt/format.h"
#include "iftx/util/rng.h"
#include "test_support.h"

namespace iftx::ift {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

embed::EmbeddingMatrix Rows(std::vector<std::string> ids, int dim,
                            std::vector<float> data) {
  return embed::EmbeddingMatrix::Create(dim, std::move(ids), std::move(data),
                                        false)
      .value();
}

// Two train images and one val image of class 0, one text.
struct Fixture {
  influence::InfluenceMatrix infl;
  ClipScoreTable clip;
  std::vector<int> train_classes = {0, 0};
  std::vector<int> val_classes = {0};
  std::vector<int> text_classes = {0};
};

Fixture Eq2Fixture() {
  Fixture f;
  f.infl.train_ids = {"t0", "t1"};
  f.infl.val_ids = {"v0"};
  f.infl.values = {0.2, 0.4};
  f.clip.image_ids = {"t0", "t1"};
  f.clip.text_ids = {"ours/0000/0000"};
  f.clip.values = {0.9, 0.7};
  return f;
}

TEST(ClipTableTest, SelfAndOrthogonal) {
  const auto images = Rows({"a", "b"}, 3, {1, 2, 2, 0, 0, 5});
  const auto texts = Rows({"x", "y"}, 3, {1, 2, 2, 3, -1.5f, 0});
  IFTX_ASSERT_OK_AND_ASSIGN(const ClipScoreTable t, ClipTable(images, texts));
  EXPECT_NEAR(t.at(0, 0), 1.0, 1e-12);
  EXPECT_EQ(t.at(0, 1), 0.0);
  EXPECT_EQ(t.at(1, 1), 0.0);
}

TEST(ClipTableTest, MatchesCosineLoop) {
  util::Rng rng(1);
  std::vector<float> a(3 * 4), b(2 * 4);
  for (float& v : a) v = static_cast<float>(rng.Normal());
  for (float& v : b) v = static_cast<float>(rng.Normal());
  const auto images = Rows({"i0", "i1", "i2"}, 4, a);
  const auto texts = Rows({"t0", "t1"}, 4, b);
  IFTX_ASSERT_OK_AND_ASSIGN(const ClipScoreTable t, ClipTable(images, texts));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      long double dot = 0, na = 0, nb = 0;
      for (int k = 0; k < 4; ++k) {
        dot += static_cast<long double>(a[i * 4 + k]) * b[j * 4 + k];
        na += static_cast<long double>(a[i * 4 + k]) * a[i * 4 + k];
        nb += static_cast<long double>(b[j * 4 + k]) * b[j * 4 + k];
      }
      const double ref = static_cast<double>(dot / std::sqrt(na * nb));
      EXPECT_NEAR(t.at(i, j), ref, 1e-12);
      EXPECT_LE(std::abs(t.at(i, j)), 1.0);
    }
  }
}

TEST(ClipTableTest, ZeroRowFails) {
  const auto images = Rows({"a"}, 2, {0, 0});
  const auto texts = Rows({"x"}, 2, {1, 0});
  EXPECT_THAT(ClipTable(images, texts).status().message(), HasSubstr("zero"));
}

TEST(IftScoresTest, HandAveragedFixture) {
  const Fixture f = Eq2Fixture();
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto recs, IftScores(f.infl, f.clip, f.train_classes,
                                 f.val_classes, f.text_classes, {}));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_NEAR(recs[0].influence_term, 0.3, 1e-15);
  EXPECT_NEAR(recs[0].clip_term, 0.8, 1e-15);
  EXPECT_NEAR(recs[0].total, 1.1, 1e-15);
  EXPECT_NEAR(recs[0].total, recs[0].influence_term + recs[0].clip_term, 1e-9);
}

TEST(IftScoresTest, AblationModesZeroOneTerm) {
  const Fixture f = Eq2Fixture();
  ScoringMode clip_only;
  clip_only.mode = ScoreMode::kClipOnly;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto c, IftScores(f.infl, f.clip, f.train_classes, f.val_classes,
                              f.text_classes, clip_only));
  EXPECT_EQ(c[0].influence_term, 0.0);
  EXPECT_NEAR(c[0].total, 0.8, 1e-15);
  ScoringMode if_only;
  if_only.mode = ScoreMode::kInfluenceOnly;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto i, IftScores(f.infl, f.clip, f.train_classes, f.val_classes,
                              f.text_classes, if_only));
  EXPECT_EQ(i[0].clip_term, 0.0);
  EXPECT_NEAR(i[0].total, 0.3, 1e-15);
}

TEST(IftScoresTest, ProponentScopeDropsNegativeImages) {
  Fixture f = Eq2Fixture();
  f.infl.values = {0.2, -0.4};
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto prop, IftScores(f.infl, f.clip, f.train_classes,
                                 f.val_classes, f.text_classes, {}));
  EXPECT_DOUBLE_EQ(prop[0].influence_term, 0.2);
  EXPECT_DOUBLE_EQ(prop[0].clip_term, 0.9);
  ScoringMode all;
  all.image_scope = ImageScope::kClassTrainAll;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto every, IftScores(f.infl, f.clip, f.train_classes,
                                  f.val_classes, f.text_classes, all));
  EXPECT_NEAR(every[0].influence_term, -0.1, 1e-15);
  EXPECT_NEAR(every[0].clip_term, 0.8, 1e-15);
}

TEST(IftScoresTest, ClassWithoutQualifyingImagesIsNamed) {
  Fixture f = Eq2Fixture();
  f.infl.values = {-0.2, -0.4};
  const auto r = IftScores(f.infl, f.clip, f.train_classes, f.val_classes,
                           f.text_classes, {});
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(r.status().message(), HasSubstr("class 0"));
}

// Random multi-class instance shared by the property tests.
struct RandomInstance {
  influence::InfluenceMatrix infl;
  ClipScoreTable clip;
  std::vector<int> train_classes, val_classes, text_classes;
};

RandomInstance MakeRandom(uint64_t seed) {
  util::Rng rng(seed);
  RandomInstance r;
  for (int i = 0; i < 12; ++i) {
    r.infl.train_ids.push_back("t" + std::to_string(i));
    r.train_classes.push_back(i % 3);
  }
  for (int j = 0; j < 6; ++j) {
    r.infl.val_ids.push_back("v" + std::to_string(j));
    r.val_classes.push_back(j % 3);
  }
  for (int k = 0; k < 12 * 6; ++k) r.infl.values.push_back(rng.Normal());
  r.clip.image_ids = r.infl.train_ids;
  for (int t = 0; t < 15; ++t) {
    r.clip.text_ids.push_back(fmt::format("m/{:04d}/{:04d}", t % 3, t / 3));
    r.text_classes.push_back(t % 3);
  }
  for (int k = 0; k < 12 * 15; ++k) {
    r.clip.values.push_back(2 * rng.UniformDouble() - 1);
  }
  return r;
}

TEST(IftScoresTest, WithinClassRankingFollowsClipTerm) {
  const RandomInstance r = MakeRandom(2);
  for (ImageScope scope :
       {ImageScope::kClassTrainAll, ImageScope::kClassProponents}) {
    ScoringMode mode;
    mode.image_scope = scope;
    IFTX_ASSERT_OK_AND_ASSIGN(
        const auto recs, IftScores(r.infl, r.clip, r.train_classes,
                                   r.val_classes, r.text_classes, mode));
    for (size_t a = 0; a < recs.size(); ++a) {
      for (size_t b = 0; b < recs.size(); ++b) {
        if (recs[a].class_index != recs[b].class_index) continue;
        EXPECT_EQ(recs[a].influence_term, recs[b].influence_term);
        EXPECT_EQ(recs[a].total > recs[b].total,
                  recs[a].clip_term > recs[b].clip_term);
      }
    }
  }
}

TEST(SelectProponentTextsTest, ShortClassKeepsAllSorted) {
  std::vector<IftRecord> recs = {{"m/0000/0000", 0, 0, 0.1, 0.1},
                                 {"m/0000/0001", 0, 0, 0.5, 0.5},
                                 {"m/0000/0002", 0, 0, 0.3, 0.3}};
  const auto sets = SelectProponentTexts(recs, 10);
  ASSERT_EQ(sets.size(), 1u);
  std::vector<std::string> ids;
  for (const auto& t : sets[0].texts) ids.push_back(t.text_id);
  EXPECT_THAT(ids, ElementsAre("m/0000/0001", "m/0000/0002", "m/0000/0000"));
  EXPECT_NEAR(sets[0].class_weight_raw, 0.3, 1e-15);
}

TEST(SelectProponentTextsTest, EqualTotalsGoByTextId) {
  std::vector<IftRecord> recs = {{"b", 0, 0, 0, 1.0},
                                 {"c", 0, 0, 0, 1.0},
                                 {"a", 0, 0, 0, 1.0}};
  const auto sets = SelectProponentTexts(recs, 2);
  ASSERT_EQ(sets[0].texts.size(), 2u);
  EXPECT_EQ(sets[0].texts[0].text_id, "a");
  EXPECT_EQ(sets[0].texts[1].text_id, "b");
}

TEST(SelectProponentTextsTest, MatchesFullSortOracle) {
  util::Rng rng(3);
  std::vector<IftRecord> recs;
  for (int i = 0; i < 15; ++i) {
    recs.push_back({"x" + std::to_string(100 - i), 0, 0, 0,
                    std::round(rng.Normal() * 2) / 2});
  }
  const auto sets = SelectProponentTexts(recs, 10);
  std::vector<std::pair<double, std::string>> oracle;
  for (const auto& r : recs) oracle.push_back({-r.total, r.text_id});
  std::sort(oracle.begin(), oracle.end());
  ASSERT_EQ(sets[0].texts.size(), 10u);
  for (size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(sets[0].texts[i].text_id, oracle[i].second);
  }
}

TEST(SelectProponentTextsTest, InfluenceOnlyTiesResolveByTextId) {
  const RandomInstance r = MakeRandom(4);
  ScoringMode mode;
  mode.mode = ScoreMode::kInfluenceOnly;
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto recs, IftScores(r.infl, r.clip, r.train_classes,
                                 r.val_classes, r.text_classes, mode));
  const auto sets = SelectProponentTexts(recs, 3);
  for (const ProponentSet& s : sets) {
    ASSERT_EQ(s.texts.size(), 3u);
    EXPECT_EQ(s.texts[0].text_id, fmt::format("m/{:04d}/0000", s.class_index));
    EXPECT_EQ(s.texts[2].text_id, fmt::format("m/{:04d}/0002", s.class_index));
  }
}

std::vector<ProponentSet> SetsWithRaw(std::vector<double> raw) {
  std::vector<ProponentSet> sets;
  for (size_t c = 0; c < raw.size(); ++c) {
    ProponentSet s;
    s.class_index = static_cast<int>(c);
    s.class_weight_raw = raw[c];
    sets.push_back(s);
  }
  return sets;
}

TEST(ClassWeightsTest, DirectNormalization) {
  IFTX_ASSERT_OK_AND_ASSIGN(const ClassWeights w,
                            DeriveClassWeights(SetsWithRaw({2, 3, 5}), 3));
  EXPECT_NEAR(w.weights[0], 0.2, 1e-15);
  EXPECT_NEAR(w.weights[1], 0.3, 1e-15);
  EXPECT_NEAR(w.weights[2], 0.5, 1e-15);
  EXPECT_FALSE(w.degenerate);
}

TEST(ClassWeightsTest, ShiftKeepsOrderAndPositivity) {
  IFTX_ASSERT_OK_AND_ASSIGN(const ClassWeights w,
                            DeriveClassWeights(SetsWithRaw({-1, 0, 1}), 3));
  const double e = kWeightShiftEpsilon;
  const double sum = e + (1 + e) + (2 + e);
  EXPECT_NEAR(w.weights[0], e / sum, 1e-15);
  EXPECT_NEAR(w.weights[1], (1 + e) / sum, 1e-15);
  EXPECT_NEAR(w.weights[2], (2 + e) / sum, 1e-15);
  EXPECT_GT(w.weights[0], 0.0);
  EXPECT_LT(w.weights[0], w.weights[1]);
  EXPECT_LT(w.weights[1], w.weights[2]);
}

TEST(ClassWeightsTest, PropertySumOrderAndScale) {
  util::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.UniformIndex(8));
    std::vector<double> raw(n);
    for (double& v : raw) v = rng.Normal();
    IFTX_ASSERT_OK_AND_ASSIGN(const ClassWeights w,
                              DeriveClassWeights(SetsWithRaw(raw), n));
    double sum = 0;
    for (int c = 0; c < n; ++c) {
      sum += w.weights[c];
      EXPECT_GE(w.weights[c], 0.0);
      for (int d = 0; d < n; ++d) {
        if (raw[c] < raw[d]) {
          EXPECT_LT(w.weights[c], w.weights[d]);
        }
      }
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    // Scale invariance on the non-negative case.
    std::vector<double> pos(n);
    for (double& v : pos) v = 0.1 + rng.UniformDouble();
    std::vector<double> scaled = pos;
    const double lambda = 0.01 + 10 * rng.UniformDouble();
    for (double& v : scaled) v *= lambda;
    IFTX_ASSERT_OK_AND_ASSIGN(const ClassWeights a,
                              DeriveClassWeights(SetsWithRaw(pos), n));
    IFTX_ASSERT_OK_AND_ASSIGN(const ClassWeights b,
                              DeriveClassWeights(SetsWithRaw(scaled), n));
    for (int c = 0; c < n; ++c) EXPECT_NEAR(a.weights[c], b.weights[c], 1e-9);
  }
}

TEST(ClassWeightsTest, MissingClassFails) {
  auto sets = SetsWithRaw({1, 2});
  const auto r = DeriveClassWeights(sets, 3);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(r.status().message(), HasSubstr("2"));
}

TEST(IftReportTest, HeaderAndSelectedFlag) {
  corpus::DatasetManifest m;
  m.classes = {{0, "Blue Jay", std::nullopt, std::nullopt}};
  std::vector<IftRecord> recs = {{"a", 0, 0.5, 0.25, 0.75},
                                 {"b", 0, 0.5, 0.0, 0.5}};
  const auto sets = SelectProponentTexts(recs, 1);
  EXPECT_EQ(FormatIftReport(recs, sets, m),
            "class\ttext_id\tinfluence_term\tclip_term\ttotal\tselected\n"
            "Blue Jay\ta\t0.5\t0.25\t0.75\t1\n"
            "Blue Jay\tb\t0.5\t0\t0.5\t0\n");
}

TEST(IftReportTest, ParseRoundTrip) {
  corpus::DatasetManifest m;
  m.classes = {{0, "Blue Jay", std::nullopt, std::nullopt},
               {1, "bus", std::nullopt, std::nullopt}};
  std::vector<IftRecord> recs = {{"a", 0, 0.1, 1.0 / 3.0, 0.1 + 1.0 / 3.0},
                                 {"b", 1, -2e-7, 0.0, -2e-7}};
  IFTX_ASSERT_OK_AND_ASSIGN(
      const auto back,
      ParseIftReport("# stamp\n" + FormatIftReport(recs, {}, m), m));
  ASSERT_EQ(back.size(), 2u);
  for (size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].text_id, recs[i].text_id);
    EXPECT_EQ(back[i].class_index, recs[i].class_index);
    EXPECT_EQ(back[i].influence_term, recs[i].influence_term);
    EXPECT_EQ(back[i].clip_term, recs[i].clip_term);
    EXPECT_EQ(back[i].total, recs[i].total);
  }
  EXPECT_FALSE(ParseIftReport("Blue Jay\ta\t1\t1\t2\t0\n", m).ok());
  EXPECT_FALSE(ParseIftReport(
      "class\ttext_id\tinfluence_term\tclip_term\ttotal\tselected\n"
      "Cat\ta\t1\t1\t2\t0\n", m).ok());
}

}  // namespace
}  // namespace iftx::ift
