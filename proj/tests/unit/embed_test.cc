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
#include <limits>
#include <vector>

#include "iftx/embed/embedding_matrix.h"
#include "iftx/embed/kernels.h"
#include "iftx/embed/xemb_io.h"
#include "iftx/util/rng.h"
#include "iftx/util/text_io.h"
#include "test_support.h"

namespace iftx::embed {
namespace {

using ::testing::HasSubstr;

EmbeddingMatrix RandomMatrix(int count, int dim, uint64_t seed) {
  util::Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<float> data;
  for (int i = 0; i < count; ++i) {
    ids.push_back("row/" + std::to_string(i));
    for (int k = 0; k < dim; ++k) {
      data.push_back(static_cast<float>(rng.Normal()));
    }
  }
  return EmbeddingMatrix::Create(dim, std::move(ids), std::move(data), false)
      .value();
}

TEST(XembTest, RoundTripIsBitExact) {
  const std::string path = testing::ScratchDir() + "/m.xemb";
  const EmbeddingMatrix m = RandomMatrix(7, 5, 1);
  IFTX_ASSERT_OK(WriteEmbeddings(m, path));
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix back, ReadEmbeddings(path));
  EXPECT_TRUE(BitwiseEqual(m, back));
  EXPECT_EQ(back.ids(), m.ids());
  // Re-encoding is byte-identical.
  IFTX_ASSERT_OK_AND_ASSIGN(const std::string bytes, util::ReadFile(path));
  EXPECT_EQ(EncodeEmbeddings(back), bytes);
}

TEST(XembTest, RoundTripProperty) {
  // Random shapes, special float values and awkward ids.
  util::Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int count = static_cast<int>(rng.UniformIndex(6));
    const int dim = static_cast<int>(rng.UniformIndex(9));
    std::vector<std::string> ids;
    std::vector<float> data;
    for (int i = 0; i < count; ++i) {
      ids.push_back("id\\" + std::to_string(trial) + "\n" + std::to_string(i));
      for (int k = 0; k < dim; ++k) {
        const uint64_t pick = rng.UniformIndex(4);
        data.push_back(pick == 0   ? -0.0f
                       : pick == 1 ? std::numeric_limits<float>::denorm_min()
                                   : static_cast<float>(rng.Normal() * 1e3));
      }
    }
    IFTX_ASSERT_OK_AND_ASSIGN(
        const EmbeddingMatrix m,
        EmbeddingMatrix::Create(dim, ids, data, /*normalized=*/false));
    IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix back,
                              DecodeEmbeddings(EncodeEmbeddings(m)));
    EXPECT_TRUE(BitwiseEqual(m, back)) << "trial " << trial;
  }
}

TEST(XembTest, EmptyMatrix) {
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix m,
                            EmbeddingMatrix::Create(512, {}, {}, false));
  const std::string bytes = EncodeEmbeddings(m);
  EXPECT_EQ(bytes, "XEMB1\ndim=512 count=0 dtype=f32le normalized=0\n\n");
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix back,
                            DecodeEmbeddings(bytes));
  EXPECT_EQ(back.count(), 0);
  EXPECT_EQ(back.dim(), 512);
}

TEST(XembTest, PayloadSizeArithmetic) {
  const EmbeddingMatrix m = RandomMatrix(3, 512, 2);
  const std::string bytes = EncodeEmbeddings(m);
  const std::string prefix =
      "XEMB1\ndim=512 count=3 dtype=f32le normalized=0\nrow/0\nrow/1\nrow/2\n\n";
  ASSERT_TRUE(bytes.starts_with(prefix));
  EXPECT_EQ(bytes.size() - prefix.size(), 3u * 512u * 4u);
}

TEST(XembTest, LittleEndianLayout) {
  // 1.0f is 0x3f800000; the payload must store it low byte first, as an
  // external writer (e.g. numpy '<f4') would.
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix m,
                            EmbeddingMatrix::Create(1, {"a"}, {1.0f}, true));
  const std::string bytes = EncodeEmbeddings(m);
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string("\x00\x00\x80\x3f", 4));

  const std::string external =
      std::string("XEMB1\ndim=2 count=1 dtype=f32le normalized=0\nimg_1\n\n") +
      std::string("\x00\x00\x40\x40\x00\x00\x80\x40", 8);  // (3, 4)
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix parsed,
                            DecodeEmbeddings(external));
  EXPECT_EQ(parsed.row(0)[0], 3.0f);
  EXPECT_EQ(parsed.row(0)[1], 4.0f);
  EXPECT_EQ(parsed.id(0), "img_1");
}

TEST(XembTest, BadMagic) {
  std::string bytes = EncodeEmbeddings(RandomMatrix(2, 3, 3));
  bytes[3] = 'F';
  const auto m = DecodeEmbeddings(bytes);
  ASSERT_FALSE(m.ok());
  EXPECT_THAT(m.status().message(), HasSubstr("bad magic"));
}

TEST(XembTest, TruncatedPayload) {
  std::string bytes = EncodeEmbeddings(RandomMatrix(2, 3, 4));
  bytes.resize(bytes.size() - 4);
  const auto m = DecodeEmbeddings(bytes);
  ASSERT_FALSE(m.ok());
  EXPECT_THAT(m.status().message(), HasSubstr("truncated payload"));
}

TEST(XembTest, NanInPayload) {
  std::string bytes = EncodeEmbeddings(RandomMatrix(2, 3, 5));
  const uint32_t nan_bits = 0x7fc00000;
  for (int b = 0; b < 4; ++b) {
    bytes[bytes.size() - 4 + b] = static_cast<char>((nan_bits >> (8 * b)) & 0xff);
  }
  const auto m = DecodeEmbeddings(bytes);
  ASSERT_FALSE(m.ok());
  EXPECT_THAT(m.status().message(), HasSubstr("NaN in payload"));
}

TEST(XembTest, ErrorsAreDistinct) {
  const std::string good = EncodeEmbeddings(RandomMatrix(1, 2, 6));
  EXPECT_THAT(DecodeEmbeddings(good + "xx").status().message(),
              HasSubstr("trailing bytes"));
  EXPECT_THAT(
      DecodeEmbeddings("XEMB1\ndim=2 count=1 dtype=f16le normalized=0\na\n\n")
          .status()
          .message(),
      HasSubstr("unsupported dtype"));
  EXPECT_THAT(DecodeEmbeddings("XEMB1\ndim=2 count=1").status().message(),
              HasSubstr("truncated header"));
}

TEST(XembTest, NormalizedFlagIsChecked) {
  const std::string bytes =
      std::string("XEMB1\ndim=2 count=1 dtype=f32le normalized=1\nx\n\n") +
      std::string("\x00\x00\x40\x40\x00\x00\x80\x40", 8);
  const auto m = DecodeEmbeddings(bytes);
  ASSERT_FALSE(m.ok());
  EXPECT_THAT(m.status().message(), HasSubstr("flagged normalized"));
}

TEST(KernelsTest, NormalizeThreeFourFive) {
  IFTX_ASSERT_OK_AND_ASSIGN(
      const EmbeddingMatrix m,
      EmbeddingMatrix::Create(2, {"a"}, {3.0f, 4.0f}, false));
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix n, L2Normalize(m));
  EXPECT_TRUE(n.normalized());
  EXPECT_FLOAT_EQ(n.row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(n.row(0)[1], 0.8f);
}

TEST(KernelsTest, NormalizeIsIdempotent) {
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix once,
                            L2Normalize(RandomMatrix(10, 16, 7)));
  // Strip the flag so the second pass really recomputes the norms.
  IFTX_ASSERT_OK_AND_ASSIGN(
      const EmbeddingMatrix unflagged,
      EmbeddingMatrix::Create(once.dim(), once.ids(),
                              {once.data().begin(), once.data().end()}, false));
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix twice,
                            L2Normalize(unflagged));
  for (size_t i = 0; i < once.data().size(); ++i) {
    EXPECT_NEAR(once.data()[i], twice.data()[i], 1e-6);
  }
  for (int r = 0; r < twice.count(); ++r) {
    EXPECT_NEAR(std::sqrt(SquaredNorm(twice.row(r))), 1.0, 1e-6);
  }
}

TEST(KernelsTest, NormalizeZeroRowNamesId) {
  IFTX_ASSERT_OK_AND_ASSIGN(
      const EmbeddingMatrix m,
      EmbeddingMatrix::Create(2, {"ok", "dead"}, {1, 0, 0, 0}, false));
  const auto n = L2Normalize(m);
  ASSERT_FALSE(n.ok());
  EXPECT_THAT(n.status().message(), HasSubstr("dead"));
}

TEST(KernelsTest, CosineExamples) {
  const std::vector<float> a = {1, 2, 2}, b = {2, 1, 2};
  EXPECT_DOUBLE_EQ(Cosine(a, a).value(), 1.0);
  const std::vector<float> x = {1, 0}, y = {0, 1};
  EXPECT_DOUBLE_EQ(Cosine(x, y).value(), 0.0);
  // (1*2 + 2*1 + 2*2) / (3 * 3)
  EXPECT_NEAR(Cosine(a, b).value(), 8.0 / 9.0, 1e-15);
  const std::vector<float> zero = {0, 0, 0};
  EXPECT_FALSE(Cosine(a, zero).ok());
}

TEST(KernelsTest, CosineSymmetricAndScaleInvariant) {
  util::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 1 + static_cast<int>(rng.UniformIndex(64));
    std::vector<float> u(dim), v(dim), su(dim);
    const float scale = static_cast<float>(0.01 + 100.0 * rng.UniformDouble());
    for (int k = 0; k < dim; ++k) {
      u[k] = static_cast<float>(rng.Normal());
      v[k] = static_cast<float>(rng.Normal());
      su[k] = u[k] * scale;
    }
    const double uv = Cosine(u, v).value();
    EXPECT_NEAR(uv, Cosine(v, u).value(), 1e-7);
    EXPECT_NEAR(uv, Cosine(su, v).value(), 1e-6);
    EXPECT_LE(std::abs(uv), 1.0);
  }
}

TEST(EmbeddingMatrixTest, RejectsBadShapesAndValues) {
  EXPECT_FALSE(EmbeddingMatrix::Create(2, {"a"}, {1.0f}, false).ok());
  EXPECT_FALSE(EmbeddingMatrix::Create(
                   1, {"a"}, {std::numeric_limits<float>::infinity()}, false)
                   .ok());
  EXPECT_FALSE(EmbeddingMatrix::Create(1, {"a", "a"}, {1.0f, 2.0f}, false).ok());
}

TEST(EmbeddingMatrixTest, SelectByIds) {
  const EmbeddingMatrix m = RandomMatrix(4, 3, 8);
  const std::vector<std::string> want = {"row/2", "row/0"};
  IFTX_ASSERT_OK_AND_ASSIGN(const EmbeddingMatrix sub, m.SelectByIds(want));
  EXPECT_EQ(sub.ids(), want);
  EXPECT_EQ(sub.row(0)[1], m.row(2)[1]);
  const std::vector<std::string> missing = {"row/9"};
  const auto bad = m.SelectByIds(missing);
  ASSERT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(), HasSubstr("row/9"));
}

}  // namespace
}  // namespace iftx::embed
