// Copyright 2026 The qsalloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qsalloc/image_io.h"

#include <random>
#include <string>

#include "gtest/gtest.h"
#include "qsalloc/file_util.h"
#include "support/fixtures.h"

namespace qsalloc {
namespace {

using ::qsalloc::testing::TempDir;
using ::qsalloc::testing::TexturedImage;

TEST(PpmTest, ByteRoundTrip) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int i = 0; i < 30; ++i) {
    const RasterImage img = TexturedImage(dim(rng), dim(rng), i, i);
    const std::string bytes = EncodePpm(img);
    const RasterImage back = *DecodePpm(bytes);
    EXPECT_EQ(back, img);
    EXPECT_EQ(EncodePpm(back), bytes);
  }
}

TEST(PpmTest, CommentsAndWhitespace) {
  std::string bytes = "P6 # comment\n2\t1\n# another\n255\n";
  bytes += std::string("\x01\x02\x03\x04\x05\x06", 6);
  const RasterImage img = *DecodePpm(bytes);
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.at(1, 0, 2), 6);
}

TEST(PpmTest, Errors) {
  EXPECT_EQ(DecodePpm("P3\n1 1\n255\n0 0 0\n").status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_NE(DecodePpm("P3\n1 1\n255\n").status().message().find(
                "unsupported magic"),
            std::string::npos);
  EXPECT_NE(DecodePpm("P6\n1 1\n65535\n").status().message().find(
                "unsupported maxval"),
            std::string::npos);
  EXPECT_EQ(DecodePpm("P6\n2 2\n255\nabc").status().code(),
            absl::StatusCode::kDataLoss);
  EXPECT_FALSE(DecodePpm("P6\n0 2\n255\n").ok());
  EXPECT_EQ(LoadPpm("/nonexistent/x.ppm").status().code(),
            absl::StatusCode::kNotFound);
}

TEST(PpmTest, SaveLoad) {
  TempDir dir;
  const RasterImage img = TexturedImage(13, 7, 1, 2);
  ASSERT_TRUE(SavePpm(img, dir.file("a.ppm")).ok());
  EXPECT_EQ(*LoadPpm(dir.file("a.ppm")), img);
}

TEST(YuvTest, Bt601Anchors) {
  RasterImage img(2, 2, 3);
  // Left column black, right column white.
  for (int c = 0; c < 3; ++c) {
    img.at(1, 0, c) = 255;
    img.at(1, 1, c) = 255;
  }
  const YuvFrame f = *RgbToYuv420(img);
  EXPECT_EQ(f.luma.at(0, 0), 16);
  EXPECT_EQ(f.luma.at(1, 0), 235);
  EXPECT_EQ(f.chroma_u.width, 1);
  EXPECT_EQ(f.chroma_u.at(0, 0), 128);
  EXPECT_EQ(f.chroma_v.at(0, 0), 128);
  const RasterImage gray = testing::ConstantImage(3, 3, 3, 128);
  const YuvFrame g = *RgbToYuv420(gray);
  EXPECT_EQ(g.luma.at(2, 2), 126);
  EXPECT_EQ(g.chroma_u.width, 2);
  EXPECT_EQ(g.chroma_u.height, 2);
}

TEST(YuvTest, PrimaryChroma) {
  RasterImage red(2, 2, 3);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) red.at(x, y, 0) = 255;
  }
  const YuvFrame f = *RgbToYuv420(red);
  // 16 + 65.481 = 81.481; 128 - 37.797 = 90.203; 128 + 112 = 240.
  EXPECT_EQ(f.luma.at(0, 0), 81);
  EXPECT_EQ(f.chroma_u.at(0, 0), 90);
  EXPECT_EQ(f.chroma_v.at(0, 0), 240);
}

TEST(YuvTest, RoundTripIsClose) {
  const RasterImage img = TexturedImage(32, 32, 2, 1);
  RasterImage smooth = img;
  // Smooth content survives 4:2:0 with small error.
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int c = 0; c < 3; ++c) smooth.at(x, y, c) = uint8_t(60 + x + 2 * y);
    }
  }
  const RasterImage back = Yuv420ToRgb(*RgbToYuv420(smooth));
  for (size_t i = 0; i < back.samples().size(); ++i) {
    EXPECT_NEAR(back.samples()[i], smooth.samples()[i], 2);
  }
  EXPECT_EQ(EncodeYuv420(*RgbToYuv420(img)).size(), 32u * 32 + 2 * 16 * 16);
}

TEST(YuvTest, RejectsGray) {
  EXPECT_FALSE(RgbToYuv420(RasterImage(4, 4, 1)).ok());
}

TEST(BlockPartitionTest, CoversFrame) {
  const BlockGrid g = *BlockPartition(130, 64, 64);
  EXPECT_EQ(g.blocks_x, 3);
  EXPECT_EQ(g.blocks_y, 1);
  EXPECT_EQ(g.block(2, 0).width, 2);
  EXPECT_EQ(g.block(2, 0).pixel_count(), 128);
  int64_t total = 0;
  for (const BlockExtent& b : g.blocks) total += b.pixel_count();
  EXPECT_EQ(total, 130 * 64);
  EXPECT_FALSE(BlockPartition(0, 4, 4).ok());
}

TEST(FromSamplesTest, Validation) {
  EXPECT_FALSE(RasterImage::FromSamples(2, 2, 3, std::vector<uint8_t>(11)).ok());
  EXPECT_FALSE(RasterImage::FromSamples(2, 2, 2, std::vector<uint8_t>(8)).ok());
  EXPECT_TRUE(RasterImage::FromSamples(2, 2, 1, std::vector<uint8_t>(4)).ok());
}

TEST(FileUtilTest, FormatReal) {
  EXPECT_EQ(FormatReal(1.0), "1.0");
  EXPECT_EQ(FormatReal(0.1), "0.1");
  EXPECT_EQ(FormatReal(-4.0), "-4.0");
  EXPECT_EQ(FormatReal(1e300), "1e+300");
  EXPECT_EQ(FormatReal(1.0 / 3.0), "0.3333333333333333");
}

TEST(FileUtilTest, AtomicWriteFailsCleanly) {
  TempDir dir;
  EXPECT_TRUE(WriteFileAtomic(dir.file("x"), "abc").ok());
  EXPECT_EQ(*ReadFile(dir.file("x")), "abc");
  EXPECT_FALSE(WriteFileAtomic(dir.file("missing/x"), "abc").ok());
  // A batch with one bad path leaves no partial outputs behind.
  EXPECT_FALSE(WriteFilesAtomic({{dir.file("a"), "1"},
                                 {dir.file("missing/b"), "2"}})
                   .ok());
  EXPECT_FALSE(std::filesystem::exists(dir.file("a")));
}

}  // namespace
}  // namespace qsalloc
