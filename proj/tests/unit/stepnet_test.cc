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

#include "qsalloc/stepnet.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtest/gtest.h"
#include "support/fixtures.h"

namespace qsalloc {
namespace {

using ::qsalloc::testing::TexturedImage;

// A single 1x1 stride-16 conv reading the red channel.
constexpr char kPickRed[] =
    "QSNW1\nlayers 1\nconv 3 1 1 16\n2.0 0 0\n-1.0\n";

TEST(SoftplusTest, ReferenceValues) {
  EXPECT_NEAR(Softplus(0.0), 0.6931471805599453, 1e-15);
  EXPECT_NEAR(Softplus(-20.0), 2.0611536203143807e-09, 1e-22);
  EXPECT_NEAR(Softplus(20.0), 20.000000002061153, 1e-13);
  EXPECT_DOUBLE_EQ(Softplus(100.0), 100.0);
  EXPECT_GT(Softplus(-700.0), 0.0);
  EXPECT_TRUE(std::isfinite(Softplus(1e6)));
}

TEST(Conv2dTest, ReplicatePaddedBox) {
  Tensor in(1, 2, 2);
  in.data = {1, 2, 3, 4};
  ConvLayer box{1, 1, 3, 1, std::vector<float>(9, 1.0f), {0.5f}};
  const Tensor out = *Conv2d(in, box);
  ASSERT_EQ(out.width, 2);
  ASSERT_EQ(out.height, 2);
  // Padded neighbourhood of (0,0): rows {0,0,1} x cols {0,0,1}.
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), 18.5f);
  EXPECT_FLOAT_EQ(out.at(0, 0, 1), 1 + 2 + 2 + 1 + 2 + 2 + 3 + 4 + 4 + 0.5f);
  EXPECT_FLOAT_EQ(out.at(0, 1, 1), 1 + 2 + 2 + 3 + 4 + 4 + 3 + 4 + 4 + 0.5f);
}

TEST(Conv2dTest, IdentityAndZeroKernels) {
  Tensor in(1, 3, 5);
  for (size_t i = 0; i < in.data.size(); ++i) in.data[i] = float(i) - 4.5f;
  const ConvLayer identity{1, 1, 1, 1, {1.0f}, {0.0f}};
  EXPECT_EQ(Conv2d(in, identity)->data, in.data);
  const ConvLayer zero{1, 2, 3, 1, std::vector<float>(18, 0.0f), {0.25f, -3}};
  const Tensor z = *Conv2d(in, zero);
  for (int x = 0; x < 5; ++x) {
    EXPECT_EQ(z.at(0, 1, x), 0.25f);
    EXPECT_EQ(z.at(1, 2, x), -3.0f);
  }
}

TEST(Conv2dTest, CenterTapStrideTwo) {
  Tensor in(1, 4, 4);
  std::fill(in.data.begin(), in.data.end(), 1.0f);
  std::vector<float> w(9, 0.0f);
  w[4] = 1.0f;
  const Tensor out = *Conv2d(in, ConvLayer{1, 1, 3, 2, w, {0.0f}});
  ASSERT_EQ(out.width, 2);
  ASSERT_EQ(out.height, 2);
  for (float v : out.data) EXPECT_EQ(v, 1.0f);
}

TEST(ForwardTest, SingleConvIsLinearInInput) {
  ModelWeights model = *ParseWeights(
      "QSNW1\nlayers 1\nconv 3 1 3 16\n"
      "0.3 -0.2 0.1 0.5 -0.4 0.2 0.7 0.1 -0.3\n"
      "-0.6 0.2 0.4 0.1 0.9 -0.8 0.3 0.2 0.05\n"
      "0.11 -0.7 0.33 0.2 0.6 -0.1 0.25 -0.45 0.8\n0\n");
  const RasterImage img = TexturedImage(37, 21, 0, 9);
  RasterImage half = img;
  for (uint8_t& v : half.mutable_samples()) v /= 2;
  RasterImage doubled = half;
  for (uint8_t& v : doubled.mutable_samples()) v *= 2;
  const Tensor a = *ForwardPreActivation(half, model);
  const Tensor b = *ForwardPreActivation(doubled, model);
  for (size_t i = 0; i < a.data.size(); ++i) {
    EXPECT_NEAR(b.data[i], 2.0 * a.data[i], 1e-9 * std::abs(2.0 * a.data[i]));
  }
}

TEST(InferStepMapTest, ZeroHeadGivesUniformMap) {
  ModelWeights model = MakeFixtureWeights(4, 4);
  ConvLayer& head = model.layers.back().conv;
  std::fill(head.weights.begin(), head.weights.end(), 0.0f);
  head.bias[0] = -0.75f;
  const StepMap map = *InferStepMap(TexturedImage(64, 64, 1, 1), model);
  EXPECT_EQ(map.grid_w, 4);
  EXPECT_EQ(map.grid_h, 4);
  for (double v : map.values) EXPECT_EQ(v, Softplus(-0.75f));
}

TEST(Conv2dTest, StrideUsesCeilShape) {
  for (int w = 1; w <= 9; ++w) {
    Tensor in(2, 3, w);
    ConvLayer c{2, 4, 3, 2, std::vector<float>(4 * 2 * 9, 0.1f),
                std::vector<float>(4, 0.0f)};
    const Tensor out = *Conv2d(in, c);
    EXPECT_EQ(out.width, (w + 1) / 2);
    EXPECT_EQ(out.height, 2);
    EXPECT_EQ(out.channels, 4);
  }
}

TEST(Conv2dTest, ChannelMismatch) {
  Tensor in(2, 4, 4);
  ConvLayer c{3, 1, 1, 1, std::vector<float>(3, 1.0f), {0.0f}};
  EXPECT_FALSE(Conv2d(in, c).ok());
}

TEST(WeightsTest, ParsesHandWrittenModel) {
  const ModelWeights model = *ParseWeights(kPickRed);
  ASSERT_EQ(model.layers.size(), 1u);
  EXPECT_EQ(model.layers[0].conv.stride, 16);
  RasterImage img(40, 20, 3);
  img.at(0, 0, 0) = 255;
  img.at(16, 16, 0) = 51;
  const StepMap map = *InferStepMap(img, model);
  ASSERT_EQ(map.grid_w, 3);
  ASSERT_EQ(map.grid_h, 2);
  EXPECT_NEAR(map.at(0, 0), Softplus(1.0), 1e-6);
  EXPECT_NEAR(map.at(1, 1), Softplus(2.0 * 51.0f / 255.0f - 1.0), 1e-6);
  EXPECT_NEAR(map.at(2, 0), Softplus(-1.0), 1e-6);
}

TEST(WeightsTest, EncodeParseRoundTrip) {
  const ModelWeights model = MakeFixtureWeights(5, 4);
  const std::string text = EncodeWeights(model);
  const ModelWeights back = *ParseWeights(text);
  EXPECT_EQ(EncodeWeights(back), text);
  ASSERT_EQ(back.layers.size(), model.layers.size());
  for (size_t i = 0; i < model.layers.size(); ++i) {
    EXPECT_EQ(back.layers[i].conv.weights, model.layers[i].conv.weights);
    EXPECT_EQ(back.layers[i].conv2.weights, model.layers[i].conv2.weights);
  }
}

TEST(WeightsTest, Errors) {
  const auto message = [](std::string_view text) {
    return std::string(ParseWeights(text).status().message());
  };
  EXPECT_NE(message("NOPE\n").find("bad magic"), std::string::npos);
  EXPECT_NE(message("QSNW2\nlayers 0\n").find("unsupported version"),
            std::string::npos);
  EXPECT_NE(message("QSNW1\nlayers 1\nconv 3 1 1 16\n1 0 0\n")
                .find("parameter count mismatch"),
            std::string::npos);
  EXPECT_NE(message("QSNW1\nlayers 1\nconv 3 1 1 16\n1 nan 0\n0\n")
                .find("non-finite"),
            std::string::npos);
  EXPECT_NE(message("QSNW1\nlayers 1\nconv 3 1 1 16\n1 0 0\n0\n7\n")
                .find("parameter count mismatch"),
            std::string::npos);
  // Strides composing to 8 rather than 16.
  EXPECT_FALSE(ParseWeights("QSNW1\nlayers 1\nconv 3 1 1 8\n1 0 0\n0\n").ok());
  // Final layer must produce one channel.
  EXPECT_FALSE(
      ParseWeights("QSNW1\nlayers 1\nconv 3 2 1 16\n1 0 0 1 0 0\n0 0\n").ok());
}

TEST(WeightsTest, ResidualBlockMustBeSquare) {
  ModelWeights model = MakeFixtureWeights(1, 4);
  EXPECT_TRUE(ValidateModel(model).ok());
  for (Layer& l : model.layers) {
    if (l.kind == LayerKind::kResBlock) {
      l.conv2.stride = 2;
      break;
    }
  }
  EXPECT_FALSE(ValidateModel(model).ok());
}

TEST(FixtureWeightsTest, Deterministic) {
  EXPECT_EQ(EncodeWeights(MakeFixtureWeights(9, 4)),
            EncodeWeights(MakeFixtureWeights(9, 4)));
  EXPECT_NE(EncodeWeights(MakeFixtureWeights(9, 4)),
            EncodeWeights(MakeFixtureWeights(10, 4)));
}

TEST(InferStepMapTest, ShapeAndPositivity) {
  const ModelWeights model = MakeFixtureWeights(2, 4);
  for (int w : {1, 15, 16, 17, 33, 70}) {
    for (int h : {1, 16, 31}) {
      const StepMap map = *InferStepMap(TexturedImage(w, h, 0, 1), model);
      EXPECT_EQ(map.grid_w, (w + 15) / 16);
      EXPECT_EQ(map.grid_h, (h + 15) / 16);
      for (double v : map.values) EXPECT_GT(v, 0.0);
    }
  }
}

TEST(InferStepMapTest, Deterministic) {
  const ModelWeights model = MakeFixtureWeights(2, 8);
  const RasterImage img = TexturedImage(96, 80, 2, 4);
  EXPECT_EQ(*InferStepMap(img, model), *InferStepMap(img, model));
}

TEST(InferStepMapTest, RejectsGray) {
  EXPECT_FALSE(
      InferStepMap(RasterImage(16, 16, 1), MakeFixtureWeights(1, 4)).ok());
}

TEST(StepMapFormatTest, RoundTrip) {
  const StepMap map{3, 2, {0.5, 1.25, 3.0e-7, 2.0, 1.0 / 3.0, 1e9}};
  const std::string text = EncodeStepMap(map);
  EXPECT_EQ(text.rfind("QSMAP 1\n3 2\n", 0), 0u);
  const StepMap back = *DecodeStepMap(text);
  EXPECT_EQ(back, map);
  EXPECT_EQ(EncodeStepMap(back), text);
}

TEST(StepMapFormatTest, Rejects) {
  EXPECT_FALSE(DecodeStepMap("QSMAP 1\n2 1\n1.0\n").ok());
  EXPECT_FALSE(DecodeStepMap("QSMAP 1\n2 1\n1.0 0\n").ok());
  EXPECT_FALSE(DecodeStepMap("QSMAP 1\n2 1\n1.0 -2\n").ok());
  EXPECT_FALSE(DecodeStepMap("QSMAP 2\n1 1\n1.0\n").ok());
  EXPECT_FALSE(DecodeStepMap("QPMAP 1\n1 1\n1.0\n").ok());
  EXPECT_FALSE(DecodeStepMap("QSMAP 1\n1 1\n1.0 2.0\n").ok());
}

TEST(UniformStepMapTest, Dimensions) {
  const StepMap map = UniformStepMap(33, 16, 2.5);
  EXPECT_EQ(map.grid_w, 3);
  EXPECT_EQ(map.grid_h, 1);
  for (double v : map.values) EXPECT_EQ(v, 2.5);
}

}  // namespace
}  // namespace qsalloc
