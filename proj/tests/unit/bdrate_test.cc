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

#include "qsalloc/bdrate.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"

namespace qsalloc {
namespace {

RdCurve Curve(std::vector<RatePoint> pts) {
  RdCurve c;
  c.points = std::move(pts);
  return c;
}

const RdCurve kAnchor =
    Curve({{0.25, 30.1}, {0.5, 33.4}, {1.0, 36.2}, {2.0, 38.9}});
const RdCurve kTest =
    Curve({{0.22, 30.0}, {0.46, 33.5}, {0.9, 36.0}, {1.85, 39.2}});

RdCurve ScaleRates(const RdCurve& c, double k) {
  RdCurve out = c;
  for (RatePoint& p : out.points) p.rate *= k;
  return out;
}

RdCurve ShiftQuality(const RdCurve& c, double d) {
  RdCurve out = c;
  for (RatePoint& p : out.points) p.quality += d;
  return out;
}

TEST(BdRateTest, IdenticalCurves) {
  const BdResult r = *BjontegaardDelta(kAnchor, kAnchor);
  EXPECT_NEAR(r.bd_rate_percent, 0.0, 1e-9);
  EXPECT_NEAR(r.bd_quality, 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.overlap_lo, 30.1);
  EXPECT_DOUBLE_EQ(r.overlap_hi, 38.9);
}

TEST(BdRateTest, RateScaling) {
  EXPECT_NEAR(*BdRate(kAnchor, ScaleRates(kAnchor, 0.9)), -10.0, 1e-9);
  EXPECT_NEAR(*BdRate(kAnchor, ScaleRates(kAnchor, 1.25)), 25.0, 1e-9);
  EXPECT_NEAR(*BdRate(kAnchor, ScaleRates(kAnchor, 0.9),
                      BdInterpolation::kPiecewiseCubic),
              -10.0, 1e-9);
}

TEST(BdRateTest, QualityShift) {
  EXPECT_NEAR(*BdQuality(kAnchor, ShiftQuality(kAnchor, 1.0)), 1.0, 1e-9);
  EXPECT_NEAR(*BdQuality(kAnchor, ShiftQuality(kAnchor, -0.5),
                         BdInterpolation::kPiecewiseCubic),
              -0.5, 1e-9);
}

TEST(BdRateTest, MatchesReferenceImplementation) {
  const BdResult cubic = *BjontegaardDelta(kAnchor, kTest);
  EXPECT_NEAR(cubic.bd_rate_percent, -9.074093922400461, 1e-9);
  EXPECT_NEAR(cubic.bd_quality, 0.39422428774048335, 1e-9);
  const BdResult pchip =
      *BjontegaardDelta(kAnchor, kTest, BdInterpolation::kPiecewiseCubic);
  EXPECT_NEAR(pchip.bd_rate_percent, -8.96249606272278, 1e-9);
  EXPECT_NEAR(pchip.bd_quality, 0.3952297843965347, 1e-9);
}

TEST(BdRateTest, AntisymmetryAndScaleEquivariance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 50; ++i) {
    RdCurve t = kAnchor;
    for (RatePoint& p : t.points) {
      p.rate *= std::exp(0.1 * jitter(rng));
      p.quality += jitter(rng);
    }
    for (BdInterpolation mode :
         {BdInterpolation::kCubic, BdInterpolation::kPiecewiseCubic}) {
      const double ab = *BdRate(kAnchor, t, mode);
      const double ba = *BdRate(t, kAnchor, mode);
      EXPECT_NEAR((1 + ab / 100) * (1 + ba / 100), 1.0, 1e-9);
      const double k = scale(rng);
      EXPECT_NEAR(*BdRate(ScaleRates(kAnchor, k), ScaleRates(t, k), mode), ab,
                  1e-8);
      EXPECT_NEAR(*BdQuality(kAnchor, t, mode),
                  -*BdQuality(t, kAnchor, mode), 1e-9);
    }
  }
}

TEST(BdRateTest, InputOrderDoesNotMatter) {
  RdCurve shuffled = kTest;
  std::swap(shuffled.points[0], shuffled.points[3]);
  std::swap(shuffled.points[1], shuffled.points[2]);
  EXPECT_DOUBLE_EQ(*BdRate(kAnchor, shuffled), *BdRate(kAnchor, kTest));
}

TEST(BdRateTest, Errors) {
  const RdCurve three = Curve({{1, 30}, {2, 31}, {3, 32}});
  EXPECT_EQ(BdRate(three, kAnchor).status().code(),
            absl::StatusCode::kInvalidArgument);
  const RdCurve dup = Curve({{1, 30}, {1, 31}, {2, 32}, {3, 33}});
  EXPECT_FALSE(BdRate(dup, kAnchor).ok());
  const RdCurve nonmono = Curve({{1, 30}, {2, 29}, {3, 32}, {4, 33}});
  EXPECT_FALSE(BdRate(nonmono, kAnchor).ok());
  const RdCurve neg = Curve({{-1, 30}, {2, 31}, {3, 32}, {4, 33}});
  EXPECT_FALSE(BdRate(neg, kAnchor).ok());
  EXPECT_EQ(BdRate(kAnchor, ShiftQuality(kAnchor, 20)).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_EQ(BdQuality(kAnchor, ScaleRates(kAnchor, 100)).status().code(),
            absl::StatusCode::kOutOfRange);
}

TEST(RdCsvTest, ParseAndEncode) {
  const std::string text = EncodeRdCsv(kAnchor.points);
  EXPECT_EQ(text.rfind("rate_bpp,quality\n0.25,30.1\n", 0), 0u);
  const RdCurve back = *ParseRdCsv(text, MetricTag::kPsnr);
  ASSERT_EQ(back.points.size(), 4u);
  EXPECT_EQ(back.points[3].rate, 2.0);
  EXPECT_EQ(back.points[3].quality, 38.9);
  EXPECT_EQ(EncodeRdCsv(back.points), text);
}

TEST(RdCsvTest, RawLpipsConverted) {
  const RdCurve c =
      *ParseRdCsv("rate_bpp,quality\n0.5,0.1\n1.0,0.01\n", MetricTag::kLpipsDb,
                  /*raw_lpips=*/true);
  EXPECT_NEAR(c.points[0].quality, 10.0, 1e-12);
  EXPECT_NEAR(c.points[1].quality, 20.0, 1e-12);
}

TEST(RdCsvTest, Rejects) {
  EXPECT_FALSE(ParseRdCsv("", MetricTag::kPsnr).ok());
  EXPECT_FALSE(ParseRdCsv("rate,psnr\n1,2\n", MetricTag::kPsnr).ok());
  EXPECT_FALSE(ParseRdCsv("rate_bpp,quality\n1,2,3\n", MetricTag::kPsnr).ok());
  EXPECT_FALSE(ParseRdCsv("rate_bpp,quality\n1,x\n", MetricTag::kPsnr).ok());
}

TEST(MetricTagTest, Names) {
  bool raw = true;
  EXPECT_EQ(*ParseMetricTag("msssim", &raw), MetricTag::kMsSsim);
  EXPECT_FALSE(raw);
  EXPECT_EQ(*ParseMetricTag("lpips", &raw), MetricTag::kLpipsDb);
  EXPECT_TRUE(raw);
  EXPECT_FALSE(ParseMetricTag("vmaf", &raw).ok());
  EXPECT_EQ(MetricTagName(MetricTag::kSsim), "ssim");
}

}  // namespace
}  // namespace qsalloc
