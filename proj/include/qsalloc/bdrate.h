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

// Bjontegaard delta metrics between two rate-quality curves.
//
// BD-rate fits log10(rate) as a function of quality for each curve, averages
// the gap over the overlapping quality interval and reports it as a percent
// rate change of the test curve against the anchor. BD-quality is the dual:
// quality as a function of log10(rate), averaged over the overlapping
// log-rate interval.

#ifndef QSALLOC_BDRATE_H_
#define QSALLOC_BDRATE_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace qsalloc {

enum class MetricTag { kPsnr, kSsim, kMsSsim, kLpipsDb };

struct RatePoint {
  double rate = 0;     // bits per pixel
  double quality = 0;  // higher is better
};

struct RdCurve {
  std::vector<RatePoint> points;
  MetricTag metric = MetricTag::kPsnr;
};

enum class BdInterpolation {
  // Least-squares cubic polynomial over all points, integrated exactly.
  kCubic,
  // Monotone piecewise cubic Hermite (Fritsch-Carlson) through the points.
  kPiecewiseCubic,
};

struct BdResult {
  double bd_rate_percent = 0;
  double bd_quality = 0;
  // Quality interval used for BD-rate.
  double overlap_lo = 0;
  double overlap_hi = 0;
  // RMS residual of the log-rate fits; zero for the interpolating mode.
  double anchor_fit_rms = 0;
  double test_fit_rms = 0;
};

// Sorts by rate and checks: >= 4 points, positive finite rates, strictly
// increasing rates and qualities.
absl::StatusOr<RdCurve> NormalizeCurve(const RdCurve& curve);

// Errors: InvalidArgument for a malformed curve, OutOfRange when the curves
// do not overlap.
absl::StatusOr<double> BdRate(const RdCurve& anchor, const RdCurve& test,
                              BdInterpolation mode = BdInterpolation::kCubic);
absl::StatusOr<double> BdQuality(
    const RdCurve& anchor, const RdCurve& test,
    BdInterpolation mode = BdInterpolation::kCubic);
absl::StatusOr<BdResult> BjontegaardDelta(
    const RdCurve& anchor, const RdCurve& test,
    BdInterpolation mode = BdInterpolation::kCubic);

// Accepts psnr, ssim, msssim, lpips_db, and lpips. "lpips" marks raw LPIPS
// values, which ParseRdCsv converts to dB.
absl::StatusOr<MetricTag> ParseMetricTag(std::string_view name,
                                         bool* raw_lpips);
std::string_view MetricTagName(MetricTag tag);

// CSV with header "rate_bpp,quality" and one row per operating point.
absl::StatusOr<RdCurve> ParseRdCsv(std::string_view text, MetricTag tag,
                                   bool raw_lpips = false);
std::string EncodeRdCsv(const std::vector<RatePoint>& points);

}  // namespace qsalloc

#endif  // QSALLOC_BDRATE_H_
