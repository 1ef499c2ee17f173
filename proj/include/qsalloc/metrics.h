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

#ifndef QSALLOC_METRICS_H_
#define QSALLOC_METRICS_H_

#include <optional>

#include "absl/status/statusor.h"
#include "qsalloc/image_io.h"

namespace qsalloc {

// SSIM window: 11x11 Gaussian, sigma 1.5, normalized to sum 1, evaluated
// over the valid region only.
inline constexpr int kSsimWindow = 11;
// Five scales need 11 * 2^4 pixels at the finest one.
inline constexpr int kMsSsimMinDim = 176;

// 10 log10(255^2 / MSE) over every sample; +inf when the images match.
absl::StatusOr<double> Psnr(const RasterImage& a, const RasterImage& b);

// Single-scale SSIM (K1 = 0.01, K2 = 0.03, L = 255). Multi-channel inputs
// are scored per channel and averaged.
absl::StatusOr<double> Ssim(const RasterImage& a, const RasterImage& b);

// Five-scale MS-SSIM with weights (0.0448, 0.2856, 0.3001, 0.2363, 0.1333):
// contrast-structure means at every scale, the luminance mean at the coarsest
// scale only, 2x2 average pooling between scales. Negative contrast-structure
// means are floored at 0. Averaged over channels.
absl::StatusOr<double> MsSsim(const RasterImage& a, const RasterImage& b);

// -10 log10(v); v must be positive.
absl::StatusOr<double> LpipsToDb(double lpips);

// BT.601 luma plane of an RGB image as a 1-channel raster.
RasterImage LumaImage(const RasterImage& rgb);

struct MetricOptions {
  bool luma_only = false;
};

// Metrics that need a larger image than provided are reported as NaN.
struct MetricReport {
  double psnr = 0;
  double ssim = 0;
  double ms_ssim = 0;
  std::optional<double> lpips_db;
};

absl::StatusOr<MetricReport> EvaluatePair(const RasterImage& reference,
                                          const RasterImage& test,
                                          const MetricOptions& options,
                                          std::optional<double> lpips = {});

}  // namespace qsalloc

#endif  // QSALLOC_METRICS_H_
