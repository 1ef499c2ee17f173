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

#include "qsalloc/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "absl/strings/str_cat.h"

namespace qsalloc {
namespace {

constexpr double kPeak = 255.0;
constexpr double kC1 = (0.01 * kPeak) * (0.01 * kPeak);
constexpr double kC2 = (0.03 * kPeak) * (0.03 * kPeak);
constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001,
                                                  0.2363, 0.1333};

struct Channel {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  double at(int x, int y) const { return v[size_t(y) * width + x]; }
};

Channel ExtractChannel(const RasterImage& img, int c) {
  Channel ch{img.width(), img.height(), {}};
  ch.v.resize(size_t(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      ch.v[size_t(y) * img.width() + x] = img.at(x, y, c);
    }
  }
  return ch;
}

Channel Downsample(const Channel& in) {
  Channel out{in.width / 2, in.height / 2, {}};
  out.v.resize(size_t(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.v[size_t(y) * out.width + x] =
          (in.at(2 * x, 2 * y) + in.at(2 * x + 1, 2 * y) +
           in.at(2 * x, 2 * y + 1) + in.at(2 * x + 1, 2 * y + 1)) *
          0.25;
    }
  }
  return out;
}

const std::array<double, kSsimWindow>& GaussianTaps() {
  static const std::array<double, kSsimWindow> taps = [] {
    std::array<double, kSsimWindow> t{};
    double sum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      t[i] = std::exp(-d * d / (2 * 1.5 * 1.5));
      sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

// Separable valid-region Gaussian filter.
Channel FilterValid(const Channel& in) {
  const auto& g = GaussianTaps();
  const int ow = in.width - kSsimWindow + 1;
  const int oh = in.height - kSsimWindow + 1;
  Channel rows{ow, in.height, std::vector<double>(size_t(ow) * in.height)};
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int t = 0; t < kSsimWindow; ++t) s += g[t] * in.at(x + t, y);
      rows.v[size_t(y) * ow + x] = s;
    }
  }
  Channel out{ow, oh, std::vector<double>(size_t(ow) * oh)};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int t = 0; t < kSsimWindow; ++t) s += g[t] * rows.at(x, y + t);
      out.v[size_t(y) * ow + x] = s;
    }
  }
  return out;
}

struct SsimTerms {
  double ssim = 0;         // mean of l * cs
  double cs = 0;           // mean contrast-structure
  double luminance = 0;    // mean luminance
};

SsimTerms ComputeSsimTerms(const Channel& a, const Channel& b) {
  Channel aa = a, bb = b, ab = a;
  for (size_t i = 0; i < a.v.size(); ++i) {
    aa.v[i] = a.v[i] * a.v[i];
    bb.v[i] = b.v[i] * b.v[i];
    ab.v[i] = a.v[i] * b.v[i];
  }
  const Channel mu_a = FilterValid(a), mu_b = FilterValid(b);
  const Channel e_aa = FilterValid(aa), e_bb = FilterValid(bb),
                e_ab = FilterValid(ab);
  SsimTerms t;
  const size_t n = mu_a.v.size();
  for (size_t i = 0; i < n; ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double var_a = e_aa.v[i] - ma * ma;
    const double var_b = e_bb.v[i] - mb * mb;
    const double cov = e_ab.v[i] - ma * mb;
    const double l = (2 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
    const double cs = (2 * cov + kC2) / (var_a + var_b + kC2);
    t.ssim += l * cs;
    t.cs += cs;
    t.luminance += l;
  }
  t.ssim /= n;
  t.cs /= n;
  t.luminance /= n;
  return t;
}

double MsSsimChannel(Channel a, Channel b) {
  double result = 1.0;
  for (size_t scale = 0; scale < kMsSsimWeights.size(); ++scale) {
    if (scale > 0) {
      a = Downsample(a);
      b = Downsample(b);
    }
    const SsimTerms t = ComputeSsimTerms(a, b);
    result *= std::pow(std::max(t.cs, 0.0), kMsSsimWeights[scale]);
    if (scale + 1 == kMsSsimWeights.size()) {
      result *= std::pow(std::max(t.luminance, 0.0), kMsSsimWeights[scale]);
    }
  }
  return result;
}

absl::Status CheckSameShape(const RasterImage& a, const RasterImage& b) {
  if (a.width() != b.width() || a.height() != b.height() ||
      a.channels() != b.channels()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: ", a.width(), "x", a.height(), "x", a.channels(),
        " vs ", b.width(), "x", b.height(), "x", b.channels()));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<double> Psnr(const RasterImage& a, const RasterImage& b) {
  if (absl::Status s = CheckSameShape(a, b); !s.ok()) return s;
  double sse = 0;
  for (size_t i = 0; i < a.samples().size(); ++i) {
    const double d = double(a.samples()[i]) - double(b.samples()[i]);
    sse += d * d;
  }
  if (sse == 0) return std::numeric_limits<double>::infinity();
  const double mse = sse / double(a.samples().size());
  return 10.0 * std::log10(kPeak * kPeak / mse);
}

absl::StatusOr<double> Ssim(const RasterImage& a, const RasterImage& b) {
  if (absl::Status s = CheckSameShape(a, b); !s.ok()) return s;
  if (std::min(a.width(), a.height()) < kSsimWindow) {
    return absl::InvalidArgumentError(absl::StrCat(
        "SSIM needs images of at least ", kSsimWindow, "x", kSsimWindow));
  }
  double sum = 0;
  for (int c = 0; c < a.channels(); ++c) {
    sum += ComputeSsimTerms(ExtractChannel(a, c), ExtractChannel(b, c)).ssim;
  }
  return sum / a.channels();
}

absl::StatusOr<double> MsSsim(const RasterImage& a, const RasterImage& b) {
  if (absl::Status s = CheckSameShape(a, b); !s.ok()) return s;
  if (std::min(a.width(), a.height()) < kMsSsimMinDim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "MS-SSIM needs images of at least ", kMsSsimMinDim, "x",
        kMsSsimMinDim));
  }
  double sum = 0;
  for (int c = 0; c < a.channels(); ++c) {
    sum += MsSsimChannel(ExtractChannel(a, c), ExtractChannel(b, c));
  }
  return sum / a.channels();
}

absl::StatusOr<double> LpipsToDb(double lpips) {
  if (!(lpips > 0) || !std::isfinite(lpips)) {
    return absl::InvalidArgumentError("LPIPS value must be positive");
  }
  return -10.0 * std::log10(lpips);
}

RasterImage LumaImage(const RasterImage& rgb) {
  if (rgb.channels() == 1) return rgb;
  RasterImage out(rgb.width(), rgb.height(), 1);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const double v = 16.0 + (65.481 * rgb.at(x, y, 0) +
                               128.553 * rgb.at(x, y, 1) +
                               24.966 * rgb.at(x, y, 2)) /
                                  255.0;
      out.at(x, y, 0) = static_cast<uint8_t>(
          std::clamp(std::floor(v + 0.5), 16.0, 235.0));
    }
  }
  return out;
}

absl::StatusOr<MetricReport> EvaluatePair(const RasterImage& reference,
                                          const RasterImage& test,
                                          const MetricOptions& options,
                                          std::optional<double> lpips) {
  if (absl::Status s = CheckSameShape(reference, test); !s.ok()) return s;
  const RasterImage a = options.luma_only ? LumaImage(reference) : reference;
  const RasterImage b = options.luma_only ? LumaImage(test) : test;
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
  MetricReport report;
  report.psnr = *Psnr(a, b);
  const int min_dim = std::min(a.width(), a.height());
  report.ssim = min_dim >= kSsimWindow ? *Ssim(a, b) : kNan;
  report.ms_ssim = min_dim >= kMsSsimMinDim ? *MsSsim(a, b) : kNan;
  if (lpips.has_value()) {
    absl::StatusOr<double> db = LpipsToDb(*lpips);
    if (!db.ok()) return db.status();
    report.lpips_db = *db;
  }
  return report;
}

}  // namespace qsalloc
