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

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "qsalloc/file_util.h"
#include "qsalloc/metrics.h"

namespace qsalloc {
namespace {

constexpr int kMinPoints = 4;

// A curve y(x) that can be integrated exactly over a sub-interval.
class CurveModel {
 public:
  virtual ~CurveModel() = default;
  virtual double Integrate(double lo, double hi) const = 0;
};

// y = c0 + c1 t + c2 t^2 + c3 t^3 with t = (x - center) / scale.
class CubicFit : public CurveModel {
 public:
  static CubicFit Fit(const std::vector<double>& x,
                      const std::vector<double>& y) {
    CubicFit fit;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    fit.center_ = 0.5 * (*lo + *hi);
    fit.scale_ = 0.5 * (*hi - *lo);

    // Normal equations on the centered and scaled abscissa.
    std::array<std::array<double, 5>, 4> m{};
    for (size_t i = 0; i < x.size(); ++i) {
      const double t = (x[i] - fit.center_) / fit.scale_;
      std::array<double, 4> p = {1, t, t * t, t * t * t};
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m[r][c] += p[r] * p[c];
        m[r][4] += p[r] * y[i];
      }
    }
    for (int col = 0; col < 4; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 4; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
      }
      std::swap(m[col], m[pivot]);
      for (int r = col + 1; r < 4; ++r) {
        const double f = m[r][col] / m[col][col];
        for (int c = col; c < 5; ++c) m[r][c] -= f * m[col][c];
      }
    }
    for (int r = 3; r >= 0; --r) {
      double s = m[r][4];
      for (int c = r + 1; c < 4; ++c) s -= m[r][c] * fit.coef_[c];
      fit.coef_[r] = s / m[r][r];
    }

    double sq = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double e = fit.Eval(x[i]) - y[i];
      sq += e * e;
    }
    fit.rms_ = std::sqrt(sq / x.size());
    return fit;
  }

  double Eval(double x) const {
    const double t = (x - center_) / scale_;
    return ((coef_[3] * t + coef_[2]) * t + coef_[1]) * t + coef_[0];
  }

  double Integrate(double lo, double hi) const override {
    return scale_ * (Antiderivative((hi - center_) / scale_) -
                     Antiderivative((lo - center_) / scale_));
  }

  double rms() const { return rms_; }

 private:
  double Antiderivative(double t) const {
    return (((coef_[3] / 4 * t + coef_[2] / 3) * t + coef_[1] / 2) * t +
            coef_[0]) *
           t;
  }

  double center_ = 0;
  double scale_ = 1;
  std::array<double, 4> coef_{};
  double rms_ = 0;
};

// Fritsch-Carlson monotone cubic Hermite interpolant with the same end
// conditions as the common PCHIP implementations.
class PchipFit : public CurveModel {
 public:
  PchipFit(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)), d_(x_.size()) {
    const size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    for (size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0) {
        d_[k] = 0;
      } else {
        const double w1 = 2 * h[k] + h[k - 1];
        const double w2 = h[k] + 2 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = EndSlope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = EndSlope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double Integrate(double lo, double hi) const override {
    double total = 0;
    for (size_t k = 0; k + 1 < x_.size(); ++k) {
      const double a = std::max(lo, x_[k]);
      const double b = std::min(hi, x_[k + 1]);
      if (b <= a) continue;
      const double h = x_[k + 1] - x_[k];
      total += h * (Segment(k, (b - x_[k]) / h) - Segment(k, (a - x_[k]) / h));
    }
    return total;
  }

 private:
  static double EndSlope(double h0, double h1, double m0, double m1) {
    const double d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (std::signbit(d) != std::signbit(m0) || d == 0) return 0;
    if (std::signbit(m0) != std::signbit(m1) && std::abs(d) > std::abs(3 * m0)) {
      return 3 * m0;
    }
    return d;
  }

  // Integral over [0, t] of the Hermite basis expansion on segment k, in
  // units of the segment's normalized coordinate.
  double Segment(size_t k, double t) const {
    const double h = x_[k + 1] - x_[k];
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double h00 = t - t3 + t4 / 2;
    const double h10 = t2 / 2 - 2 * t3 / 3 + t4 / 4;
    const double h01 = t3 - t4 / 2;
    const double h11 = -t3 / 3 + t4 / 4;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] +
           h11 * h * d_[k + 1];
  }

  std::vector<double> x_, y_, d_;
};

struct Fitted {
  double integral = 0;
  double rms = 0;
};

Fitted FitAndIntegrate(const std::vector<double>& x,
                       const std::vector<double>& y, double lo, double hi,
                       BdInterpolation mode) {
  if (mode == BdInterpolation::kCubic) {
    const CubicFit fit = CubicFit::Fit(x, y);
    return {fit.Integrate(lo, hi), fit.rms()};
  }
  return {PchipFit(x, y).Integrate(lo, hi), 0.0};
}

struct Axes {
  std::vector<double> log_rate;
  std::vector<double> quality;
};

Axes ToAxes(const RdCurve& c) {
  Axes a;
  for (const RatePoint& p : c.points) {
    a.log_rate.push_back(std::log10(p.rate));
    a.quality.push_back(p.quality);
  }
  return a;
}

absl::StatusOr<std::pair<Axes, Axes>> Prepare(const RdCurve& anchor,
                                              const RdCurve& test) {
  absl::StatusOr<RdCurve> a = NormalizeCurve(anchor);
  if (!a.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("anchor curve: ", a.status().message()));
  }
  absl::StatusOr<RdCurve> t = NormalizeCurve(test);
  if (!t.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("test curve: ", t.status().message()));
  }
  return std::make_pair(ToAxes(*a), ToAxes(*t));
}

absl::StatusOr<std::pair<double, double>> Overlap(
    const std::vector<double>& a, const std::vector<double>& b,
    const char* what) {
  const double lo = std::max(a.front(), b.front());
  const double hi = std::min(a.back(), b.back());
  if (!(hi > lo)) {
    return absl::OutOfRangeError(
        absl::StrCat("curves have no ", what, " overlap"));
  }
  return std::make_pair(lo, hi);
}

}  // namespace

absl::StatusOr<RdCurve> NormalizeCurve(const RdCurve& curve) {
  if (curve.points.size() < kMinPoints) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least ", kMinPoints, " points, got ",
                     curve.points.size()));
  }
  RdCurve out = curve;
  for (const RatePoint& p : out.points) {
    if (!std::isfinite(p.rate) || !(p.rate > 0)) {
      return absl::InvalidArgumentError("rates must be positive and finite");
    }
    if (!std::isfinite(p.quality)) {
      return absl::InvalidArgumentError("qualities must be finite");
    }
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const RatePoint& a, const RatePoint& b) {
              return a.rate < b.rate ||
                     (a.rate == b.rate && a.quality < b.quality);
            });
  for (size_t i = 1; i < out.points.size(); ++i) {
    if (!(out.points[i].rate > out.points[i - 1].rate)) {
      return absl::InvalidArgumentError("duplicate rate");
    }
    if (!(out.points[i].quality > out.points[i - 1].quality)) {
      return absl::InvalidArgumentError(
          "quality must increase strictly with rate");
    }
  }
  return out;
}

absl::StatusOr<BdResult> BjontegaardDelta(const RdCurve& anchor,
                                          const RdCurve& test,
                                          BdInterpolation mode) {
  absl::StatusOr<std::pair<Axes, Axes>> axes = Prepare(anchor, test);
  if (!axes.ok()) return axes.status();
  const Axes& a = axes->first;
  const Axes& t = axes->second;

  const auto q_range = Overlap(a.quality, t.quality, "quality");
  if (!q_range.ok()) return q_range.status();
  const auto r_range = Overlap(a.log_rate, t.log_rate, "rate");
  if (!r_range.ok()) return r_range.status();

  BdResult result;
  {
    const auto [lo, hi] = *q_range;
    const Fitted fa = FitAndIntegrate(a.quality, a.log_rate, lo, hi, mode);
    const Fitted ft = FitAndIntegrate(t.quality, t.log_rate, lo, hi, mode);
    const double avg = (ft.integral - fa.integral) / (hi - lo);
    result.bd_rate_percent = (std::pow(10.0, avg) - 1.0) * 100.0;
    result.overlap_lo = lo;
    result.overlap_hi = hi;
    result.anchor_fit_rms = fa.rms;
    result.test_fit_rms = ft.rms;
  }
  {
    const auto [lo, hi] = *r_range;
    const Fitted fa = FitAndIntegrate(a.log_rate, a.quality, lo, hi, mode);
    const Fitted ft = FitAndIntegrate(t.log_rate, t.quality, lo, hi, mode);
    result.bd_quality = (ft.integral - fa.integral) / (hi - lo);
  }
  return result;
}

absl::StatusOr<double> BdRate(const RdCurve& anchor, const RdCurve& test,
                              BdInterpolation mode) {
  absl::StatusOr<std::pair<Axes, Axes>> axes = Prepare(anchor, test);
  if (!axes.ok()) return axes.status();
  const Axes& a = axes->first;
  const Axes& t = axes->second;
  const auto range = Overlap(a.quality, t.quality, "quality");
  if (!range.ok()) return range.status();
  const auto [lo, hi] = *range;
  const double avg =
      (FitAndIntegrate(t.quality, t.log_rate, lo, hi, mode).integral -
       FitAndIntegrate(a.quality, a.log_rate, lo, hi, mode).integral) /
      (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

absl::StatusOr<double> BdQuality(const RdCurve& anchor, const RdCurve& test,
                                 BdInterpolation mode) {
  absl::StatusOr<std::pair<Axes, Axes>> axes = Prepare(anchor, test);
  if (!axes.ok()) return axes.status();
  const Axes& a = axes->first;
  const Axes& t = axes->second;
  const auto range = Overlap(a.log_rate, t.log_rate, "rate");
  if (!range.ok()) return range.status();
  const auto [lo, hi] = *range;
  return (FitAndIntegrate(t.log_rate, t.quality, lo, hi, mode).integral -
          FitAndIntegrate(a.log_rate, a.quality, lo, hi, mode).integral) /
         (hi - lo);
}

absl::StatusOr<MetricTag> ParseMetricTag(std::string_view name,
                                         bool* raw_lpips) {
  *raw_lpips = false;
  if (name == "psnr") return MetricTag::kPsnr;
  if (name == "ssim") return MetricTag::kSsim;
  if (name == "msssim") return MetricTag::kMsSsim;
  if (name == "lpips_db") return MetricTag::kLpipsDb;
  if (name == "lpips") {
    *raw_lpips = true;
    return MetricTag::kLpipsDb;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown metric tag '", std::string(name), "'"));
}

std::string_view MetricTagName(MetricTag tag) {
  switch (tag) {
    case MetricTag::kPsnr:
      return "psnr";
    case MetricTag::kSsim:
      return "ssim";
    case MetricTag::kMsSsim:
      return "msssim";
    case MetricTag::kLpipsDb:
      return "lpips_db";
  }
  return "?";
}

absl::StatusOr<RdCurve> ParseRdCsv(std::string_view text, MetricTag tag,
                                   bool raw_lpips) {
  RdCurve curve;
  curve.metric = tag;
  bool seen_header = false;
  int line_no = 0;
  for (absl::string_view raw_line :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    const absl::string_view line = absl::StripAsciiWhitespace(raw_line);
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != "rate_bpp,quality") {
        return absl::InvalidArgumentError(
            "expected CSV header 'rate_bpp,quality'");
      }
      seen_header = true;
      continue;
    }
    const std::vector<absl::string_view> cells = absl::StrSplit(line, ',');
    RatePoint p;
    if (cells.size() != 2 ||
        !absl::SimpleAtod(absl::StripAsciiWhitespace(cells[0]), &p.rate) ||
        !absl::SimpleAtod(absl::StripAsciiWhitespace(cells[1]), &p.quality)) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected 'rate,quality'"));
    }
    if (raw_lpips) {
      absl::StatusOr<double> db = LpipsToDb(p.quality);
      if (!db.ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": ", db.status().message()));
      }
      p.quality = *db;
    }
    curve.points.push_back(p);
  }
  if (!seen_header) return absl::InvalidArgumentError("empty RD CSV");
  return curve;
}

std::string EncodeRdCsv(const std::vector<RatePoint>& points) {
  std::string out = "rate_bpp,quality\n";
  for (const RatePoint& p : points) {
    absl::StrAppend(&out, FormatReal(p.rate), ",", FormatReal(p.quality), "\n");
  }
  return out;
}

}  // namespace qsalloc
