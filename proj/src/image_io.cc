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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "qsalloc/file_util.h"

namespace qsalloc {
namespace {

// Half-up rounding and clipping to [lo, hi].
uint8_t RoundClip(double v, int lo, int hi) {
  const double r = std::floor(v + 0.5);
  return static_cast<uint8_t>(std::clamp(r, double(lo), double(hi)));
}

double LumaOf(double r, double g, double b) {
  return 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
}
double CbOf(double r, double g, double b) {
  return 128.0 + (-37.797 * r - 74.203 * g + 112.0 * b) / 255.0;
}
double CrOf(double r, double g, double b) {
  return 128.0 + (112.0 * r - 93.786 * g - 18.214 * b) / 255.0;
}

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Next whitespace-delimited token, skipping '#' comments.
  std::string_view Token() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    const size_t start = pos_;
    while (pos_ < bytes_.size() &&
           !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    return bytes_.substr(start, pos_ - start);
  }

  bool PositiveInt(int* out) {
    const std::string_view tok = Token();
    if (tok.empty() || tok.size() > 9) return false;
    int v = 0;
    for (char c : tok) {
      if (c < '0' || c > '9') return false;
      v = v * 10 + (c - '0');
    }
    *out = v;
    return true;
  }

  size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

RasterImage::RasterImage(int width, int height, int channels)
    : width_(width),
      height_(height),
      channels_(channels),
      samples_(size_t(width) * height * channels, 0) {}

absl::StatusOr<RasterImage> RasterImage::FromSamples(
    int width, int height, int channels, std::vector<uint8_t> samples) {
  if (width < 1 || height < 1) {
    return absl::InvalidArgumentError("image dimensions must be >= 1");
  }
  if (channels != 1 && channels != 3) {
    return absl::InvalidArgumentError("channels must be 1 or 3");
  }
  if (samples.size() != size_t(width) * height * channels) {
    return absl::InvalidArgumentError(
        absl::StrCat("sample count ", samples.size(), " != ", width, "x",
                     height, "x", channels));
  }
  RasterImage img;
  img.width_ = width;
  img.height_ = height;
  img.channels_ = channels;
  img.samples_ = std::move(samples);
  return img;
}

absl::StatusOr<RasterImage> DecodePpm(std::string_view bytes) {
  HeaderReader reader(bytes);
  const std::string magic(reader.Token());
  if (magic != "P6") {
    return absl::InvalidArgumentError(
        absl::StrCat("unsupported magic '", magic, "'"));
  }
  int width = 0, height = 0, maxval = 0;
  if (!reader.PositiveInt(&width) || !reader.PositiveInt(&height) ||
      width < 1 || height < 1) {
    return absl::InvalidArgumentError("malformed PPM dimensions");
  }
  if (!reader.PositiveInt(&maxval)) {
    return absl::InvalidArgumentError("malformed PPM maxval");
  }
  if (maxval != 255) {
    return absl::InvalidArgumentError(
        absl::StrCat("unsupported maxval ", maxval));
  }
  // Exactly one whitespace byte separates the header from the payload.
  const size_t payload_start = reader.pos() + 1;
  const size_t need = size_t(width) * height * 3;
  if (payload_start > bytes.size() || bytes.size() - payload_start < need) {
    return absl::DataLossError(
        absl::StrCat("truncated payload: expected ", need, " bytes"));
  }
  const auto* first =
      reinterpret_cast<const uint8_t*>(bytes.data() + payload_start);
  return RasterImage::FromSamples(width, height, 3,
                                  std::vector<uint8_t>(first, first + need));
}

absl::StatusOr<RasterImage> LoadPpm(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFile(path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<RasterImage> img = DecodePpm(*bytes);
  if (!img.ok()) {
    return absl::Status(img.status().code(),
                        absl::StrCat(path, ": ", img.status().message()));
  }
  return img;
}

std::string EncodePpm(const RasterImage& image) {
  std::string out = absl::StrCat("P6\n", image.width(), " ", image.height(),
                                 "\n255\n");
  if (image.channels() == 3) {
    out.append(image.samples().begin(), image.samples().end());
  } else {
    out.reserve(out.size() + image.samples().size() * 3);
    for (uint8_t v : image.samples()) out.append(3, static_cast<char>(v));
  }
  return out;
}

absl::Status SavePpm(const RasterImage& image, const std::string& path) {
  return WriteFileAtomic(path, EncodePpm(image));
}

absl::StatusOr<YuvFrame> RgbToYuv420(const RasterImage& image) {
  if (image.channels() != 3) {
    return absl::InvalidArgumentError("RGB to YUV conversion needs 3 channels");
  }
  const int w = image.width(), h = image.height();
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  YuvFrame frame{Plane(w, h), Plane(cw, ch), Plane(cw, ch)};
  std::vector<double> cb(size_t(w) * h), cr(size_t(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = image.at(x, y, 0), g = image.at(x, y, 1),
                   b = image.at(x, y, 2);
      frame.luma.at(x, y) = RoundClip(LumaOf(r, g, b), 16, 235);
      cb[size_t(y) * w + x] = CbOf(r, g, b);
      cr[size_t(y) * w + x] = CrOf(r, g, b);
    }
  }
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      double su = 0, sv = 0;
      int n = 0;
      for (int y = 2 * cy; y < std::min(2 * cy + 2, h); ++y) {
        for (int x = 2 * cx; x < std::min(2 * cx + 2, w); ++x) {
          su += cb[size_t(y) * w + x];
          sv += cr[size_t(y) * w + x];
          ++n;
        }
      }
      frame.chroma_u.at(cx, cy) = RoundClip(su / n, 16, 240);
      frame.chroma_v.at(cx, cy) = RoundClip(sv / n, 16, 240);
    }
  }
  return frame;
}

RasterImage Yuv420ToRgb(const YuvFrame& frame) {
  const int w = frame.luma.width, h = frame.luma.height;
  RasterImage out(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double yy = (frame.luma.at(x, y) - 16.0) * 255.0 / 219.0;
      const double u = (frame.chroma_u.at(x / 2, y / 2) - 128.0) * 255.0 / 224.0;
      const double v = (frame.chroma_v.at(x / 2, y / 2) - 128.0) * 255.0 / 224.0;
      // BT.601 inverse (Kr = 0.299, Kb = 0.114).
      const double r = yy + 1.402 * v;
      const double g = yy - 0.344136286 * u - 0.714136286 * v;
      const double b = yy + 1.772 * u;
      out.at(x, y, 0) = RoundClip(r, 0, 255);
      out.at(x, y, 1) = RoundClip(g, 0, 255);
      out.at(x, y, 2) = RoundClip(b, 0, 255);
    }
  }
  return out;
}

std::string EncodeYuv420(const YuvFrame& frame) {
  std::string out;
  out.reserve(frame.luma.samples.size() + 2 * frame.chroma_u.samples.size());
  for (const Plane* p : {&frame.luma, &frame.chroma_u, &frame.chroma_v}) {
    out.append(p->samples.begin(), p->samples.end());
  }
  return out;
}

RasterImage PlaneToRgb(const Plane& plane) {
  RasterImage out(plane.width, plane.height, 3);
  for (size_t i = 0; i < plane.samples.size(); ++i) {
    for (int c = 0; c < 3; ++c) out.mutable_samples()[i * 3 + c] = plane.samples[i];
  }
  return out;
}

absl::StatusOr<BlockGrid> BlockPartition(int width, int height,
                                         int block_size) {
  if (width < 1 || height < 1 || block_size < 1) {
    return absl::InvalidArgumentError(
        "block partition arguments must all be >= 1");
  }
  BlockGrid grid;
  grid.frame_width = width;
  grid.frame_height = height;
  grid.block_size = block_size;
  grid.blocks_x = (width + block_size - 1) / block_size;
  grid.blocks_y = (height + block_size - 1) / block_size;
  grid.blocks.reserve(size_t(grid.blocks_x) * grid.blocks_y);
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      BlockExtent e;
      e.x = bx * block_size;
      e.y = by * block_size;
      e.width = std::min(block_size, width - e.x);
      e.height = std::min(block_size, height - e.y);
      grid.blocks.push_back(e);
    }
  }
  return grid;
}

}  // namespace qsalloc
