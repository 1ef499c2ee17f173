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

#ifndef QSALLOC_IMAGE_IO_H_
#define QSALLOC_IMAGE_IO_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace qsalloc {

// Interleaved 8-bit raster, row-major. |channels| is 1 or 3.
class RasterImage {
 public:
  RasterImage() = default;
  // Zero-filled image.
  RasterImage(int width, int height, int channels);

  // Validates dimensions and the sample count.
  static absl::StatusOr<RasterImage> FromSamples(int width, int height,
                                                 int channels,
                                                 std::vector<uint8_t> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  const std::vector<uint8_t>& samples() const { return samples_; }
  std::vector<uint8_t>& mutable_samples() { return samples_; }

  uint8_t at(int x, int y, int c) const {
    return samples_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  uint8_t& at(int x, int y, int c) {
    return samples_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  bool operator==(const RasterImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<uint8_t> samples_;
};

// Single 8-bit plane.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> samples;

  Plane() = default;
  Plane(int w, int h) : width(w), height(h), samples(size_t(w) * h, 0) {}
  uint8_t at(int x, int y) const { return samples[size_t(y) * width + x]; }
  uint8_t& at(int x, int y) { return samples[size_t(y) * width + x]; }
  bool operator==(const Plane&) const = default;
};

// 4:2:0 planar frame, BT.601 limited range. Chroma planes are
// ceil(width/2) x ceil(height/2).
struct YuvFrame {
  Plane luma;
  Plane chroma_u;
  Plane chroma_v;
};

struct BlockExtent {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  int64_t pixel_count() const { return int64_t{width} * height; }
};

// Row-major tiling of a frame into square blocks; the right column and bottom
// row may be partial.
struct BlockGrid {
  int frame_width = 0;
  int frame_height = 0;
  int block_size = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<BlockExtent> blocks;

  int num_blocks() const { return blocks_x * blocks_y; }
  const BlockExtent& block(int bx, int by) const {
    return blocks[size_t(by) * blocks_x + bx];
  }
};

// Binary P6, maxval 255. Error messages distinguish a missing file,
// "unsupported magic", "unsupported maxval" and "truncated payload".
absl::StatusOr<RasterImage> LoadPpm(const std::string& path);
absl::StatusOr<RasterImage> DecodePpm(std::string_view bytes);

// P6 encoding of a 3-channel image; 1-channel input is replicated to gray.
std::string EncodePpm(const RasterImage& image);
absl::Status SavePpm(const RasterImage& image, const std::string& path);

// BT.601 limited-range conversion with 2x2 box-averaged chroma. All rounding
// is half-up and every output is clipped to the legal range.
absl::StatusOr<YuvFrame> RgbToYuv420(const RasterImage& image);

// Inverse of RgbToYuv420 with nearest-neighbour chroma upsampling. Lossy.
RasterImage Yuv420ToRgb(const YuvFrame& frame);

// Raw planar layout: Y, then U, then V, each row-major.
std::string EncodeYuv420(const YuvFrame& frame);

// Replicates a plane into a 3-channel gray image.
RasterImage PlaneToRgb(const Plane& plane);

absl::StatusOr<BlockGrid> BlockPartition(int width, int height,
                                         int block_size);

}  // namespace qsalloc

#endif  // QSALLOC_IMAGE_IO_H_
