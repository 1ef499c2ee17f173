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

#ifndef QSALLOC_TESTS_SUPPORT_FIXTURES_H_
#define QSALLOC_TESTS_SUPPORT_FIXTURES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "qsalloc/image_io.h"

namespace qsalloc::testing {

// Deterministic RGB image with structure at several scales. |kind| picks
// the pattern family; every family mixes smooth and busy regions so that
// block-level statistics differ across the frame.
inline RasterImage TexturedImage(int width, int height, int kind,
                                 uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  RasterImage img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = double(x) / std::max(width, 1);
      const double v = double(y) / std::max(height, 1);
      double base[3];
      switch (kind % 5) {
        case 0:
          base[0] = 128 + 70 * std::sin(x / 5.0) * std::cos(y / 9.0);
          base[1] = 40 + 150 * u;
          base[2] = 200 - 120 * v;
          break;
        case 1:
          base[0] = base[1] = base[2] =
              ((x / 8 + y / 8) % 2) ? 190.0 : 60.0;
          break;
        case 2:
          base[0] = 60 + 120 * u * v;
          base[1] = 128 + 90 * std::sin(std::hypot(x - width / 2.0,
                                                   y - height / 2.0) / 4.0);
          base[2] = 100;
          break;
        case 3:
          base[0] = base[1] = base[2] = (x * 7 + y * 13) % 256;
          break;
        default:
          base[0] = 90 + 60 * std::sin(x / 3.0);
          base[1] = 90 + 60 * std::cos(y / 3.0);
          base[2] = 128;
          break;
      }
      // Noise only in the upper-left quadrant.
      const double sigma = (u < 0.5 && v < 0.5) ? 30.0 : 2.0;
      for (int c = 0; c < 3; ++c) {
        const double s = base[c] + sigma * noise(rng);
        img.at(x, y, c) =
            static_cast<uint8_t>(std::clamp(std::round(s), 0.0, 255.0));
      }
    }
  }
  return img;
}

inline RasterImage ConstantImage(int width, int height, int channels,
                                 uint8_t value) {
  RasterImage img(width, height, channels);
  std::fill(img.mutable_samples().begin(), img.mutable_samples().end(), value);
  return img;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("qsalloc_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::permissions(path_, std::filesystem::perms::owner_all,
                                 std::filesystem::perm_options::add, ec);
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace qsalloc::testing

#endif  // QSALLOC_TESTS_SUPPORT_FIXTURES_H_
