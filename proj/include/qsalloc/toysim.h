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

// A luma-only block-DCT intra codec proxy used to check that a QP map moves
// bits where it should. There is no prediction and no context modelling:
// every 8x8 transform unit is coded independently with order-0 exp-Golomb
// codes, so the rate depends only on the quantized coefficients.

#ifndef QSALLOC_TOYSIM_H_
#define QSALLOC_TOYSIM_H_

#include <array>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "qsalloc/alloc.h"
#include "qsalloc/image_io.h"

namespace qsalloc {

inline constexpr int kTuSize = 8;

using Block8x8 = std::array<double, kTuSize * kTuSize>;

// Orthonormal separable 2-D DCT-II and its transpose.
absl::StatusOr<Block8x8> Dct8Forward(std::span<const double> block);
absl::StatusOr<Block8x8> Dct8Inverse(std::span<const double> coeffs);

// HEVC-style step: 2^((qp - 4) / 6).
double QStep(int qp);
int64_t Quantize(double coeff, int qp);
double Dequantize(int64_t level, int qp);

// Signed mapping (q > 0 -> 2q - 1, q <= 0 -> -2q) followed by the order-0
// exp-Golomb code length 2 floor(log2(m + 1)) + 1.
uint64_t SignedExpGolombIndex(int64_t level);
int GolombBits(int64_t level);

// Per-block QP offsets on a block grid, plus the base QP.
struct QpPlan {
  int base_qp = 0;
  int block_size = 64;
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<int> dqp;  // row-major

  static QpPlan Uniform(int base_qp);
  static QpPlan FromAllocation(const BlockAllocation& alloc);
  static absl::StatusOr<QpPlan> FromQpMapFile(const BlockGridFile& file);

  bool is_uniform() const { return dqp.empty(); }
};

struct RdPoint {
  double rate = 0;        // bits per pixel
  double distortion = 0;  // MSE
  double quality = 0;     // PSNR, dB
  int64_t total_bits = 0;
  std::vector<int64_t> per_block_bits;  // aligned to the block grid
};

struct EncodeResult {
  RdPoint point;
  BlockGrid grid;
  Plane reconstruction;
};

// Every 8x8 unit inside a block uses that block's QP. Units hanging over the
// right or bottom edge are filled by edge replication and cropped after
// reconstruction. A uniform plan uses the default 64-pixel grid.
absl::StatusOr<EncodeResult> EncodeImage(const Plane& luma, const QpPlan& plan);

BlockGridFile BitsFile(const EncodeResult& result, int base_qp);

}  // namespace qsalloc

#endif  // QSALLOC_TOYSIM_H_
