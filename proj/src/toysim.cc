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

#include "qsalloc/toysim.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "absl/strings/str_cat.h"

namespace qsalloc {
namespace {

using Basis = std::array<std::array<double, kTuSize>, kTuSize>;

const Basis& DctBasis() {
  static const Basis basis = [] {
    Basis b{};
    for (int u = 0; u < kTuSize; ++u) {
      const double alpha =
          std::sqrt((u == 0 ? 1.0 : 2.0) / static_cast<double>(kTuSize));
      for (int x = 0; x < kTuSize; ++x) {
        b[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi /
                                   (2.0 * kTuSize));
      }
    }
    return b;
  }();
  return basis;
}

// Forward: C * in * C^T. Inverse: C^T * in * C.
Block8x8 Separable(const Block8x8& in, bool forward) {
  const Basis& c = DctBasis();
  Block8x8 tmp{}, out{};
  // Rows: tmp[y][v] = sum_x in[y][x] * K(v, x).
  for (int y = 0; y < kTuSize; ++y) {
    for (int v = 0; v < kTuSize; ++v) {
      double s = 0;
      for (int x = 0; x < kTuSize; ++x) {
        s += in[y * kTuSize + x] * (forward ? c[v][x] : c[x][v]);
      }
      tmp[y * kTuSize + v] = s;
    }
  }
  // Columns: out[u][v] = sum_y K(u, y) * tmp[y][v].
  for (int u = 0; u < kTuSize; ++u) {
    for (int v = 0; v < kTuSize; ++v) {
      double s = 0;
      for (int y = 0; y < kTuSize; ++y) {
        s += (forward ? c[u][y] : c[y][u]) * tmp[y * kTuSize + v];
      }
      out[u * kTuSize + v] = s;
    }
  }
  return out;
}

absl::StatusOr<Block8x8> ToBlock(std::span<const double> values) {
  if (values.size() != kTuSize * kTuSize) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected an 8x8 block, got ", values.size(), " values"));
  }
  Block8x8 b;
  std::copy(values.begin(), values.end(), b.begin());
  return b;
}

}  // namespace

absl::StatusOr<Block8x8> Dct8Forward(std::span<const double> block) {
  absl::StatusOr<Block8x8> b = ToBlock(block);
  if (!b.ok()) return b.status();
  return Separable(*b, /*forward=*/true);
}

absl::StatusOr<Block8x8> Dct8Inverse(std::span<const double> coeffs) {
  absl::StatusOr<Block8x8> b = ToBlock(coeffs);
  if (!b.ok()) return b.status();
  return Separable(*b, /*forward=*/false);
}

double QStep(int qp) { return std::exp2((qp - 4) / 6.0); }

int64_t Quantize(double coeff, int qp) {
  return std::llround(coeff / QStep(qp));
}

double Dequantize(int64_t level, int qp) {
  return static_cast<double>(level) * QStep(qp);
}

uint64_t SignedExpGolombIndex(int64_t level) {
  return level > 0 ? 2 * static_cast<uint64_t>(level) - 1
                   : 2 * (0 - static_cast<uint64_t>(level));
}

int GolombBits(int64_t level) {
  const uint64_t m = SignedExpGolombIndex(level);
  return 2 * (std::bit_width(m + 1) - 1) + 1;
}

QpPlan QpPlan::Uniform(int base_qp) {
  QpPlan p;
  p.base_qp = base_qp;
  return p;
}

QpPlan QpPlan::FromAllocation(const BlockAllocation& alloc) {
  QpPlan p;
  p.base_qp = alloc.base_qp;
  p.block_size = alloc.grid.block_size;
  p.blocks_x = alloc.grid.blocks_x;
  p.blocks_y = alloc.grid.blocks_y;
  for (const BlockRecord& b : alloc.blocks) p.dqp.push_back(b.dqp);
  return p;
}

absl::StatusOr<QpPlan> QpPlan::FromQpMapFile(const BlockGridFile& file) {
  if (file.tag != GridTag::kQpMap) {
    return absl::InvalidArgumentError("not a QPMAP file");
  }
  QpPlan p;
  p.base_qp = file.base_qp;
  p.block_size = file.block_size;
  p.blocks_x = file.blocks_x;
  p.blocks_y = file.blocks_y;
  for (double v : file.values) p.dqp.push_back(static_cast<int>(v));
  return p;
}

absl::StatusOr<EncodeResult> EncodeImage(const Plane& luma,
                                         const QpPlan& plan) {
  if (luma.width < kTuSize || luma.height < kTuSize) {
    return absl::InvalidArgumentError("plane must be at least 8x8");
  }
  if (plan.block_size < kTuSize || plan.block_size % kTuSize != 0) {
    return absl::InvalidArgumentError(
        "transform size must divide the block size");
  }
  absl::StatusOr<BlockGrid> grid =
      BlockPartition(luma.width, luma.height, plan.block_size);
  if (!grid.ok()) return grid.status();
  if (!plan.is_uniform() &&
      (plan.blocks_x != grid->blocks_x || plan.blocks_y != grid->blocks_y ||
       plan.dqp.size() != grid->blocks.size())) {
    return absl::FailedPreconditionError(absl::StrCat(
        "QP map grid ", plan.blocks_x, "x", plan.blocks_y, "@",
        plan.block_size, " does not match the ", luma.width, "x",
        luma.height, " frame (", grid->blocks_x, "x", grid->blocks_y, ")"));
  }

  EncodeResult result;
  result.reconstruction = Plane(luma.width, luma.height);
  result.point.per_block_bits.assign(grid->blocks.size(), 0);
  double sse = 0;
  for (size_t k = 0; k < grid->blocks.size(); ++k) {
    const BlockExtent& blk = grid->blocks[k];
    const int qp = plan.base_qp + (plan.is_uniform() ? 0 : plan.dqp[k]);
    int64_t bits = 0;
    for (int ty = blk.y; ty < blk.y + blk.height; ty += kTuSize) {
      for (int tx = blk.x; tx < blk.x + blk.width; tx += kTuSize) {
        Block8x8 px;
        for (int y = 0; y < kTuSize; ++y) {
          for (int x = 0; x < kTuSize; ++x) {
            px[y * kTuSize + x] = luma.at(std::min(tx + x, luma.width - 1),
                                          std::min(ty + y, luma.height - 1));
          }
        }
        Block8x8 coeffs = Separable(px, /*forward=*/true);
        for (double& c : coeffs) {
          const int64_t level = Quantize(c, qp);
          bits += GolombBits(level);
          c = Dequantize(level, qp);
        }
        const Block8x8 rec = Separable(coeffs, /*forward=*/false);
        for (int y = 0; y < kTuSize && ty + y < luma.height; ++y) {
          for (int x = 0; x < kTuSize && tx + x < luma.width; ++x) {
            const double v =
                std::clamp(std::floor(rec[y * kTuSize + x] + 0.5), 0.0, 255.0);
            result.reconstruction.at(tx + x, ty + y) = static_cast<uint8_t>(v);
            const double d = v - luma.at(tx + x, ty + y);
            sse += d * d;
          }
        }
      }
    }
    result.point.per_block_bits[k] = bits;
    result.point.total_bits += bits;
  }
  const double pixels = double(luma.width) * luma.height;
  result.point.rate = double(result.point.total_bits) / pixels;
  result.point.distortion = sse / pixels;
  result.point.quality =
      sse == 0 ? std::numeric_limits<double>::infinity()
               : 10.0 * std::log10(255.0 * 255.0 / result.point.distortion);
  result.grid = *std::move(grid);
  return result;
}

BlockGridFile BitsFile(const EncodeResult& result, int base_qp) {
  BlockGridFile f{GridTag::kBits, result.grid.blocks_x, result.grid.blocks_y,
                  result.grid.block_size, base_qp, {}};
  for (int64_t b : result.point.per_block_bits) {
    f.values.push_back(static_cast<double>(b));
  }
  return f;
}

}  // namespace qsalloc
