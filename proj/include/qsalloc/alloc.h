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

// Block-level bit allocation from a quantization step map.
//
// Each block's mean step QS_k gives a bit ratio r_k proportional to 1/QS_k,
// normalized so the pixel-weighted mean ratio is 1. Under the R-lambda model
// lambda = alpha * R^beta, giving block k the rate r_k * R moves its lambda by
// r_k^beta_k, i.e. a QP offset of
//
//   dQP_k = clamp(round(slope * N * beta_k * log2(r_k)), -clamp, clamp)
//
// with N = 3 (QP steps per doubling of lambda), and the block lambda becomes
// lambda * 2^(dQP_k / N).

#ifndef QSALLOC_ALLOC_H_
#define QSALLOC_ALLOC_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "qsalloc/grid_text.h"
#include "qsalloc/image_io.h"
#include "qsalloc/stepnet.h"

namespace qsalloc {

inline constexpr double kDefaultBeta = -1.367;
inline constexpr int kUnboundedClamp = 1 << 30;

// Per-block beta values laid out on the allocation block grid.
struct BetaMap {
  int blocks_x = 0;
  int blocks_y = 0;
  int block_size = 0;
  std::vector<double> values;
};

struct AllocConfig {
  int base_qp = 37;
  std::variant<double, BetaMap> beta = kDefaultBeta;
  double slope = 1.0;
  int clamp = 4;
  int n_const = 3;
  int block_size = 64;
  double eps = 1e-6;

  // Base QP -> lambda used when the step model was trained for each rate
  // point. Metadata only; it is echoed into run manifests.
  static const std::map<int, double>& LambdaAlignmentTable();
  std::optional<double> AlignmentLambda() const;
};

absl::Status ValidateConfig(const AllocConfig& cfg);

struct BlockRecord {
  double qs = 0;
  double ratio = 0;
  double beta = 0;
  int dqp = 0;
  int qp = 0;
  double lambda_scale = 1;
};

struct BlockAllocation {
  BlockGrid grid;
  int base_qp = 0;
  std::vector<BlockRecord> blocks;  // row-major
};

struct LinearityReport {
  double slope_through_origin = 0;
  double r_squared = 0;
  int n_blocks = 0;
};

// Mean of the latent cells overlapped by each block. A cell (i, j) covers
// pixels [16i, 16i + 16) x [16j, 16j + 16); block_size must be a multiple
// of 16.
absl::StatusOr<std::vector<double>> BlockMeanStep(const StepMap& map,
                                                  const BlockGrid& grid);

// r_k = (1 / max(QS_k, eps)) normalized to a pixel-weighted mean of 1.
absl::StatusOr<std::vector<double>> BitRatios(std::span<const double> qs,
                                              const BlockGrid& grid,
                                              double eps);

// slope * n_const * beta * log2(r) before rounding.
double RawQpOffset(double ratio, double beta, const AllocConfig& cfg);

// Rounds half away from zero, then clamps to [-clamp, clamp].
absl::StatusOr<int> QpOffset(double ratio, double beta,
                             const AllocConfig& cfg);

// 2^(dqp / n_const); multiplies the encoder's frame lambda.
double LambdaAdapt(int dqp, int n_const);

absl::StatusOr<BlockAllocation> BuildAllocation(const StepMap& map, int width,
                                                int height,
                                                const AllocConfig& cfg);

// Fit of normalized per-block bits against normalized 1/QS_k through the
// origin. r_squared uses the centered total sum of squares and is clamped to
// [0, 1]; it is 0 when the bits are constant.
absl::StatusOr<LinearityReport> LinearityFit(std::span<const double> bits,
                                             std::span<const double> qs);

// Sidecar encodings of an allocation and a beta map.
BlockGridFile QpMapFile(const BlockAllocation& alloc);
BlockGridFile LambdaScaleFile(const BlockAllocation& alloc);
BlockGridFile BetaMapFile(const BetaMap& beta);
absl::StatusOr<BetaMap> BetaMapFromFile(const BlockGridFile& file);

}  // namespace qsalloc

#endif  // QSALLOC_ALLOC_H_
