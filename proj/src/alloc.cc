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

#include "qsalloc/alloc.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace qsalloc {

const std::map<int, double>& AllocConfig::LambdaAlignmentTable() {
  static const std::map<int, double> table = {
      {22, 16.0}, {27, 8.0}, {32, 4.0}, {37, 1.0}};
  return table;
}

std::optional<double> AllocConfig::AlignmentLambda() const {
  const auto& table = LambdaAlignmentTable();
  const auto it = table.find(base_qp);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

absl::Status ValidateConfig(const AllocConfig& cfg) {
  if (cfg.base_qp < 0 || cfg.base_qp > 63) {
    return absl::InvalidArgumentError(
        absl::StrCat("base QP ", cfg.base_qp, " outside [0, 63]"));
  }
  if (!(cfg.slope > 0) || !std::isfinite(cfg.slope)) {
    return absl::InvalidArgumentError("slope must be positive");
  }
  if (cfg.clamp < 0) {
    return absl::InvalidArgumentError("clamp must be non-negative");
  }
  if (!(cfg.eps > 0) || !std::isfinite(cfg.eps)) {
    return absl::InvalidArgumentError("eps must be positive");
  }
  if (cfg.n_const < 1) {
    return absl::InvalidArgumentError("n_const must be positive");
  }
  if (cfg.block_size < kStepMapDownsample ||
      cfg.block_size % kStepMapDownsample != 0) {
    return absl::InvalidArgumentError(
        "block size must be a positive multiple of 16");
  }
  if (const double* b = std::get_if<double>(&cfg.beta);
      b != nullptr && !std::isfinite(*b)) {
    return absl::InvalidArgumentError("beta must be finite");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> BlockMeanStep(const StepMap& map,
                                                  const BlockGrid& grid) {
  constexpr int kCell = kStepMapDownsample;
  if (grid.block_size % kCell != 0) {
    return absl::InvalidArgumentError(
        "block size must be a multiple of the 16-pixel latent cell");
  }
  const int want_w = (grid.frame_width + kCell - 1) / kCell;
  const int want_h = (grid.frame_height + kCell - 1) / kCell;
  if (map.grid_w != want_w || map.grid_h != want_h ||
      map.values.size() != size_t(map.grid_w) * map.grid_h) {
    return absl::InvalidArgumentError(absl::StrCat(
        "step map is ", map.grid_w, "x", map.grid_h, " but a ",
        grid.frame_width, "x", grid.frame_height, " frame needs ", want_w,
        "x", want_h));
  }
  std::vector<double> qs;
  qs.reserve(grid.blocks.size());
  for (const BlockExtent& b : grid.blocks) {
    const int x0 = b.x / kCell, y0 = b.y / kCell;
    const int x1 = (b.x + b.width + kCell - 1) / kCell;
    const int y1 = (b.y + b.height + kCell - 1) / kCell;
    double sum = 0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) sum += map.at(x, y);
    }
    qs.push_back(sum / double((x1 - x0) * (y1 - y0)));
  }
  return qs;
}

absl::StatusOr<std::vector<double>> BitRatios(std::span<const double> qs,
                                              const BlockGrid& grid,
                                              double eps) {
  if (qs.empty()) return absl::InvalidArgumentError("no blocks");
  if (qs.size() != grid.blocks.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        qs.size(), " steps for ", grid.blocks.size(), " blocks"));
  }
  std::vector<double> raw(qs.size());
  double weighted = 0;
  double pixels = 0;
  for (size_t k = 0; k < qs.size(); ++k) {
    if (!std::isfinite(qs[k])) {
      return absl::InvalidArgumentError("non-finite quantization step");
    }
    raw[k] = 1.0 / std::max(qs[k], eps);
    const double n = static_cast<double>(grid.blocks[k].pixel_count());
    weighted += raw[k] * n;
    pixels += n;
  }
  const double mean = weighted / pixels;
  for (double& r : raw) r /= mean;
  return raw;
}

double RawQpOffset(double ratio, double beta, const AllocConfig& cfg) {
  return cfg.slope * cfg.n_const * beta * std::log2(ratio);
}

absl::StatusOr<int> QpOffset(double ratio, double beta,
                             const AllocConfig& cfg) {
  if (!(ratio > 0) || !std::isfinite(ratio)) {
    return absl::InvalidArgumentError("bit ratio must be positive");
  }
  const double rounded = std::round(RawQpOffset(ratio, beta, cfg));
  const double bound = cfg.clamp;
  return static_cast<int>(std::clamp(rounded, -bound, bound));
}

double LambdaAdapt(int dqp, int n_const) {
  return std::exp2(static_cast<double>(dqp) / n_const);
}

absl::StatusOr<BlockAllocation> BuildAllocation(const StepMap& map, int width,
                                                int height,
                                                const AllocConfig& cfg) {
  if (absl::Status s = ValidateConfig(cfg); !s.ok()) return s;
  absl::StatusOr<BlockGrid> grid = BlockPartition(width, height, cfg.block_size);
  if (!grid.ok()) return grid.status();

  const BetaMap* beta_map = std::get_if<BetaMap>(&cfg.beta);
  if (beta_map != nullptr &&
      (beta_map->blocks_x != grid->blocks_x ||
       beta_map->blocks_y != grid->blocks_y ||
       beta_map->block_size != grid->block_size ||
       beta_map->values.size() != grid->blocks.size())) {
    return absl::FailedPreconditionError(absl::StrCat(
        "beta map grid ", beta_map->blocks_x, "x", beta_map->blocks_y, "@",
        beta_map->block_size, " does not match block grid ", grid->blocks_x,
        "x", grid->blocks_y, "@", grid->block_size));
  }

  absl::StatusOr<std::vector<double>> qs = BlockMeanStep(map, *grid);
  if (!qs.ok()) return qs.status();
  absl::StatusOr<std::vector<double>> ratios = BitRatios(*qs, *grid, cfg.eps);
  if (!ratios.ok()) return ratios.status();

  BlockAllocation alloc;
  alloc.base_qp = cfg.base_qp;
  alloc.blocks.reserve(qs->size());
  for (size_t k = 0; k < qs->size(); ++k) {
    BlockRecord rec;
    rec.qs = (*qs)[k];
    rec.ratio = (*ratios)[k];
    rec.beta = beta_map ? beta_map->values[k] : std::get<double>(cfg.beta);
    absl::StatusOr<int> dqp = QpOffset(rec.ratio, rec.beta, cfg);
    if (!dqp.ok()) return dqp.status();
    rec.dqp = *dqp;
    rec.qp = cfg.base_qp + rec.dqp;
    rec.lambda_scale = LambdaAdapt(rec.dqp, cfg.n_const);
    alloc.blocks.push_back(rec);
  }
  alloc.grid = *std::move(grid);
  return alloc;
}

absl::StatusOr<LinearityReport> LinearityFit(std::span<const double> bits,
                                             std::span<const double> qs) {
  if (bits.size() != qs.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "length mismatch: ", bits.size(), " bit counts, ", qs.size(),
        " steps"));
  }
  if (bits.size() < 2) {
    return absl::InvalidArgumentError("linearity fit needs at least 2 blocks");
  }
  const double n = static_cast<double>(bits.size());
  double bit_sum = 0, inv_sum = 0;
  for (size_t k = 0; k < bits.size(); ++k) {
    if (!std::isfinite(bits[k]) || bits[k] < 0) {
      return absl::InvalidArgumentError("bit counts must be non-negative");
    }
    if (!std::isfinite(qs[k]) || !(qs[k] > 0)) {
      return absl::InvalidArgumentError("steps must be positive");
    }
    bit_sum += bits[k];
    inv_sum += 1.0 / qs[k];
  }
  if (!(bit_sum > 0)) return absl::InvalidArgumentError("zero total bits");
  const double bit_mean = bit_sum / n, inv_mean = inv_sum / n;

  std::vector<double> x(bits.size()), y(bits.size());
  double sxy = 0, sxx = 0, y_mean = 0;
  for (size_t k = 0; k < bits.size(); ++k) {
    x[k] = (1.0 / qs[k]) / inv_mean;
    y[k] = bits[k] / bit_mean;
    sxy += x[k] * y[k];
    sxx += x[k] * x[k];
    y_mean += y[k];
  }
  y_mean /= n;

  LinearityReport report;
  report.n_blocks = static_cast<int>(bits.size());
  report.slope_through_origin = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (size_t k = 0; k < bits.size(); ++k) {
    const double e = y[k] - report.slope_through_origin * x[k];
    ss_res += e * e;
    ss_tot += (y[k] - y_mean) * (y[k] - y_mean);
  }
  report.r_squared =
      ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 0.0;
  return report;
}

BlockGridFile QpMapFile(const BlockAllocation& alloc) {
  BlockGridFile f{GridTag::kQpMap, alloc.grid.blocks_x, alloc.grid.blocks_y,
                  alloc.grid.block_size, alloc.base_qp, {}};
  f.values.reserve(alloc.blocks.size());
  for (const BlockRecord& b : alloc.blocks) f.values.push_back(b.dqp);
  return f;
}

BlockGridFile LambdaScaleFile(const BlockAllocation& alloc) {
  BlockGridFile f{GridTag::kLambdaScale, alloc.grid.blocks_x,
                  alloc.grid.blocks_y, alloc.grid.block_size, alloc.base_qp,
                  {}};
  f.values.reserve(alloc.blocks.size());
  for (const BlockRecord& b : alloc.blocks) f.values.push_back(b.lambda_scale);
  return f;
}

BlockGridFile BetaMapFile(const BetaMap& beta) {
  return BlockGridFile{GridTag::kBetaMap, beta.blocks_x, beta.blocks_y,
                       beta.block_size, 0, beta.values};
}

absl::StatusOr<BetaMap> BetaMapFromFile(const BlockGridFile& file) {
  if (file.tag != GridTag::kBetaMap) {
    return absl::InvalidArgumentError("not a BMAP file");
  }
  return BetaMap{file.blocks_x, file.blocks_y, file.block_size, file.values};
}

}  // namespace qsalloc
