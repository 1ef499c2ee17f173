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

// Text layout shared by the per-block sidecar files:
//
//   TAG 1
//   BLOCKS_X BLOCKS_Y BLOCK_SIZE BASE_QP
//   BLOCKS_Y rows of BLOCKS_X values
//
// QPMAP and BITS carry integers; LSCALE and BMAP carry reals.

#ifndef QSALLOC_GRID_TEXT_H_
#define QSALLOC_GRID_TEXT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace qsalloc {

enum class GridTag { kQpMap, kLambdaScale, kBetaMap, kBits };

std::string_view GridTagName(GridTag tag);
bool GridTagIsInteger(GridTag tag);

struct BlockGridFile {
  GridTag tag = GridTag::kQpMap;
  int blocks_x = 0;
  int blocks_y = 0;
  int block_size = 0;
  int base_qp = 0;
  std::vector<double> values;  // row-major, blocks_x * blocks_y

  bool operator==(const BlockGridFile&) const = default;
};

std::string EncodeBlockGridFile(const BlockGridFile& file);
absl::StatusOr<BlockGridFile> DecodeBlockGridFile(std::string_view text,
                                                  GridTag expected);

absl::Status WriteBlockGridFile(const BlockGridFile& file,
                                const std::string& path);
absl::StatusOr<BlockGridFile> ReadBlockGridFile(const std::string& path,
                                                GridTag expected);

// Whitespace tokenizer used by the text formats.
class TokenStream {
 public:
  explicit TokenStream(std::string_view text) : text_(text) {}

  // Empty view at end of input.
  std::string_view Next();
  bool AtEnd();

  std::optional<double> NextReal();
  std::optional<int64_t> NextInt();

 private:
  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace qsalloc

#endif  // QSALLOC_GRID_TEXT_H_
