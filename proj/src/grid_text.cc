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

#include "qsalloc/grid_text.h"

#include <cctype>
#include <charconv>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "qsalloc/file_util.h"

namespace qsalloc {

std::string_view GridTagName(GridTag tag) {
  switch (tag) {
    case GridTag::kQpMap:
      return "QPMAP";
    case GridTag::kLambdaScale:
      return "LSCALE";
    case GridTag::kBetaMap:
      return "BMAP";
    case GridTag::kBits:
      return "BITS";
  }
  return "?";
}

bool GridTagIsInteger(GridTag tag) {
  return tag == GridTag::kQpMap || tag == GridTag::kBits;
}

std::string_view TokenStream::Next() {
  while (pos_ < text_.size() &&
         std::isspace(static_cast<unsigned char>(text_[pos_]))) {
    ++pos_;
  }
  const size_t start = pos_;
  while (pos_ < text_.size() &&
         !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
    ++pos_;
  }
  return text_.substr(start, pos_ - start);
}

bool TokenStream::AtEnd() {
  while (pos_ < text_.size() &&
         std::isspace(static_cast<unsigned char>(text_[pos_]))) {
    ++pos_;
  }
  return pos_ >= text_.size();
}

std::optional<double> TokenStream::NextReal() {
  const std::string_view tok = Next();
  if (tok.empty()) return std::nullopt;
  double v = 0;
  const char* first = tok.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    return std::nullopt;
  }
  return v;
}

std::optional<int64_t> TokenStream::NextInt() {
  const std::string_view tok = Next();
  if (tok.empty()) return std::nullopt;
  int64_t v = 0;
  const char* first = tok.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    return std::nullopt;
  }
  return v;
}

std::string EncodeBlockGridFile(const BlockGridFile& file) {
  std::string out = absl::StrCat(std::string(GridTagName(file.tag)), " 1\n", file.blocks_x,
                                 " ", file.blocks_y, " ", file.block_size, " ",
                                 file.base_qp, "\n");
  const bool integer = GridTagIsInteger(file.tag);
  for (int y = 0; y < file.blocks_y; ++y) {
    for (int x = 0; x < file.blocks_x; ++x) {
      const double v = file.values[size_t(y) * file.blocks_x + x];
      if (x > 0) out += ' ';
      if (integer) {
        absl::StrAppend(&out, static_cast<int64_t>(std::llround(v)));
      } else {
        out += FormatReal(v);
      }
    }
    out += '\n';
  }
  return out;
}

absl::StatusOr<BlockGridFile> DecodeBlockGridFile(std::string_view text,
                                                  GridTag expected) {
  const std::string name(GridTagName(expected));
  TokenStream tokens(text);
  const std::string tag(tokens.Next());
  if (tag != name) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected tag ", name, ", found '", tag, "'"));
  }
  const auto version = tokens.NextInt();
  if (!version || *version != 1) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, ": unsupported version"));
  }
  BlockGridFile file;
  file.tag = expected;
  const auto bx = tokens.NextInt();
  const auto by = tokens.NextInt();
  const auto bs = tokens.NextInt();
  const auto qp = tokens.NextInt();
  if (!bx || !by || !bs || !qp || *bx < 1 || *by < 1 || *bs < 1 ||
      *bx > (1 << 20) || *by > (1 << 20) || *bs > (1 << 20) ||
      *qp < -(1 << 20) || *qp > (1 << 20)) {
    return absl::InvalidArgumentError(absl::StrCat(name, ": malformed header"));
  }
  file.blocks_x = static_cast<int>(*bx);
  file.blocks_y = static_cast<int>(*by);
  file.block_size = static_cast<int>(*bs);
  file.base_qp = static_cast<int>(*qp);
  const size_t count = size_t(file.blocks_x) * file.blocks_y;
  file.values.reserve(count);
  const bool integer = GridTagIsInteger(expected);
  for (size_t i = 0; i < count; ++i) {
    if (integer) {
      const auto v = tokens.NextInt();
      if (!v) {
        return absl::InvalidArgumentError(
            absl::StrCat(name, ": expected ", count, " integer values"));
      }
      file.values.push_back(static_cast<double>(*v));
    } else {
      const auto v = tokens.NextReal();
      if (!v || !std::isfinite(*v)) {
        return absl::InvalidArgumentError(
            absl::StrCat(name, ": expected ", count, " finite values"));
      }
      file.values.push_back(*v);
    }
  }
  if (!tokens.AtEnd()) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, ": trailing data after ", count, " values"));
  }
  return file;
}

absl::Status WriteBlockGridFile(const BlockGridFile& file,
                                const std::string& path) {
  return WriteFileAtomic(path, EncodeBlockGridFile(file));
}

absl::StatusOr<BlockGridFile> ReadBlockGridFile(const std::string& path,
                                                GridTag expected) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<BlockGridFile> file = DecodeBlockGridFile(*text, expected);
  if (!file.ok()) {
    return absl::Status(file.status().code(),
                        absl::StrCat(path, ": ", file.status().message()));
  }
  return file;
}

}  // namespace qsalloc
