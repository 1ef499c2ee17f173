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

#include "qsalloc/file_util.h"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <system_error>

#include "absl/strings/str_cat.h"

namespace qsalloc {

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat(path, ": cannot open"));
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) return absl::DataLossError(absl::StrCat(path, ": read error"));
  return data;
}

namespace {

std::string TempPathFor(const std::string& path) {
  return absl::StrCat(path, ".tmp", ::getpid());
}

absl::Status WriteTemp(const std::string& path, std::string_view contents) {
  const std::string tmp = TempPathFor(path);
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat(path, ": cannot open for writing"));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) {
    out.close();
    std::remove(tmp.c_str());
    return absl::DataLossError(absl::StrCat(path, ": write failed"));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status WriteFileAtomic(const std::string& path,
                             std::string_view contents) {
  return WriteFilesAtomic({{path, std::string(contents)}});
}

absl::Status WriteFilesAtomic(
    const std::vector<std::pair<std::string, std::string>>& files) {
  for (size_t i = 0; i < files.size(); ++i) {
    if (absl::Status s = WriteTemp(files[i].first, files[i].second); !s.ok()) {
      for (size_t j = 0; j < i; ++j) {
        std::remove(TempPathFor(files[j].first).c_str());
      }
      return s;
    }
  }
  for (size_t i = 0; i < files.size(); ++i) {
    const std::string tmp = TempPathFor(files[i].first);
    if (std::rename(tmp.c_str(), files[i].first.c_str()) != 0) {
      for (size_t j = i; j < files.size(); ++j) {
        std::remove(TempPathFor(files[j].first).c_str());
      }
      return absl::PermissionDeniedError(
          absl::StrCat(files[i].first, ": cannot move into place"));
    }
  }
  return absl::OkStatus();
}

std::string FormatReal(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  std::string text(buf, res.ptr);
  if (text.find_first_of(".en") == std::string::npos) text += ".0";
  return text;
}

}  // namespace qsalloc
