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

#ifndef QSALLOC_FILE_UTIL_H_
#define QSALLOC_FILE_UTIL_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace qsalloc {

// Reads the whole file. Returns NotFound when the path cannot be opened.
absl::StatusOr<std::string> ReadFile(const std::string& path);

// Writes |contents| to a temporary sibling of |path| and renames it into
// place, so readers never observe a partially written file.
absl::Status WriteFileAtomic(const std::string& path,
                             std::string_view contents);

// Stages every (path, contents) pair to a temporary file before renaming any
// of them, so a failure leaves none of the targets modified.
absl::Status WriteFilesAtomic(
    const std::vector<std::pair<std::string, std::string>>& files);

// Shortest decimal text that parses back to exactly |value|. Always carries a
// decimal point or exponent ("1.0", "2.5e-07"); infinities print as "inf" /
// "-inf" and NaN as "nan".
std::string FormatReal(double value);

}  // namespace qsalloc

#endif  // QSALLOC_FILE_UTIL_H_
