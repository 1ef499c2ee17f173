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

#ifndef QSALLOC_CLI_COMMANDS_H_
#define QSALLOC_CLI_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

namespace qsalloc::cli {

inline constexpr char kToolVersion[] = "0.1.0";

// Stable exit-code taxonomy.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,          // unknown flag or bad flag value
  kExitBadInput = 2,       // unreadable or malformed input file
  kExitInference = 3,      // step-map inference failed
  kExitWrite = 4,          // output could not be written
  kExitGridMismatch = 5,   // beta map or QP map does not fit the frame
  kExitNoOverlap = 6,      // RD curves do not overlap
};

// Runs one command line; |args| excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace qsalloc::cli

#endif  // QSALLOC_CLI_COMMANDS_H_
