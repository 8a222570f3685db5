// Copyright 2026 The vforensics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end. RunCli is the whole program; main() only forwards
// to it so tests can drive commands in-process.

#ifndef VF_TOOLS_CLI_H_
#define VF_TOOLS_CLI_H_

#include <ostream>

#include "vf/common.h"

namespace vf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoMatch = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

// Library errors map to 10 + the error code ordinal, so every ErrorCode gets
// its own exit status.
int ExitCodeFor(ErrorCode code);

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int RunCli(int argc, const char* const* argv);

}  // namespace vf::cli

#endif  // VF_TOOLS_CLI_H_
