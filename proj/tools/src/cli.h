// Copyright 2026 The lrdwm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRDWM_TOOLS_CLI_H_
#define LRDWM_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace lrdwm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitError = 2;

// Runs the `lrdwm` command line with `args` (excluding the program name).
// Returns the process exit code: 0 on success, 1 on usage errors, 2 on
// data or configuration errors.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace lrdwm::cli

#endif  // LRDWM_TOOLS_CLI_H_
