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

#ifndef LRDWM_ERRORS_H_
#define LRDWM_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrdwm {

// Failure categories. The CLI maps kUsage to exit code 1 and everything
// else to exit code 2.
enum class ErrorKind {
  kDomain,    // token id outside the vocabulary
  kConfig,    // invalid parameters (gamma, delta, schedule sizes, ...)
  kUsage,     // API misuse (revealing a revealed position, ...)
  kData,      // malformed or empty input data
  kInput,     // sequence too short for the requested operation
  kResource,  // request exceeds a configured resource cap
  kAttack,    // attack would leave too little text
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Fail(ErrorKind kind, const std::string& message);

}  // namespace lrdwm

#endif  // LRDWM_ERRORS_H_
