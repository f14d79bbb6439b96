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

#ifndef LRDWM_LOG_H_
#define LRDWM_LOG_H_

#include <functional>
#include <string_view>

namespace lrdwm {

using WarningSink = std::function<void(std::string_view)>;

// Library warnings go to stderr unless a sink is installed. Returns the
// previous sink. Passing nullptr restores the default.
WarningSink SetWarningSink(WarningSink sink);

void Warn(std::string_view message);

}  // namespace lrdwm

#endif  // LRDWM_LOG_H_
