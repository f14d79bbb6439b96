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

#ifndef LRDWM_TYPES_H_
#define LRDWM_TYPES_H_

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lrdwm {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;
using Corpus = std::vector<TokenSequence>;

// A 64-bit watermark secret. Textual form is exactly 16 hex digits.
struct WatermarkKey {
  std::uint64_t value = 0;

  static WatermarkKey FromHex(std::string_view hex);
  std::string ToHex() const;

  friend auto operator<=>(const WatermarkKey&, const WatermarkKey&) = default;
};

}  // namespace lrdwm

#endif  // LRDWM_TYPES_H_
