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

#include "lrdwm/vocabulary.h"

#include <utility>

#include "lrdwm/errors.h"

namespace lrdwm {

Vocabulary::Vocabulary(int size, std::optional<TokenId> mask_id)
    : size_(size), mask_id_(mask_id.value_or(size)) {
  if (size_ < 4) {
    Fail(ErrorKind::kConfig,
         "vocabulary needs at least 4 tokens, got " + std::to_string(size_));
  }
  if (mask_id_ >= 0 && mask_id_ < size_) {
    Fail(ErrorKind::kConfig, "mask id " + std::to_string(mask_id_) +
                                 " collides with a real token id");
  }
}

void Vocabulary::CheckReal(TokenId token) const {
  if (!IsReal(token)) {
    Fail(ErrorKind::kDomain, "token " + std::to_string(token) +
                                 " outside vocabulary [0, " +
                                 std::to_string(size_) + ")");
  }
}

void Vocabulary::set_surface_forms(std::vector<std::string> forms) {
  if (static_cast<int>(forms.size()) != size_) {
    Fail(ErrorKind::kData, "surface table has " +
                               std::to_string(forms.size()) +
                               " entries, vocabulary has " +
                               std::to_string(size_));
  }
  surface_ = std::move(forms);
}

std::string Vocabulary::Surface(TokenId token) const {
  if (token == mask_id_) return "<mask>";
  if (IsReal(token) && !surface_.empty()) return surface_[token];
  return std::to_string(token);
}

}  // namespace lrdwm
