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

#ifndef LRDWM_VOCABULARY_H_
#define LRDWM_VOCABULARY_H_

#include <optional>
#include <string>
#include <vector>

#include "lrdwm/types.h"

namespace lrdwm {

// Dense token ids [0, size) are real (watermarkable) tokens. Everything else,
// including the MASK sentinel, is special and never green.
class Vocabulary {
 public:
  // mask_id defaults to size.
  explicit Vocabulary(int size, std::optional<TokenId> mask_id = std::nullopt);

  int size() const { return size_; }
  TokenId mask_id() const { return mask_id_; }

  bool IsReal(TokenId token) const { return token >= 0 && token < size_; }

  // Throws kDomain unless IsReal(token).
  void CheckReal(TokenId token) const;

  void set_surface_forms(std::vector<std::string> forms);
  // Surface form if a table was supplied, otherwise the decimal id.
  std::string Surface(TokenId token) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.size_ == b.size_ && a.mask_id_ == b.mask_id_;
  }

 private:
  int size_;
  TokenId mask_id_;
  std::vector<std::string> surface_;
};

}  // namespace lrdwm

#endif  // LRDWM_VOCABULARY_H_
