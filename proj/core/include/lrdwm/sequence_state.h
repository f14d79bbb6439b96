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

#ifndef LRDWM_SEQUENCE_STATE_H_
#define LRDWM_SEQUENCE_STATE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

// Fixed-length token array being denoised: prompt positions are revealed from
// the start, every other position holds MASK until revealed exactly once.
class SequenceState {
 public:
  SequenceState(std::span<const TokenId> prompt, int generation_length,
                const Vocabulary& vocab);

  int length() const { return static_cast<int>(tokens_.size()); }
  int prompt_len() const { return prompt_len_; }
  int generation_length() const { return length() - prompt_len_; }
  TokenId mask_id() const { return mask_id_; }

  bool InRange(int pos) const { return pos >= 0 && pos < length(); }
  bool revealed(int pos) const { return revealed_[static_cast<std::size_t>(pos)] != 0; }
  TokenId token(int pos) const { return tokens_[static_cast<std::size_t>(pos)]; }

  // Finalizes a masked generation position. Throws kUsage for prompt or
  // already revealed positions and kDomain for non-real tokens.
  void Reveal(int pos, TokenId token);

  int masked_count() const { return masked_; }
  bool complete() const { return masked_ == 0; }

  std::span<const TokenId> tokens() const { return tokens_; }
  std::span<const TokenId> generated() const {
    return std::span<const TokenId>(tokens_).subspan(
        static_cast<std::size_t>(prompt_len_));
  }

  std::size_t ByteSize() const {
    return tokens_.size() * sizeof(TokenId) + revealed_.size();
  }

 private:
  std::vector<TokenId> tokens_;
  std::vector<unsigned char> revealed_;
  int prompt_len_;
  int masked_;
  int vocab_size_;
  TokenId mask_id_;
};

}  // namespace lrdwm

#endif  // LRDWM_SEQUENCE_STATE_H_
