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

#include "lrdwm/sequence_state.h"

#include <algorithm>
#include <string>

#include "lrdwm/errors.h"

namespace lrdwm {

SequenceState::SequenceState(std::span<const TokenId> prompt,
                             int generation_length, const Vocabulary& vocab)
    : prompt_len_(static_cast<int>(prompt.size())),
      masked_(generation_length),
      vocab_size_(vocab.size()),
      mask_id_(vocab.mask_id()) {
  if (generation_length < 0) {
    Fail(ErrorKind::kConfig, "negative generation length");
  }
  tokens_.assign(prompt.begin(), prompt.end());
  for (TokenId t : prompt) {
    if (t == mask_id_) Fail(ErrorKind::kData, "prompt contains the MASK id");
  }
  tokens_.resize(prompt.size() + static_cast<std::size_t>(generation_length),
                 mask_id_);
  revealed_.assign(tokens_.size(), 0);
  std::fill(revealed_.begin(), revealed_.begin() + prompt_len_, 1);
}

void SequenceState::Reveal(int pos, TokenId token) {
  if (!InRange(pos)) {
    Fail(ErrorKind::kUsage, "position " + std::to_string(pos) +
                                " outside sequence of length " +
                                std::to_string(length()));
  }
  if (pos < prompt_len_) {
    Fail(ErrorKind::kUsage,
         "position " + std::to_string(pos) + " belongs to the prompt");
  }
  if (revealed(pos)) {
    Fail(ErrorKind::kUsage,
         "position " + std::to_string(pos) + " is already revealed");
  }
  if (token < 0 || token >= vocab_size_) {
    Fail(ErrorKind::kDomain,
         "cannot reveal non-real token " + std::to_string(token));
  }
  tokens_[static_cast<std::size_t>(pos)] = token;
  revealed_[static_cast<std::size_t>(pos)] = 1;
  --masked_;
}

}  // namespace lrdwm
