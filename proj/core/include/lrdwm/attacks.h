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

#ifndef LRDWM_ATTACKS_H_
#define LRDWM_ATTACKS_H_

#include <cstdint>
#include <span>
#include <string_view>

#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

enum class AttackKind { kDelete, kSubstitute };

std::string_view AttackKindName(AttackKind kind);
AttackKind ParseAttackKind(std::string_view name);

// Removes floor(p * L) positions chosen uniformly without replacement.
// Throws kAttack for p outside [0, 1) or a result shorter than 3 tokens.
TokenSequence DeleteTokens(std::span<const TokenId> tokens, double p,
                           std::uint64_t seed);

// Replaces floor(p * L) positions, chosen uniformly without replacement, with
// a token drawn uniformly from the real vocabulary minus the original.
// Throws kAttack for p outside [0, 1).
TokenSequence SubstituteTokens(std::span<const TokenId> tokens, double p,
                               const Vocabulary& vocab, std::uint64_t seed);

TokenSequence ApplyAttack(AttackKind kind, std::span<const TokenId> tokens,
                          double p, const Vocabulary& vocab,
                          std::uint64_t seed);

}  // namespace lrdwm

#endif  // LRDWM_ATTACKS_H_
