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

#include "lrdwm/attacks.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lrdwm/errors.h"
#include "lrdwm/rng.h"

namespace lrdwm {
namespace {

int AttackCount(std::size_t length, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    Fail(ErrorKind::kAttack,
         "attack rate must lie in [0, 1), got " + std::to_string(p));
  }
  return static_cast<int>(std::floor(p * static_cast<double>(length) + 1e-9));
}

// First `count` entries of a uniform shuffle of [0, length).
std::vector<int> ChoosePositions(std::size_t length, int count, Rng& rng) {
  std::vector<int> idx(length);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   rng.Below(length - static_cast<std::size_t>(i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

std::string_view AttackKindName(AttackKind kind) {
  return kind == AttackKind::kDelete ? "delete" : "substitute";
}

AttackKind ParseAttackKind(std::string_view name) {
  if (name == "delete" || name == "deletion") return AttackKind::kDelete;
  if (name == "substitute" || name == "substitution") {
    return AttackKind::kSubstitute;
  }
  Fail(ErrorKind::kConfig, "unknown attack '" + std::string(name) +
                               "' (expected delete or substitute)");
}

TokenSequence DeleteTokens(std::span<const TokenId> tokens, double p,
                           std::uint64_t seed) {
  const int count = AttackCount(tokens.size(), p);
  if (static_cast<int>(tokens.size()) - count < 3) {
    Fail(ErrorKind::kAttack,
         "deleting " + std::to_string(count) + " of " +
             std::to_string(tokens.size()) +
             " tokens leaves fewer than 3 tokens");
  }
  Rng rng(DeriveSeed(seed, "attack-delete"));
  std::vector<unsigned char> drop(tokens.size(), 0);
  for (int pos : ChoosePositions(tokens.size(), count, rng)) {
    drop[static_cast<std::size_t>(pos)] = 1;
  }
  TokenSequence out;
  out.reserve(tokens.size() - static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!drop[i]) out.push_back(tokens[i]);
  }
  return out;
}

TokenSequence SubstituteTokens(std::span<const TokenId> tokens, double p,
                               const Vocabulary& vocab, std::uint64_t seed) {
  const int count = AttackCount(tokens.size(), p);
  Rng rng(DeriveSeed(seed, "attack-substitute"));
  TokenSequence out(tokens.begin(), tokens.end());
  const auto v = static_cast<std::uint64_t>(vocab.size());
  for (int pos : ChoosePositions(tokens.size(), count, rng)) {
    const TokenId original = out[static_cast<std::size_t>(pos)];
    TokenId repl;
    if (vocab.IsReal(original)) {
      // Uniform over the other |V| - 1 real tokens.
      repl = static_cast<TokenId>(rng.Below(v - 1));
      if (repl >= original) ++repl;
    } else {
      repl = static_cast<TokenId>(rng.Below(v));
    }
    out[static_cast<std::size_t>(pos)] = repl;
  }
  return out;
}

TokenSequence ApplyAttack(AttackKind kind, std::span<const TokenId> tokens,
                          double p, const Vocabulary& vocab,
                          std::uint64_t seed) {
  return kind == AttackKind::kDelete ? DeleteTokens(tokens, p, seed)
                                     : SubstituteTokens(tokens, p, vocab, seed);
}

}  // namespace lrdwm
