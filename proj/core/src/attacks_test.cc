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

#include <cmath>
#include <cstdlib>
#include <vector>

#include "gtest/gtest.h"
#include "lrdwm/detector.h"
#include "lrdwm/errors.h"
#include "lrdwm/rng.h"

namespace lrdwm {
namespace {

TokenSequence Iota(int n) {
  TokenSequence s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[i] = i % 50;
  return s;
}

bool IsSubsequence(const TokenSequence& sub, const TokenSequence& full) {
  std::size_t j = 0;
  for (TokenId t : full) {
    if (j < sub.size() && sub[j] == t) ++j;
  }
  return j == sub.size();
}

TEST(AttackTest, ZeroRateIsIdentity) {
  const Vocabulary vocab(50);
  const TokenSequence seq = Iota(40);
  EXPECT_EQ(DeleteTokens(seq, 0.0, 1), seq);
  EXPECT_EQ(SubstituteTokens(seq, 0.0, vocab, 1), seq);
}

TEST(AttackTest, DeletionKeepsOrderAndCount) {
  TokenSequence seq(100);
  for (int i = 0; i < 100; ++i) seq[i] = i;
  for (double p : {0.1, 0.3, 0.5, 0.97}) {
    const TokenSequence out = DeleteTokens(seq, p, 7);
    EXPECT_EQ(out.size(), 100u - static_cast<std::size_t>(std::floor(p * 100 + 1e-9)));
    EXPECT_TRUE(IsSubsequence(out, seq));
  }
}

TEST(AttackTest, SubstitutionChangesExactlyTheChosenTokens) {
  const Vocabulary vocab(50);
  const TokenSequence seq = Iota(200);
  for (double p : {0.1, 0.5, 0.9}) {
    const TokenSequence out = SubstituteTokens(seq, p, vocab, 3);
    ASSERT_EQ(out.size(), seq.size());
    int changed = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      changed += out[i] != seq[i];
      EXPECT_TRUE(vocab.IsReal(out[i]));
    }
    EXPECT_EQ(changed, static_cast<int>(std::floor(p * 200 + 1e-9)));
  }
}

TEST(AttackTest, ReplacementsAreUniformOverOtherTokens) {
  const Vocabulary vocab(5);
  const TokenSequence seq(4000, 2);
  const TokenSequence out = SubstituteTokens(seq, 0.999, vocab, 9);
  std::vector<int> hist(5, 0);
  for (TokenId t : out) ++hist[t];
  EXPECT_LE(hist[2], 4);
  for (TokenId t : {0, 1, 3, 4}) EXPECT_NEAR(hist[t], 1000, 4 * std::sqrt(1000 * 0.75));
}

TEST(AttackTest, DeterministicPerSeed) {
  const Vocabulary vocab(50);
  const TokenSequence seq = Iota(80);
  EXPECT_EQ(DeleteTokens(seq, 0.3, 11), DeleteTokens(seq, 0.3, 11));
  EXPECT_NE(DeleteTokens(seq, 0.3, 11), DeleteTokens(seq, 0.3, 12));
  EXPECT_EQ(ApplyAttack(AttackKind::kSubstitute, seq, 0.3, vocab, 11),
            SubstituteTokens(seq, 0.3, vocab, 11));
}

TEST(AttackTest, Errors) {
  const Vocabulary vocab(50);
  const TokenSequence seq = Iota(10);
  const auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kUsage;
  };
  EXPECT_EQ(kind_of([&] { DeleteTokens(seq, 1.0, 1); }), ErrorKind::kAttack);
  EXPECT_EQ(kind_of([&] { DeleteTokens(seq, -0.1, 1); }), ErrorKind::kAttack);
  EXPECT_EQ(kind_of([&] { SubstituteTokens(seq, 1.5, vocab, 1); }), ErrorKind::kAttack);
  EXPECT_EQ(kind_of([&] { DeleteTokens(seq, 0.8, 1); }), ErrorKind::kAttack);
  EXPECT_EQ(kind_of([&] { ParseAttackKind("paraphrase"); }), ErrorKind::kConfig);
  EXPECT_EQ(ParseAttackKind("deletion"), AttackKind::kDelete);
  EXPECT_EQ(AttackKindName(AttackKind::kSubstitute), "substitute");
}

TEST(AttackTest, SingleEditMovesScoreSumByAtMostFour) {
  // A substitution touches three scores; a deletion removes one and changes
  // one indicator on each side.
  Rng rng(4);
  const Vocabulary vocab(64);
  InjectorConfig keys;
  keys.key_left = WatermarkKey{7};
  keys.key_right = WatermarkKey{8};
  const TokenScorer scorer(keys, vocab, true);
  TokenSequence seq(60);
  for (TokenId& t : seq) t = static_cast<TokenId>(rng.Below(64));
  const long long base = scorer.Summarize(seq).sum;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const TokenSequence sub = SubstituteTokens(seq, 1.0 / 60, vocab, s);
    EXPECT_LE(std::llabs(scorer.Summarize(sub).sum - base), 4);
    const TokenSequence del = DeleteTokens(seq, 1.0 / 60, s);
    EXPECT_LE(std::llabs(scorer.Summarize(del).sum - base), 3);
  }
}

}  // namespace
}  // namespace lrdwm
