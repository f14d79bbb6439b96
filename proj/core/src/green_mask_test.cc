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

#include "lrdwm/green_mask.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "lrdwm/errors.h"
#include "lrdwm/rng.h"
#include "oracles.h"

namespace lrdwm {
namespace {

constexpr WatermarkKey kKey{0x0123456789abcdefULL};
constexpr WatermarkKey kOtherKey{0xfedcba9876543210ULL};

TEST(GreenMaskTest, ExactBalance) {
  for (int v : {4, 7, 8, 64, 100, 1023, 4096}) {
    const Vocabulary vocab(v);
    for (TokenId c : {0, 1, v / 2, v - 1}) {
      EXPECT_EQ(ComputeGreenMask(c, kKey, vocab).Count(), v / 2)
          << "v=" << v << " c=" << c;
    }
  }
}

TEST(GreenMaskTest, GammaControlsSize) {
  const Vocabulary vocab(100);
  EXPECT_EQ(ComputeGreenMask(3, kKey, vocab, 0.25).Count(), 25);
  EXPECT_EQ(ComputeGreenMask(3, kKey, vocab, 0.7).Count(), 70);
  EXPECT_EQ(GreenCount(10, 0.33), 3);
  EXPECT_THROW(GreenCount(10, 0.0), Error);
  EXPECT_THROW(GreenCount(10, 1.0), Error);
}

TEST(GreenMaskTest, MatchesIndependentReimplementation) {
  for (int v : {8, 13, 64, 257}) {
    const Vocabulary vocab(v);
    for (TokenId c = 0; c < v; c += std::max(1, v / 16)) {
      const GreenMask mask = ComputeGreenMask(c, kKey, vocab);
      const std::vector<bool> ref = oracle::GreenSet(c, kKey.value, v);
      for (TokenId t = 0; t < v; ++t) {
        ASSERT_EQ(mask.Test(t), ref[static_cast<std::size_t>(t)])
            << "v=" << v << " c=" << c << " t=" << t;
      }
    }
  }
}

TEST(GreenMaskTest, DeterministicAndKeySeparated) {
  const Vocabulary vocab(512);
  int differing = 0;
  for (TokenId c = 0; c < 64; ++c) {
    EXPECT_EQ(ComputeGreenMask(c, kKey, vocab), ComputeGreenMask(c, kKey, vocab));
    if (ComputeGreenMask(c, kKey, vocab) != ComputeGreenMask(c, kOtherKey, vocab)) {
      ++differing;
    }
  }
  EXPECT_EQ(differing, 64);
}

TEST(GreenMaskTest, OverlapBetweenKeysIsAboutAQuarter) {
  // Independent halves intersect in |V|/4 tokens on average.
  const Vocabulary vocab(1024);
  double total = 0.0;
  const int contexts = 200;
  for (TokenId c = 0; c < contexts; ++c) {
    const GreenMask a = ComputeGreenMask(c, kKey, vocab);
    const GreenMask b = ComputeGreenMask(c, kOtherKey, vocab);
    int both = 0;
    for (TokenId t = 0; t < 1024; ++t) both += a.Test(t) && b.Test(t);
    total += both;
  }
  // Hypergeometric: mean 256, sd 8 per context.
  EXPECT_NEAR(total / contexts, 256.0, 3.0 * 8.0 / std::sqrt(contexts));
}

TEST(GreenMaskTest, TokenMarginalsAreUniform) {
  // Over all contexts, each token is green in about half of them.
  const int v = 256;
  const Vocabulary vocab(v);
  std::vector<int> hits(v, 0);
  for (TokenId c = 0; c < v; ++c) {
    const GreenMask mask = ComputeGreenMask(c, kKey, vocab);
    for (TokenId t = 0; t < v; ++t) hits[t] += mask.Test(t);
  }
  const double sd = std::sqrt(v * 0.25);
  int outside = 0;
  for (int h : hits) outside += std::abs(h - v / 2.0) > 3.0 * sd;
  // About 0.3% of tokens may fall outside a 3-sigma band.
  EXPECT_LE(outside, 4);
}

TEST(GreenMaskTest, RejectsNonRealContext) {
  const Vocabulary vocab(16);
  EXPECT_THROW(ComputeGreenMask(-1, kKey, vocab), Error);
  EXPECT_THROW(ComputeGreenMask(16, kKey, vocab), Error);
  try {
    ComputeGreenMask(vocab.mask_id(), kKey, vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(GreenMaskTest, EmptyMask) {
  const Vocabulary vocab(40);
  const GreenMask empty = EmptyMask(vocab);
  EXPECT_TRUE(empty.IsEmpty());
  EXPECT_EQ(empty.size(), 40);
  for (TokenId t = 0; t < 40; ++t) EXPECT_FALSE(IsGreen(empty, t));
  EXPECT_THROW(empty.Contains(40), Error);
}

TEST(GreenMaskTest, HexRoundTrip) {
  for (int v : {4, 9, 64, 65, 1000}) {
    const Vocabulary vocab(v);
    for (TokenId c = 0; c < std::min(v, 20); ++c) {
      const GreenMask mask = ComputeGreenMask(c, kKey, vocab);
      const std::string hex = mask.ToHex();
      EXPECT_EQ(hex.size(), 2 * static_cast<std::size_t>((v + 7) / 8));
      EXPECT_EQ(GreenMask::FromHex(hex, v), mask);
    }
  }
  EXPECT_THROW(GreenMask::FromHex("zz", 8), Error);
  EXPECT_THROW(GreenMask::FromHex("ff", 4), Error);
  EXPECT_THROW(GreenMask::FromHex("f", 8), Error);
}

TEST(GreenMaskTest, HexLayoutIsLsbFirst) {
  const Vocabulary vocab(16);
  const GreenMask mask = GreenMask::FromHex("0180", 16);
  EXPECT_TRUE(mask.Test(0));
  EXPECT_TRUE(mask.Test(15));
  EXPECT_EQ(mask.Count(), 2);
}

TEST(GreenMaskTest, SeedConstructionIsPinned) {
  // Known-answer values guard the documented hash construction.
  EXPECT_EQ(Mix64(0), 0ULL);
  EXPECT_EQ(SplitMix64(0).Next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(MaskSeed(WatermarkKey{0}, 0), Mix64(Mix64(kGoldenGamma)));
}

TEST(GreenListTableTest, MatchesOnDemandMasks) {
  const Vocabulary vocab(70);
  const GreenListTable table(kKey, vocab, 0.5);
  for (TokenId c = 0; c < 70; ++c) {
    EXPECT_EQ(table.ForContext(c), ComputeGreenMask(c, kKey, vocab));
  }
  EXPECT_THROW(table.ForContext(70), Error);
  EXPECT_GE(table.ByteSize(), 70u * 16u);
}

TEST(WatermarkKeyTest, HexParsing) {
  EXPECT_EQ(WatermarkKey::FromHex("0123456789ABCDEF").value, kKey.value);
  EXPECT_EQ(kKey.ToHex(), "0123456789abcdef");
  EXPECT_THROW(WatermarkKey::FromHex("123"), Error);
  EXPECT_THROW(WatermarkKey::FromHex("0123456789abcdeg"), Error);
}

}  // namespace
}  // namespace lrdwm
