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

#include "lrdwm/baselines.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "lrdwm/base_model.h"
#include "lrdwm/corpus.h"
#include "lrdwm/decoder.h"
#include "lrdwm/errors.h"
#include "lrdwm/rng.h"
#include "oracles.h"

namespace lrdwm {
namespace {

constexpr WatermarkKey kKey{0x243f6a8885a308d3ULL};

TEST(InverseTableTest, MatchesForwardListsCellByCell) {
  for (int v : {8, 100, 256}) {
    const Vocabulary vocab(v);
    const InverseTable table(kKey, vocab);
    std::vector<std::vector<bool>> forward;
    for (int c = 0; c < v; ++c) forward.push_back(oracle::GreenSet(c, kKey.value, v));
    for (int u = 0; u < v; ++u) {
      for (int c = 0; c < v; ++c) {
        ASSERT_EQ(table.Contains(u, c), forward[c][u]) << "v=" << v << " u=" << u;
      }
    }
  }
}

TEST(InverseTableTest, RowSizesConcentrateAroundHalf) {
  const int v = 1024;
  const InverseTable table(kKey, Vocabulary(v));
  long long total = 0;
  int outside = 0;
  const double sd = std::sqrt(v * 0.25);
  for (TokenId u = 0; u < v; ++u) {
    const int n = table.RowCount(u);
    total += n;
    outside += std::abs(n - v / 2.0) > 3.0 * sd;
  }
  // Every forward list has exactly |V|/2 members.
  EXPECT_EQ(total, static_cast<long long>(v) * (v / 2));
  EXPECT_LE(outside, 8);
}

TEST(InverseTableTest, SizeAndCap) {
  EXPECT_EQ(InverseTableBytes(64), 64u * 8u);
  EXPECT_EQ(InverseTableBytes(4096), 4096u * 64u * 8u);
  EXPECT_EQ(InverseTableBytes(kMaxInverseTableVocab), std::size_t{32} << 20);
  const InverseTable table(kKey, Vocabulary(130));
  EXPECT_GE(table.ByteSize(), InverseTableBytes(130));
  try {
    InverseTable too_big(kKey, Vocabulary(kMaxInverseTableVocab + 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kResource);
  }
}

TEST(LeftOnlyInjectorTest, GreenMassFollowsClosedForm) {
  // Flat logits: mass on the green list is gamma e^d / (gamma e^d + 1 - gamma).
  const Vocabulary vocab(200);
  SequenceState state({}, 3, vocab);
  state.Reveal(0, 17);
  state.Reveal(2, 33);
  const std::vector<double> raw(200, 0.0);
  for (double gamma : {0.25, 0.5}) {
    for (double delta : {0.5, 2.0, 6.0}) {
      const LeftOnlyInjector injector(kKey, delta, vocab, gamma);
      std::vector<double> out(200);
      const BiasReport report = injector.Apply(raw, state, 1, out);
      EXPECT_TRUE(report.left_active);
      EXPECT_FALSE(report.right_active);
      const GreenMask mask = ComputeGreenMask(17, kKey, vocab, gamma);
      double green = 0.0;
      double all = 0.0;
      for (TokenId t = 0; t < 200; ++t) {
        all += std::exp(out[t]);
        if (mask.Test(t)) green += std::exp(out[t]);
      }
      const double g = GreenCount(200, gamma) / 200.0;
      EXPECT_NEAR(green / all, g * std::exp(delta) / (g * std::exp(delta) + 1 - g), 1e-12);
    }
  }
}

TEST(LeftOnlyInjectorTest, IgnoresRightNeighbor) {
  const Vocabulary vocab(32);
  SequenceState state({}, 3, vocab);
  state.Reveal(2, 4);
  const std::vector<double> raw(32, 0.5);
  std::vector<double> out(32);
  const LeftOnlyInjector injector(kKey, 3.0, vocab);
  EXPECT_FALSE(injector.Apply(raw, state, 1, out).left_active);
  EXPECT_EQ(out, raw);
  EXPECT_EQ(injector.name(), "left");
}

TEST(DmarkStyleInjectorTest, RightNeighborBoostsPredecessorCandidates) {
  const int v = 64;
  const Vocabulary vocab(v);
  const InverseTable table(kKey, vocab);
  const DmarkStyleInjector injector(kKey, 2.0, table, vocab);
  std::vector<double> raw(v);
  for (int i = 0; i < v; ++i) raw[i] = 0.1 * i;
  for (TokenId right = 0; right < v; ++right) {
    SequenceState state({}, 3, vocab);
    state.Reveal(0, 5);
    state.Reveal(2, right);
    std::vector<double> out(v);
    const BiasReport report = injector.Apply(raw, state, 1, out);
    EXPECT_TRUE(report.right_active);
    EXPECT_FALSE(report.left_active);
    for (TokenId c = 0; c < v; ++c) {
      const bool makes_right_green = oracle::GreenSet(c, kKey.value, v)[right];
      ASSERT_DOUBLE_EQ(out[c] - raw[c], makes_right_green ? 2.0 : 0.0);
    }
  }
}

TEST(DmarkStyleInjectorTest, IdentityWithoutRevealedRightNeighbor) {
  const Vocabulary vocab(16);
  const InverseTable table(kKey, vocab);
  const DmarkStyleInjector injector(kKey, 5.0, table, vocab);
  SequenceState state({}, 4, vocab);
  state.Reveal(0, 1);
  std::vector<double> raw(16, -2.0);
  std::vector<double> out(16);
  const BiasReport report = injector.Apply(raw, state, 1, out);
  EXPECT_EQ(out, raw);
  EXPECT_FALSE(report.left_active || report.right_active);
  EXPECT_FALSE(injector.Apply(raw, state, 3, out).right_active);
}

TEST(DmarkStyleInjectorTest, OptionalLeftBias) {
  const Vocabulary vocab(16);
  const InverseTable table(kKey, vocab);
  const DmarkStyleInjector injector(kKey, 1.0, table, vocab, kDefaultGamma, true);
  SequenceState state({}, 3, vocab);
  state.Reveal(0, 3);
  const std::vector<double> raw(16, 0.0);
  std::vector<double> out(16);
  EXPECT_TRUE(injector.Apply(raw, state, 1, out).left_active);
  const GreenMask mask = ComputeGreenMask(3, kKey, vocab);
  for (TokenId t = 0; t < 16; ++t) EXPECT_EQ(out[t], mask.Test(t) ? 1.0 : 0.0);
}

TEST(DmarkStyleInjectorTest, RejectsForeignTable) {
  const Vocabulary vocab(16);
  const InverseTable table(kKey, vocab);
  EXPECT_THROW(DmarkStyleInjector(WatermarkKey{1}, 1.0, table, vocab), Error);
  EXPECT_THROW(DmarkStyleInjector(kKey, 1.0, table, Vocabulary(32)), Error);
}

TEST(KgwTest, CountsMatchOracle) {
  Rng rng(5);
  const int v = 90;
  const Vocabulary vocab(v);
  TokenSequence seq(120);
  for (TokenId& t : seq) t = static_cast<TokenId>(rng.Below(v));
  int green = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    green += oracle::GreenSet(seq[i - 1], kKey.value, v)[seq[i]];
  }
  const KgwResult r = KgwDetect(seq, kKey, vocab);
  EXPECT_EQ(r.green_count, green);
  EXPECT_EQ(r.scored_len, 119);
  EXPECT_NEAR(r.z, (green - 0.5 * 119) / std::sqrt(119 * 0.25), 1e-12);
  const KgwResult fast = KgwScorer(kKey, vocab).Score(seq);
  EXPECT_EQ(fast.green_count, r.green_count);
  EXPECT_EQ(fast.z, r.z);
  EXPECT_EQ(KgwDetect(seq, kKey, vocab, kDefaultGamma, 20).scored_len, 100);
}

TEST(KgwTest, DetectsLeftOnlyWatermarkInLeftToRightDecoding) {
  const MarkovSource source({128, 6, 1.0, 2});
  const BaseModel model = BaseModel::Train(source.SampleCorpus(100, 80, 3), 128);
  const Vocabulary vocab(128);
  const LeftOnlyInjector injector(kKey, 4.0, vocab);
  const TokenSequence prompt = {1, 2};
  const Schedule schedule = MakeSchedule(ScheduleKind::kBlock, 202, 2, 200, 1, 0);
  DecodeOptions options;
  options.temperature = 1.0;
  options.seed = 3;
  const DecodeResult r = Decode(model, prompt, schedule, options, &injector);
  EXPECT_GT(KgwDetect(r.state.tokens(), kKey, vocab, kDefaultGamma, 2).z, 6.0);
  const DecodeResult plain = Decode(model, prompt, schedule, options);
  EXPECT_LT(KgwDetect(plain.state.tokens(), kKey, vocab, kDefaultGamma, 2).z, 4.0);
}

}  // namespace
}  // namespace lrdwm
