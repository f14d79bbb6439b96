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

#include "lrdwm/decoder.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "lrdwm/corpus.h"
#include "lrdwm/errors.h"
#include "oracles.h"

namespace lrdwm {
namespace {

struct Fixture {
  Corpus corpus;
  BaseModel model;
  oracle::Counts counts;
};

Fixture MakeFixture(int v, std::uint64_t seed) {
  const MarkovSource source({v, 4, 1.1, seed});
  Corpus corpus = source.SampleCorpus(40, 60, seed + 1);
  BaseModel model = BaseModel::Train(corpus, v, 2, 0.1);
  oracle::Counts counts({corpus.begin(), corpus.end()}, v);
  return {std::move(corpus), std::move(model), std::move(counts)};
}

InjectorConfig Keys(double delta) {
  InjectorConfig c;
  c.key_left = WatermarkKey{0xa1a2a3a4a5a6a7a8ULL};
  c.key_right = WatermarkKey{0xb1b2b3b4b5b6b7b8ULL};
  c.delta = delta;
  return c;
}

std::vector<int> AsInts(const SequenceState& state) {
  return {state.tokens().begin(), state.tokens().end()};
}

TEST(DecodeTest, GreedyRandomOrderMatchesOracle) {
  const Fixture f = MakeFixture(24, 4);
  const TokenSequence prompt = {f.corpus[0][0], f.corpus[0][1], f.corpus[0][2]};
  for (int steps : {1, 5, 17}) {
    const Schedule schedule =
        MakeSchedule(ScheduleKind::kRandomOrder, 20, 3, steps, 0, 77 + steps);
    const DecodeResult got = Decode(f.model, prompt, schedule, {});
    const auto want = oracle::GreedyDecode(f.counts, oracle::Rational(1, 10),
                                           {prompt.begin(), prompt.end()}, 20,
                                           schedule.step_positions(),
                                           oracle::OrderRule::kGiven);
    EXPECT_EQ(AsInts(got.state), want) << "steps=" << steps;
  }
}

TEST(DecodeTest, GreedyConfidenceMatchesOracle) {
  const Fixture f = MakeFixture(20, 9);
  const TokenSequence prompt = {f.corpus[1][0], f.corpus[1][1]};
  for (int steps : {3, 8, 16}) {
    const Schedule schedule = MakeSchedule(ScheduleKind::kConfidence, 18, 2, steps, 0, 1);
    const DecodeResult got = Decode(f.model, prompt, schedule, {});
    std::vector<std::vector<int>> sizes;
    for (int c : schedule.step_counts()) sizes.emplace_back(static_cast<std::size_t>(c), 0);
    const auto want = oracle::GreedyDecode(f.counts, oracle::Rational(1, 10),
                                           {prompt.begin(), prompt.end()}, 18, sizes,
                                           oracle::OrderRule::kConfidence);
    EXPECT_EQ(AsInts(got.state), want) << "steps=" << steps;
  }
}

TEST(DecodeTest, ZeroDeltaMatchesUnwatermarked) {
  const Fixture f = MakeFixture(32, 2);
  const Vocabulary vocab(32);
  const LrDwmInjector zero(Keys(0.0), vocab);
  const TokenSequence prompt = {f.corpus[2][0]};
  for (ScheduleKind kind : {ScheduleKind::kRandomOrder, ScheduleKind::kConfidence,
                            ScheduleKind::kBlock}) {
    const Schedule schedule = MakeSchedule(kind, 41, 1, 20, 8, 3);
    for (double temperature : {0.0, 0.7}) {
      DecodeOptions options;
      options.temperature = temperature;
      options.seed = 12;
      EXPECT_EQ(AsInts(Decode(f.model, prompt, schedule, options, &zero).state),
                AsInts(Decode(f.model, prompt, schedule, options).state));
    }
  }
}

TEST(DecodeTest, ForwardModesAgreeOnPredeterminedSchedules) {
  const Fixture f = MakeFixture(32, 5);
  const LrDwmInjector injector(Keys(2.0), Vocabulary(32));
  const TokenSequence prompt = {f.corpus[0][0], f.corpus[0][1]};
  const Schedule schedule = MakeSchedule(ScheduleKind::kRandomOrder, 50, 2, 12, 0, 8);
  DecodeOptions all;
  all.forward = ForwardMode::kAllMasked;
  all.temperature = 1.0;
  all.seed = 99;
  DecodeOptions selected = all;
  selected.forward = ForwardMode::kSelectedOnly;
  EXPECT_EQ(AsInts(Decode(f.model, prompt, schedule, all, &injector).state),
            AsInts(Decode(f.model, prompt, schedule, selected, &injector).state));
}

TEST(DecodeTest, ReproducibleAndSeedSensitive) {
  const Fixture f = MakeFixture(32, 6);
  const LrDwmInjector injector(Keys(1.0), Vocabulary(32));
  const TokenSequence prompt = {f.corpus[0][0]};
  const Schedule schedule = MakeSchedule(ScheduleKind::kRandomOrder, 60, 1, 30, 0, 4);
  DecodeOptions options;
  options.temperature = 1.0;
  options.seed = 5;
  const auto a = AsInts(Decode(f.model, prompt, schedule, options, &injector).state);
  const auto b = AsInts(Decode(f.model, prompt, schedule, options, &injector).state);
  options.seed = 6;
  const auto c = AsInts(Decode(f.model, prompt, schedule, options, &injector).state);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(DecodeTest, AuditRecordsEveryReveal) {
  const Fixture f = MakeFixture(16, 7);
  const Vocabulary vocab(16);
  const LrDwmInjector injector(Keys(3.0), vocab);
  const TokenSequence prompt = {f.corpus[0][0], f.corpus[0][1]};
  const Schedule schedule = MakeSchedule(ScheduleKind::kRandomOrder, 22, 2, 10, 0, 1);
  DecodeOptions options;
  options.keep_logits = true;
  const DecodeResult r = Decode(f.model, prompt, schedule, options, &injector);
  ASSERT_EQ(r.audit.size(), 20u);
  std::vector<int> step_of(22, -1);
  for (const AuditEntry& e : r.audit) step_of[e.pos] = e.step;
  for (const AuditEntry& e : r.audit) {
    EXPECT_EQ(r.state.token(e.pos), e.token);
    EXPECT_EQ(e.raw_digest, LogitDigest(e.raw_logits));
    // A neighbor contributes iff it was revealed in an earlier step.
    const bool left_known = e.pos - 1 < 2 || step_of[e.pos - 1] < e.step;
    const bool right_known = e.pos + 1 < 22 && step_of[e.pos + 1] < e.step;
    EXPECT_EQ(e.bias.left_active, left_known);
    EXPECT_EQ(e.bias.right_active, right_known);
    for (int v = 0; v < 16; ++v) {
      const double diff = e.biased_logits[v] - e.raw_logits[v];
      EXPECT_TRUE(diff == 0.0 || diff == 3.0 || diff == 6.0);
    }
  }
  std::ostringstream out;
  WriteAuditJsonl(out, r.audit);
  const std::string lines = out.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(lines.begin(), lines.end(), '\n')),
            r.audit.size());
  EXPECT_GT(r.working_bytes, 0u);
}

TEST(DecodeTest, Errors) {
  const Fixture f = MakeFixture(16, 8);
  const Schedule schedule = MakeSchedule(ScheduleKind::kRandomOrder, 10, 2, 4, 0, 1);
  EXPECT_THROW(Decode(f.model, TokenSequence{1}, schedule, {}), Error);
  DecodeOptions bad;
  bad.temperature = -1.0;
  EXPECT_THROW(Decode(f.model, TokenSequence{1, 2}, schedule, bad), Error);
  EXPECT_THROW(Decode(f.model, TokenSequence{1, 16}, schedule, {}), Error);
  EXPECT_THROW(ParseForwardMode("some"), Error);
}

TEST(SampleTokenTest, ZeroTemperatureIsArgmaxAndSamplingFollowsSoftmax) {
  Rng rng(1);
  const std::vector<double> logits = {0.0, std::log(3.0), -1e300};
  EXPECT_EQ(SampleToken(logits, 0.0, rng), 1);
  int ones = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const TokenId t = SampleToken(logits, 1.0, rng);
    ASSERT_NE(t, 2);
    ones += t == 1;
  }
  // p = 0.75, sd = sqrt(n p (1 - p)).
  EXPECT_NEAR(ones, 0.75 * n, 4.0 * std::sqrt(n * 0.1875));
}

}  // namespace
}  // namespace lrdwm
