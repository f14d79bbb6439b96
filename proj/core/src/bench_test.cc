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

#include "lrdwm/bench.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "lrdwm/errors.h"
#include "lrdwm/experiment_config.h"
#include "lrdwm/log.h"
#include "lrdwm/parallel.h"

namespace lrdwm {
namespace {

ExperimentConfig TinyConfig() {
  ExperimentConfig c;
  c.name = "tiny";
  c.seed = 3;
  c.corpus.vocab_size = 64;
  c.corpus.branching = 4;
  c.corpus.train_sequences = 200;
  c.corpus.length = 80;
  c.gen.prompt_len = 4;
  c.gen.length = 60;
  c.gen.steps = 60;
  c.deltas = {0.0, 4.0};
  c.detect.count = 30;
  c.detect.null_count = 200;
  c.detect.calibration_count = 300;
  c.detect.fprs = {0.05};
  c.detect.primary_fpr = 0.05;
  c.efficiency.vocab_sizes = {64};
  c.efficiency.sequences = 3;
  c.efficiency.warmup = 1;
  c.efficiency.length = 40;
  c.efficiency.steps = 10;
  c.efficiency.train_sequences = 50;
  c.robustness.count = 20;
  c.robustness.attacks = {{AttackKind::kDelete, 0.1}, {AttackKind::kSubstitute, 0.3}};
  c.robustness.delta = 2.0;
  c.robustness.delta_grid = {4.0, 8.0};
  c.threads = 1;
  return c;
}

class QuietWarnings {
 public:
  QuietWarnings() : previous_(SetWarningSink([](std::string_view) {})) {}
  ~QuietWarnings() { SetWarningSink(previous_); }

 private:
  WarningSink previous_;
};

TEST(ExperimentConfigTest, JsonRoundTrip) {
  const ExperimentConfig c = TinyConfig();
  const ExperimentConfig back = ExperimentConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_EQ(back.Digest(), c.Digest());
  ExperimentConfig other = c;
  other.seed = 4;
  EXPECT_NE(other.Digest(), c.Digest());
}

TEST(ExperimentConfigTest, PartialJsonKeepsDefaults) {
  const ExperimentConfig c = ExperimentConfig::FromJson(
      R"({"format": "lrdwm-experiment", "version": 1, "name": "x", "gen": {"steps": 30}})");
  EXPECT_EQ(c.name, "x");
  EXPECT_EQ(c.gen.steps, 30);
  EXPECT_EQ(c.gen.length, GenSpec{}.length);
  EXPECT_EQ(c.corpus.vocab_size, CorpusSpec{}.vocab_size);
}

TEST(ExperimentConfigTest, RejectsBadInput) {
  const auto kind_of = [](std::string_view text) {
    try {
      ExperimentConfig::FromJson(text).Validate();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kUsage;
  };
  EXPECT_EQ(kind_of(R"({"format": "lrdwm-experiment", "version": 1, "colour": 1})"),
            ErrorKind::kConfig);
  EXPECT_EQ(kind_of(R"({"format": "lrdwm-experiment", "version": 1, "gen": {"stepz": 1}})"),
            ErrorKind::kConfig);
  EXPECT_EQ(kind_of(R"({"format": "lrdwm-experiment", "version": 2})"), ErrorKind::kConfig);
  EXPECT_EQ(kind_of("{"), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(R"({"format": "lrdwm-experiment", "version": 1, "methods": ["kgw"]})"),
            ErrorKind::kConfig);
  ExperimentConfig c = TinyConfig();
  c.detect.primary_fpr = 0.01;
  EXPECT_THROW(c.Validate(), Error);
  c = TinyConfig();
  c.gen.steps = 61;
  EXPECT_THROW(c.Validate(), Error);
  c = TinyConfig();
  c.corpus.length = 60;
  EXPECT_THROW(c.Validate(), Error);
  c = TinyConfig();
  c.key_left = "xyz";
  EXPECT_THROW(c.Validate(), Error);
}

TEST(ExperimentConfigTest, KeysDeriveFromSeedUnlessGiven) {
  ExperimentConfig c = TinyConfig();
  EXPECT_NE(c.LeftKey(), c.RightKey());
  c.key_left = "00000000000000ff";
  EXPECT_EQ(c.LeftKey().value, 0xffu);
}

TEST(ParallelForTest, VisitsEachIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  ParallelFor(100, 4, [&](int i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(ParallelFor(10, 3,
                           [](int i) {
                             if (i == 7) Fail(ErrorKind::kData, "boom");
                           }),
               Error);
  EXPECT_GE(ResolveThreads(0), 1);
  EXPECT_EQ(ResolveThreads(3), 3);
}

TEST(BenchHelpersTest, WindowsAndFilters) {
  const TokenSequence seq = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(ScoredWindow(seq, 3).size(), 4u);
  EXPECT_EQ(ScoredWindow(seq, 3).front(), 3);
  EXPECT_EQ(ScoredWindow(seq, 0).size(), 6u);
  EXPECT_TRUE(IsDegenerate(TokenSequence{1, 1, 1, 2}));
  EXPECT_FALSE(IsDegenerate(TokenSequence{1, 1, 2, 2}));
}

TEST(BenchHelpersTest, PerplexityOfDeterministicCycleIsNearOne) {
  Corpus corpus;
  for (int c = 0; c < 8; ++c) {
    TokenSequence s;
    for (int i = 0; i < 64; ++i) s.push_back((c + i) % 8);
    corpus.push_back(s);
  }
  const BaseModel oracle = BaseModel::Train(corpus, 8, 2, 1e-3);
  const TokenSequence cycle = {0, 1, 2, 3, 4, 5, 6, 7, 0, 1};
  EXPECT_LT(SequencePerplexity(oracle, cycle, 1), 1.01);
  const TokenSequence against = {0, 7, 6, 5, 4, 3, 2, 1};
  EXPECT_GT(SequencePerplexity(oracle, against, 1), 100.0);
  double manual = 0.0;
  for (std::size_t i = 1; i < against.size(); ++i) {
    manual += oracle.ForwardLogProb(std::span(against).first(i), against[i]);
  }
  EXPECT_NEAR(SequencePerplexity(oracle, against, 1), std::exp(-manual / 7.0), 1e-9);
}

TEST(BenchTest, GenerationIsReproducibleAndThreadIndependent) {
  QuietWarnings quiet;
  const World world = BuildWorld(TinyConfig());
  const Corpus prompts = world.Prompts(6);
  const auto proc = MakeProcessor("lr", world.keys, 2.0, world.vocab, nullptr);
  GenSpec gen = world.config.gen;
  gen.temperature = 1.0;
  const Corpus one = GenerateBatch(world, proc.get(), prompts, gen, 1);
  const Corpus many = GenerateBatch(world, proc.get(), prompts, gen, 3);
  EXPECT_EQ(one, many);
  for (const TokenSequence& s : one) EXPECT_EQ(s.size(), 64u);
  EXPECT_EQ(MakeProcessor("none", world.keys, 2.0, world.vocab, nullptr), nullptr);
  EXPECT_THROW(MakeProcessor("dmark", world.keys, 2.0, world.vocab, nullptr), Error);
}

TEST(BenchTest, RobustnessFallsBackToLargerDelta) {
  QuietWarnings quiet;
  ExperimentConfig config = TinyConfig();
  config.robustness.delta = 0.0;
  config.robustness.delta_grid = {0.0, 8.0, 6.0};
  const World world = BuildWorld(config);
  std::vector<std::string> warnings;
  const std::vector<ReportRow> rows = RunRobustness(world, &warnings);
  ASSERT_EQ(rows.front().attack, "clean");
  EXPECT_EQ(rows.front().delta, 6.0);
  EXPECT_EQ(rows.front().tpr, 1.0);
  EXPECT_EQ(rows.size(), 1 + config.robustness.attacks.size());
}

TEST(BenchTest, TinyRunProducesAllReports) {
  QuietWarnings quiet;
  const ExperimentConfig config = TinyConfig();
  std::ostringstream log;
  const BenchOutputs out = RunBench(config, &log);
  std::set<std::string> kinds;
  std::set<std::string> methods;
  for (const ReportRow& r : out.rows) {
    kinds.insert(r.kind);
    methods.insert(r.method);
    EXPECT_EQ(r.experiment, "tiny");
    EXPECT_EQ(r.digest, config.Digest());
  }
  EXPECT_EQ(kinds, (std::set<std::string>{"detectability", "efficiency", "robustness"}));
  EXPECT_EQ(methods, (std::set<std::string>{"lr", "left", "dmark", "none"}));
  for (const ReportRow& r : out.rows) {
    if (r.kind != "detectability") continue;
    EXPECT_GE(r.tpr, 0.0);
    EXPECT_LE(r.tpr, 1.0);
    EXPECT_GT(r.mean_ppl, 1.0);
    if (r.method == "lr" && r.delta == 4.0) EXPECT_GE(r.tpr, 0.8);
  }
  EXPECT_FALSE(out.tradeoff.empty());

  const auto dir = std::filesystem::temp_directory_path() / "lrdwm_bench_test";
  std::filesystem::remove_all(dir);
  WriteReports(out, dir.string());
  for (const char* name :
       {"rows.csv", "rows.jsonl", "tradeoff.csv", "efficiency.csv", "robustness.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  std::ifstream csv(dir / "rows.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("experiment,digest,kind,method,delta", 0), 0u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace lrdwm
