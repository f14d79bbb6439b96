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

#ifndef LRDWM_BENCH_H_
#define LRDWM_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrdwm/base_model.h"
#include "lrdwm/baselines.h"
#include "lrdwm/corpus.h"
#include "lrdwm/detector.h"
#include "lrdwm/experiment_config.h"
#include "lrdwm/injector.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One line of rows.csv / rows.jsonl. Fields that do not apply to a row's
// kind are NaN (or empty).
struct ReportRow {
  std::string experiment;
  std::string digest;
  // "detectability", "efficiency" or "robustness".
  std::string kind;
  std::string method;
  double delta = 0.0;
  std::string schedule;
  int vocab_size = 0;
  int n = 0;       // sequences generated
  int n_kept = 0;  // after the degenerate-repetition filter
  double fpr = kNaN;
  double threshold = kNaN;
  double tpr = kNaN;
  double mean_z = kNaN;
  double mean_ppl = kNaN;  // geometric mean over kept sequences
  double ppl_sem = kNaN;
  double null_fpr = kNaN;
  int null_n = 0;
  bool null_ok = true;
  double gen_time_ms = kNaN;  // median per sequence
  double time_ratio = kNaN;   // gen_time_ms / baseline gen_time_ms
  std::size_t peak_mem_bytes = 0;
  long long mem_overhead_bytes = 0;
  std::size_t table_bytes = 0;
  double table_build_ms = kNaN;
  std::string attack;  // "clean", "delete", "substitute"
  double attack_rate = kNaN;
  double z_drop = kNaN;
};

// PPL at the smallest delta reaching a target TPR ("target"), or one point
// of the PPL-vs-TPR curve per delta ("curve").
struct TradeoffRow {
  std::string method;
  std::string kind;
  double target_tpr = kNaN;
  bool reached = false;
  double delta = kNaN;
  double tpr = kNaN;
  double mean_ppl = kNaN;
  double ppl_sem = kNaN;
};

// Everything an experiment derives from its config at one vocabulary size:
// the synthetic source, the denoiser, the held-out perplexity oracle and the
// keys.
struct World {
  ExperimentConfig config;
  Vocabulary vocab;
  MarkovSource source;
  BaseModel model;
  BaseModel oracle;
  InjectorConfig keys;  // delta is set per run

  // Seeded streams of source text. Each label selects a disjoint stream.
  Corpus Sample(std::string_view label, int count, int length) const;
  Corpus Prompts(int count) const;
};

// Trains the denoiser and oracle for `vocab_size` (0 = config value) on
// `train_sequences` sequences each (0 = config value).
World BuildWorld(const ExperimentConfig& config, int vocab_size = 0,
                 int train_sequences = 0);

// Watermark hook for a method name; nullptr for "none". `table` must be
// given for "dmark".
std::unique_ptr<LogitProcessor> MakeProcessor(std::string_view method,
                                              const InjectorConfig& keys,
                                              double delta,
                                              const Vocabulary& vocab,
                                              const InverseTable* table);

// Generates prompt + continuation. Sequence `index` uses the schedule seed
// DeriveSeed(seed, "schedule", index) and the sampler seed
// DeriveSeed(seed, "sample", index).
TokenSequence GenerateSequence(const World& world,
                               const LogitProcessor* processor,
                               std::span<const TokenId> prompt,
                               const GenSpec& gen, int index);

Corpus GenerateBatch(const World& world, const LogitProcessor* processor,
                     const Corpus& prompts, const GenSpec& gen, int threads);

// tokens[prompt_len - 1:], the continuation plus its left context.
std::span<const TokenId> ScoredWindow(std::span<const TokenId> tokens,
                                      int prompt_len);

// Perplexity of tokens[start:] under left-to-right prediction by `oracle`.
double SequencePerplexity(const BaseModel& oracle,
                          std::span<const TokenId> tokens, int start);

// True when one token makes up more than half of `tokens`.
bool IsDegenerate(std::span<const TokenId> tokens);

// Per-method detection with thresholds calibrated on null windows. "lr" and
// "none" use the two-sided ternary Z; "left" and "dmark" use the left-context
// green-fraction z-test under the left key.
class MethodDetector {
 public:
  MethodDetector(std::string_view method, const World& world,
                 const Corpus& null_windows, std::span<const double> fprs,
                 std::span<const int> window_lengths, int threads);

  struct Score {
    double z = 0.0;
    int scored_len = 0;
  };
  Score Evaluate(std::span<const TokenId> window) const;
  double Threshold(double fpr, int scored_len) const;
  bool Decide(const Score& score, double fpr, int min_scored_len) const;

  const NullCalibration& calibration() const { return calibration_; }

 private:
  bool two_sided_;
  std::unique_ptr<TokenScorer> scorer_;
  std::unique_ptr<KgwScorer> kgw_;
  double gamma_;
  NullCalibration calibration_;
};

struct BenchOutputs {
  std::vector<ReportRow> rows;
  std::vector<TradeoffRow> tradeoff;
  std::vector<std::string> warnings;
};

std::vector<ReportRow> RunDetectability(const World& world,
                                        std::vector<TradeoffRow>* tradeoff,
                                        std::vector<std::string>* warnings);
std::vector<ReportRow> RunEfficiency(const ExperimentConfig& config,
                                     std::vector<std::string>* warnings);
std::vector<ReportRow> RunRobustness(const World& world,
                                     std::vector<std::string>* warnings);

// Runs every enabled part of the experiment; progress lines go to `log`.
BenchOutputs RunBench(const ExperimentConfig& config, std::ostream* log);

// rows.csv, rows.jsonl, tradeoff.csv, efficiency.csv, robustness.csv.
void WriteReports(const BenchOutputs& outputs, const std::string& out_dir);

void WriteRowsCsv(std::ostream& out, std::span<const ReportRow> rows);
void WriteRowsJsonl(std::ostream& out, std::span<const ReportRow> rows);
void WriteTradeoffCsv(std::ostream& out, std::span<const TradeoffRow> rows);

}  // namespace lrdwm

#endif  // LRDWM_BENCH_H_
