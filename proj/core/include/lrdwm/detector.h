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

#ifndef LRDWM_DETECTOR_H_
#define LRDWM_DETECTOR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrdwm/green_mask.h"
#include "lrdwm/injector.h"
#include "lrdwm/types.h"
#include "lrdwm/vocabulary.h"

namespace lrdwm {

// Ternary per-token score s = m_left + m_right - 1.
struct TokenScore {
  int pos = 0;            // index of the scored token
  int value = 0;          // -1, 0 or +1 when defined_sides == 2
  bool m_left = false;    // token is green for its left neighbor (key_left)
  bool m_right = false;   // token is green for its right neighbor (key_right)
  int defined_sides = 0;  // real neighbors available (0..2)

  bool counted() const { return defined_sides == 2; }
};

inline constexpr int kDefaultMinScoredLength = 16;

// Scores the interior positions 1..n-2 of `tokens`. A position counts toward
// the statistic only if it and both neighbors are real tokens. Reads nothing
// but the tokens and keys. Throws kInput when fewer than 3 tokens are given.
std::vector<TokenScore> ScoreTokens(std::span<const TokenId> tokens,
                                    const InjectorConfig& config,
                                    const Vocabulary& vocab);

// Score sum and count of counted positions.
struct ScoreSummary {
  long long sum = 0;
  int count = 0;
  long long sum_squares = 0;
};

// Repeated scoring under one key pair. With `precompute`, the green lists of
// every context are built up front (|V|^2 bits per key); otherwise they are
// computed on demand.
class TokenScorer {
 public:
  TokenScorer(const InjectorConfig& config, const Vocabulary& vocab,
              bool precompute);

  ScoreSummary Summarize(std::span<const TokenId> tokens) const;
  std::vector<TokenScore> Score(std::span<const TokenId> tokens) const;

  const InjectorConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  bool Green(WatermarkKey key, const GreenListTable* table, TokenId context,
             TokenId token) const;

  InjectorConfig config_;
  Vocabulary vocab_;
  std::unique_ptr<GreenListTable> left_;
  std::unique_ptr<GreenListTable> right_;
};

// Z = (sum(s) - T * null_mean) / (sqrt(sigma2) * sqrt(T)) over counted
// scores. Throws kInput when no score counts and kConfig for sigma2 <= 0.
double ZStatistic(std::span<const TokenScore> scores, double sigma2,
                  double null_mean = 0.0);
double ZStatistic(std::span<const int> scores, double sigma2,
                  double null_mean = 0.0);
double ZFromSummary(const ScoreSummary& summary, double sigma2,
                    double null_mean = 0.0);

// Smallest observed value v such that at most a fraction `fpr` of `values`
// exceed v (the ceil((1 - fpr) * n)-th order statistic). Decisions use
// z > threshold.
double EmpiricalThreshold(std::vector<double> values, double fpr);

// Standard normal upper quantile, reported next to empirical thresholds.
double GaussianThreshold(double fpr);

// Digest identifying a key pair without revealing it.
std::uint64_t KeyDigest(const InjectorConfig& config);

struct ThresholdEntry {
  double fpr = 0.0;
  double z = 0.0;
};

struct ThresholdTable {
  int scored_len = 0;
  std::vector<ThresholdEntry> thresholds;  // sorted by decreasing fpr
};

struct CorpusMeta {
  int size = 0;
  int min_length = 0;
  int max_length = 0;
  std::uint64_t source_digest = 0;
};

struct NullCalibration {
  double sigma2 = 0.5;
  // Set when the null mean is not zero (gamma != 0.5).
  std::optional<double> null_mean;
  double gamma = kDefaultGamma;
  int vocab_size = 0;
  std::uint64_t key_digest = 0;
  std::vector<ThresholdTable> tables;
  std::vector<ThresholdEntry> gaussian_reference;
  CorpusMeta corpus_meta;
  std::vector<std::string> warnings;

  // Threshold for `fpr` from the table whose scored length is closest to
  // `scored_len`. Throws kConfig when the FPR was not calibrated.
  double Threshold(double fpr, int scored_len) const;
  bool HasFpr(double fpr) const;

  std::string ToJson() const;
  static NullCalibration FromJson(std::string_view text);
  void Save(const std::string& path) const;
  static NullCalibration Load(const std::string& path);
};

// Pools per-token scores of the null corpus into sigma2 and sets thresholds
// at the empirical (1 - f) quantile of per-sequence Z for every f in `fprs`.
// With `lengths`, one table per length is built from sequences truncated to
// that many tokens; otherwise one table at the corpus's typical scored length.
// Warns when the corpus has fewer than 10 / min(fprs) sequences.
NullCalibration CalibrateNull(const Corpus& null_corpus,
                              const InjectorConfig& config,
                              const Vocabulary& vocab,
                              std::span<const double> fprs,
                              std::span<const int> lengths = {});

enum class DetectionStatus { kOk, kInsufficientLength };

struct DetectionResult {
  DetectionStatus status = DetectionStatus::kOk;
  double z = 0.0;
  long long score_sum = 0;
  int scored_len = 0;
  bool decision = false;
  double threshold_used = 0.0;
  double fpr = 0.0;
  double sigma2 = 0.0;
  std::vector<TokenScore> per_token;

  friend bool operator==(const DetectionResult& a, const DetectionResult& b);
};

struct DetectOptions {
  // Leading tokens excluded from the scored span (the prompt).
  int prompt_len = 0;
  int min_scored_len = kDefaultMinScoredLength;
  bool keep_per_token = true;
};

// Scores positions prompt_len..n-2 (the last prompt token serves as left
// context), reports per-token positions in sequence coordinates, standardizes with the calibrated sigma2 and
// compares against the calibrated threshold for `fpr`. A pure function of the
// tokens, keys and calibration.
DetectionResult Detect(std::span<const TokenId> tokens,
                       const InjectorConfig& config, const Vocabulary& vocab,
                       const NullCalibration& calibration, double fpr,
                       const DetectOptions& options = {});

std::string DetectionResultToJson(const DetectionResult& result,
                                  bool include_per_token);

}  // namespace lrdwm

#endif  // LRDWM_DETECTOR_H_
