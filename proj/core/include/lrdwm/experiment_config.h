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

#ifndef LRDWM_EXPERIMENT_CONFIG_H_
#define LRDWM_EXPERIMENT_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lrdwm/attacks.h"
#include "lrdwm/decoder.h"
#include "lrdwm/schedule.h"
#include "lrdwm/types.h"

namespace lrdwm {

struct CorpusSpec {
  int vocab_size = 1024;
  int branching = 8;
  double zipf = 1.1;
  // Sequences used to train the denoiser (and, from a disjoint stream, the
  // perplexity oracle).
  int train_sequences = 2000;
  int length = 400;
};

struct ModelSpec {
  int order = 2;
  double smoothing = 0.1;
};

struct GenSpec {
  int prompt_len = 16;
  // Generated tokens per sequence (the prompt comes on top).
  int length = 300;
  int steps = 300;
  ScheduleKind schedule = ScheduleKind::kRandomOrder;
  int block_len = 32;
  double temperature = 0.0;
  ForwardMode forward = ForwardMode::kSelectedOnly;
};

struct DetectSpec {
  int count = 600;
  int null_count = 2000;
  int calibration_count = 10000;
  std::vector<double> fprs = {0.01};
  // FPR used for TPR columns and the operating-point search.
  double primary_fpr = 0.01;
  int min_scored_len = 16;
};

struct EfficiencySpec {
  bool enabled = true;
  std::vector<int> vocab_sizes = {1024, 4096};
  int sequences = 50;
  int warmup = 3;
  int length = 300;
  int steps = 60;
  double delta = 2.0;
  std::vector<std::string> methods = {"none", "lr", "left", "dmark"};
  int train_sequences = 500;
};

struct AttackSpec {
  AttackKind kind = AttackKind::kDelete;
  double rate = 0.1;
};

struct RobustnessSpec {
  bool enabled = true;
  int count = 600;
  std::vector<AttackSpec> attacks = {
      {AttackKind::kDelete, 0.1},     {AttackKind::kDelete, 0.3},
      {AttackKind::kDelete, 0.5},     {AttackKind::kSubstitute, 0.1},
      {AttackKind::kSubstitute, 0.3}, {AttackKind::kSubstitute, 0.5}};
  // Operating delta. If its clean TPR is below 1.0, the smallest larger
  // delta on `delta_grid` that reaches 1.0 is used instead.
  double delta = 3.25;
  std::vector<double> delta_grid;
};

// One experiment. All randomness derives from `seed` through DeriveSeed with
// fixed labels, so every row can be regenerated from the config alone.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  CorpusSpec corpus;
  ModelSpec model;
  std::vector<std::string> methods = {"lr", "left", "dmark", "none"};
  std::vector<double> deltas = {0.0, 0.5, 1.0, 2.0, 4.0, 6.0};
  double gamma = 0.5;
  GenSpec gen;
  DetectSpec detect;
  EfficiencySpec efficiency;
  RobustnessSpec robustness;
  // Hex keys; empty means derived from the seed.
  std::string key_left;
  std::string key_right;
  // 0 = hardware concurrency. Timing runs always use one thread unless
  // parallel_timing is set.
  int threads = 0;
  bool parallel_timing = false;
  bool run_detectability = true;

  ExperimentConfig();

  // Throws kConfig with a field path for any invalid value.
  void Validate() const;

  WatermarkKey LeftKey() const;
  WatermarkKey RightKey() const;

  std::string ToJson() const;
  // Rejects unknown fields. Missing fields keep their defaults.
  static ExperimentConfig FromJson(std::string_view text);
  static ExperimentConfig Load(const std::string& path);

  // FNV-1a of the canonical JSON form, as 16 hex digits.
  std::string Digest() const;
};

bool IsKnownMethod(std::string_view method);

}  // namespace lrdwm

#endif  // LRDWM_EXPERIMENT_CONFIG_H_
