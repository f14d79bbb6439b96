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

#ifndef LRDWM_SCHEDULE_H_
#define LRDWM_SCHEDULE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lrdwm {

enum class ScheduleKind {
  kRandomOrder,  // positions revealed in a seeded random order
  kConfidence,   // most confident masked position first
  kBlock,        // left-to-right blocks, random order within a block
};

std::string_view ScheduleKindName(ScheduleKind kind);
ScheduleKind ParseScheduleKind(std::string_view name);

// Which generation positions are finalized at each denoising step. Random
// and block schedules are fully realized up front. Confidence schedules only
// fix how many positions each step reveals; the decoder picks which ones.
class Schedule {
 public:
  ScheduleKind kind() const { return kind_; }
  int length() const { return length_; }
  int prompt_len() const { return prompt_len_; }
  int steps() const { return static_cast<int>(counts_.size()); }
  int block_len() const { return block_len_; }
  std::uint64_t seed() const { return seed_; }

  bool predetermined() const { return kind_ != ScheduleKind::kConfidence; }

  // Number of positions revealed at each step.
  const std::vector<int>& step_counts() const { return counts_; }
  // Per-step position sets; empty for confidence schedules.
  const std::vector<std::vector<int>>& step_positions() const {
    return positions_;
  }

 private:
  friend Schedule MakeSchedule(ScheduleKind, int, int, int, int,
                               std::uint64_t);

  ScheduleKind kind_ = ScheduleKind::kRandomOrder;
  int length_ = 0;
  int prompt_len_ = 0;
  int block_len_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<int> counts_;
  std::vector<std::vector<int>> positions_;
};

// Builds a schedule over generation positions [prompt_len, length). Requires
// 1 <= steps <= length - prompt_len; block schedules need at least one step
// per block (the last block may be shorter than block_len). Steps are spread
// as evenly as possible; within a block, steps are allotted in proportion to
// block size. Throws kConfig on inconsistent sizes.
Schedule MakeSchedule(ScheduleKind kind, int length, int prompt_len,
                      int steps, int block_len, std::uint64_t seed);

}  // namespace lrdwm

#endif  // LRDWM_SCHEDULE_H_
