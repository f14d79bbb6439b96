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

#include "lrdwm/schedule.h"

#include <numeric>
#include <span>

#include "lrdwm/errors.h"
#include "lrdwm/rng.h"

namespace lrdwm {
namespace {

// Splits `total` items into `parts` chunk sizes differing by at most one,
// larger chunks first.
std::vector<int> EvenSplit(int total, int parts) {
  std::vector<int> sizes(static_cast<std::size_t>(parts), total / parts);
  for (int i = 0; i < total % parts; ++i) ++sizes[static_cast<std::size_t>(i)];
  return sizes;
}

}  // namespace

std::string_view ScheduleKindName(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kRandomOrder:
      return "random";
    case ScheduleKind::kConfidence:
      return "confidence";
    case ScheduleKind::kBlock:
      return "block";
  }
  return "random";
}

ScheduleKind ParseScheduleKind(std::string_view name) {
  if (name == "random" || name == "random-order") return ScheduleKind::kRandomOrder;
  if (name == "confidence") return ScheduleKind::kConfidence;
  if (name == "block") return ScheduleKind::kBlock;
  Fail(ErrorKind::kConfig, "unknown schedule kind '" + std::string(name) +
                               "' (expected random, confidence or block)");
}

Schedule MakeSchedule(ScheduleKind kind, int length, int prompt_len, int steps,
                      int block_len, std::uint64_t seed) {
  if (prompt_len < 0 || length < prompt_len) {
    Fail(ErrorKind::kConfig, "need 0 <= prompt_len <= length");
  }
  const int n = length - prompt_len;
  if (n < 1) Fail(ErrorKind::kConfig, "nothing to generate");
  if (steps < 1 || steps > n) {
    Fail(ErrorKind::kConfig, "steps must lie in [1, " + std::to_string(n) +
                                 "], got " + std::to_string(steps));
  }

  Schedule s;
  s.kind_ = kind;
  s.length_ = length;
  s.prompt_len_ = prompt_len;
  s.seed_ = seed;
  Rng rng(seed);

  switch (kind) {
    case ScheduleKind::kConfidence:
      s.counts_ = EvenSplit(n, steps);
      break;
    case ScheduleKind::kRandomOrder: {
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), prompt_len);
      rng.Shuffle(std::span<int>(order));
      s.counts_ = EvenSplit(n, steps);
      std::size_t next = 0;
      for (int c : s.counts_) {
        s.positions_.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(next),
                                  order.begin() + static_cast<std::ptrdiff_t>(next + c));
        next += static_cast<std::size_t>(c);
      }
      break;
    }
    case ScheduleKind::kBlock: {
      if (block_len < 1) Fail(ErrorKind::kConfig, "block_len must be positive");
      s.block_len_ = block_len;
      const int blocks = (n + block_len - 1) / block_len;
      if (steps < blocks) {
        Fail(ErrorKind::kConfig, "block schedule needs at least " +
                                     std::to_string(blocks) + " steps, got " +
                                     std::to_string(steps));
      }
      // One step per block, the remaining steps shared in proportion to
      // (block size - 1).
      const long long extra = steps - blocks;
      const long long spare = n - blocks;
      long long cum = 0;
      for (int b = 0; b < blocks; ++b) {
        const int begin = prompt_len + b * block_len;
        const int size = std::min(block_len, length - begin);
        const long long before = spare ? extra * cum / spare : 0;
        cum += size - 1;
        const long long after = spare ? extra * cum / spare : 0;
        const int block_steps = 1 + static_cast<int>(after - before);

        std::vector<int> order(static_cast<std::size_t>(size));
        std::iota(order.begin(), order.end(), begin);
        rng.Shuffle(std::span<int>(order));
        std::size_t next = 0;
        for (int c : EvenSplit(size, block_steps)) {
          s.counts_.push_back(c);
          s.positions_.emplace_back(
              order.begin() + static_cast<std::ptrdiff_t>(next),
              order.begin() + static_cast<std::ptrdiff_t>(next + c));
          next += static_cast<std::size_t>(c);
        }
      }
      break;
    }
  }
  return s;
}

}  // namespace lrdwm
