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

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "lrdwm/errors.h"

namespace lrdwm {
namespace {

std::vector<int> Flatten(const Schedule& s) {
  std::vector<int> all;
  for (const auto& step : s.step_positions()) all.insert(all.end(), step.begin(), step.end());
  return all;
}

void ExpectPartition(const Schedule& s) {
  std::vector<int> all = Flatten(s);
  std::sort(all.begin(), all.end());
  std::vector<int> expected(static_cast<std::size_t>(s.length() - s.prompt_len()));
  std::iota(expected.begin(), expected.end(), s.prompt_len());
  EXPECT_EQ(all, expected);
  int total = 0;
  for (std::size_t i = 0; i < s.step_counts().size(); ++i) {
    EXPECT_GE(s.step_counts()[i], 1);
    EXPECT_EQ(static_cast<int>(s.step_positions()[i].size()), s.step_counts()[i]);
    total += s.step_counts()[i];
  }
  EXPECT_EQ(total, s.length() - s.prompt_len());
}

TEST(ScheduleTest, RandomOrderPartitionsPositions) {
  for (int steps : {1, 7, 30}) {
    const Schedule s = MakeSchedule(ScheduleKind::kRandomOrder, 34, 4, steps, 0, 9);
    EXPECT_EQ(s.steps(), steps);
    EXPECT_TRUE(s.predetermined());
    ExpectPartition(s);
    const auto [lo, hi] = std::minmax_element(s.step_counts().begin(), s.step_counts().end());
    EXPECT_LE(*hi - *lo, 1);
  }
}

TEST(ScheduleTest, RandomOrderIsSeeded) {
  const Schedule a = MakeSchedule(ScheduleKind::kRandomOrder, 50, 0, 50, 0, 1);
  const Schedule b = MakeSchedule(ScheduleKind::kRandomOrder, 50, 0, 50, 0, 1);
  const Schedule c = MakeSchedule(ScheduleKind::kRandomOrder, 50, 0, 50, 0, 2);
  EXPECT_EQ(Flatten(a), Flatten(b));
  EXPECT_NE(Flatten(a), Flatten(c));
}

TEST(ScheduleTest, BlockScheduleFinishesBlocksInOrder) {
  const Schedule s = MakeSchedule(ScheduleKind::kBlock, 42, 2, 12, 8, 5);
  ExpectPartition(s);
  int last_block = -1;
  for (const auto& step : s.step_positions()) {
    std::set<int> blocks;
    for (int p : step) blocks.insert((p - 2) / 8);
    ASSERT_EQ(blocks.size(), 1u);
    EXPECT_GE(*blocks.begin(), last_block);
    last_block = *blocks.begin();
  }
  EXPECT_EQ(last_block, 4);
}

TEST(ScheduleTest, BlockOneStepPerBlock) {
  const Schedule s = MakeSchedule(ScheduleKind::kBlock, 20, 0, 3, 7, 5);
  ASSERT_EQ(s.steps(), 3);
  EXPECT_EQ(s.step_counts(), (std::vector<int>{7, 7, 6}));
}

TEST(ScheduleTest, ConfidenceFixesOnlyCounts) {
  const Schedule s = MakeSchedule(ScheduleKind::kConfidence, 10, 0, 4, 0, 1);
  EXPECT_FALSE(s.predetermined());
  EXPECT_EQ(s.step_counts(), (std::vector<int>{3, 3, 2, 2}));
  EXPECT_TRUE(s.step_positions().empty());
}

TEST(ScheduleTest, Errors) {
  EXPECT_THROW(MakeSchedule(ScheduleKind::kRandomOrder, 10, 0, 0, 0, 1), Error);
  EXPECT_THROW(MakeSchedule(ScheduleKind::kRandomOrder, 10, 0, 11, 0, 1), Error);
  EXPECT_THROW(MakeSchedule(ScheduleKind::kRandomOrder, 10, 10, 1, 0, 1), Error);
  EXPECT_THROW(MakeSchedule(ScheduleKind::kBlock, 10, 0, 2, 3, 1), Error);
  EXPECT_THROW(MakeSchedule(ScheduleKind::kBlock, 10, 0, 5, 0, 1), Error);
  EXPECT_THROW(ParseScheduleKind("zigzag"), Error);
  EXPECT_EQ(ParseScheduleKind("random-order"), ScheduleKind::kRandomOrder);
}

}  // namespace
}  // namespace lrdwm
