// Copyright 2026 The chprune Authors
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

#include "chprune/mck.h"

#include <gtest/gtest.h>

#include <thread>
#include <vector>

#include "chprune/error.h"
#include "chprune/random.h"
#include "oracles.h"

namespace chprune::mck {
namespace {

using ::chprune::testing::EnumerateMck;

Instance TwoGroupInstance() {
  Instance instance;
  instance.groups.emplace_back(std::vector<double>{0, 5},
                               std::vector<double>{0, 3});
  instance.groups.emplace_back(std::vector<double>{0, 4},
                               std::vector<double>{0, 4});
  instance.capacity = 5;
  return instance;
}

Instance RandomInstance(Rng& rng, int max_groups, int max_items) {
  Instance instance;
  const int groups = 1 + rng.UniformInt(max_groups);
  double total = 0.0;
  for (int g = 0; g < groups; ++g) {
    const int items = 1 + rng.UniformInt(max_items);
    std::vector<double> values(items);
    std::vector<double> costs(items);
    for (int i = 0; i < items; ++i) {
      values[i] = rng.Uniform(0.0, 100.0);
      costs[i] = rng.Uniform(0.0, 10.0);
    }
    total += *std::max_element(costs.begin(), costs.end());
    instance.groups.emplace_back(values, costs);
  }
  instance.capacity = rng.Uniform(0.0, total);
  return instance;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kConfig;
}

void ExpectRecomputes(const Instance& instance, const Solution& s) {
  ASSERT_EQ(s.chosen.size(), instance.groups.size());
  double value = 0.0;
  double cost = 0.0;
  for (std::size_t g = 0; g < s.chosen.size(); ++g) {
    value += instance.groups[g].values[s.chosen[g]];
    cost += instance.groups[g].costs[s.chosen[g]];
  }
  EXPECT_NEAR(value, s.total_value, 1e-9);
  EXPECT_NEAR(cost, s.total_cost, 1e-9);
  EXPECT_LE(s.total_cost, instance.capacity);
}

void ExpectStrictFront(const std::vector<double>& values,
                       const std::vector<double>& costs) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    EXPECT_LT(values[k - 1], values[k]);
    EXPECT_LT(costs[k - 1], costs[k]);
  }
}

TEST(BruteForceTest, TwoGroupExample) {
  const Solution s = SolveBruteForce(TwoGroupInstance());
  EXPECT_EQ(s.chosen, (std::vector<int>{1, 0}));
  EXPECT_EQ(s.total_value, 5);
  EXPECT_EQ(s.total_cost, 3);
}

TEST(BruteForceTest, SingleGroupArgmax) {
  Instance instance;
  instance.groups.emplace_back(std::vector<double>{1, 9, 4},
                               std::vector<double>{1, 1, 1});
  instance.capacity = 1;
  const Solution s = SolveBruteForce(instance);
  EXPECT_EQ(s.chosen, std::vector<int>{1});
  EXPECT_EQ(s.total_value, 9);
}

TEST(BruteForceTest, OnlyItemTooExpensive) {
  Instance instance;
  instance.groups.emplace_back(std::vector<double>{7}, std::vector<double>{9});
  instance.capacity = 5;
  EXPECT_EQ(CodeOf([&] { SolveBruteForce(instance); }),
            ErrorCode::kInfeasible);
}

TEST(BruteForceTest, TiesGoToLowerCostThenSmallerTuple) {
  Instance instance;
  instance.groups.emplace_back(std::vector<double>{3, 3, 3},
                               std::vector<double>{2, 1, 1});
  instance.capacity = 10;
  EXPECT_EQ(SolveBruteForce(instance).chosen, std::vector<int>{1});
}

TEST(BruteForceTest, EnumerationBound) {
  Instance instance;
  for (int g = 0; g < 8; ++g) {
    instance.groups.emplace_back(std::vector<double>(10, 1.0),
                                 std::vector<double>(10, 0.0));
  }
  instance.capacity = 1;
  EXPECT_EQ(CodeOf([&] { SolveBruteForce(instance, 1000); }),
            ErrorCode::kTooLarge);
}

TEST(BruteForceTest, MatchesIndependentEnumerationIncludingTies) {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    Instance instance = RandomInstance(rng, 4, 4);
    // Coarse values make ties common.
    for (auto& group : instance.groups) {
      for (double& v : group.values) v = std::floor(v / 25.0);
      for (double& c : group.costs) c = std::floor(c / 3.0);
    }
    const auto oracle = EnumerateMck(instance);
    if (!oracle.feasible) {
      EXPECT_EQ(CodeOf([&] { SolveBruteForce(instance); }),
                ErrorCode::kInfeasible);
      continue;
    }
    const Solution s = SolveBruteForce(instance);
    EXPECT_EQ(s.chosen, oracle.chosen) << "instance " << t;
    EXPECT_EQ(s.total_value, oracle.value);
  }
}

TEST(CondenseTest, DominatedItemDropped) {
  const ParetoFront f = Condense(std::vector<double>{3, 5},
                                 std::vector<double>{2, 1}, 10);
  EXPECT_EQ(f.values, std::vector<double>{5});
  EXPECT_EQ(f.costs, std::vector<double>{1});
  EXPECT_EQ(f.backrefs, std::vector<int>{1});
}

TEST(CondenseTest, IncreasingChainUnchanged) {
  const ParetoFront f = Condense(std::vector<double>{1, 2, 3},
                                 std::vector<double>{1, 2, 3}, 10);
  EXPECT_EQ(f.values, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(f.costs, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(f.backrefs, (std::vector<int>{0, 1, 2}));
}

TEST(CondenseTest, DuplicateKeepsFirstIndex) {
  const ParetoFront f = Condense(std::vector<double>{4, 4},
                                 std::vector<double>{2, 2}, 10);
  EXPECT_EQ(f.values, std::vector<double>{4});
  EXPECT_EQ(f.backrefs, std::vector<int>{0});
}

TEST(CondenseTest, EqualValueKeepsCheaperItem) {
  const ParetoFront f = Condense(std::vector<double>{4, 4},
                                 std::vector<double>{3, 2}, 10);
  EXPECT_EQ(f.backrefs, std::vector<int>{1});
}

TEST(CondenseTest, CapacityFilterAndEmptyFront) {
  const ParetoFront f = Condense(std::vector<double>{1, 9},
                                 std::vector<double>{1, 6}, 5);
  EXPECT_EQ(f.values, std::vector<double>{1});
  EXPECT_EQ(CodeOf([] {
              Condense(std::vector<double>{1}, std::vector<double>{6}, 5);
            }),
            ErrorCode::kEmptyFront);
}

TEST(CondenseTest, RandomFrontsAreStrictAndComplete) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + rng.UniformInt(30);
    std::vector<double> v(n);
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) {
      v[i] = rng.UniformInt(10);
      c[i] = rng.UniformInt(10);
    }
    const double capacity = 9;
    const ParetoFront f = Condense(v, c, capacity);
    ExpectStrictFront(f.values, f.costs);
    for (int k = 0; k < f.size(); ++k) {
      EXPECT_EQ(v[f.backrefs[k]], f.values[k]);
      EXPECT_EQ(c[f.backrefs[k]], f.costs[k]);
    }
    // Every item within capacity is weakly dominated by a front entry, and
    // a kept item has no strictly better alternative.
    for (int i = 0; i < n; ++i) {
      bool covered = false;
      for (int k = 0; k < f.size(); ++k) {
        covered = covered || (f.values[k] >= v[i] && f.costs[k] <= c[i]);
      }
      EXPECT_TRUE(c[i] > capacity || covered);
    }
  }
}

TEST(MergeTest, TwoGroupExample) {
  const Instance instance = TwoGroupInstance();
  const MergeResult m = Merge(instance.groups[0], instance.groups[1], 5);
  EXPECT_EQ(m.group.values, (std::vector<double>{0, 5}));
  EXPECT_EQ(m.group.costs, (std::vector<double>{0, 3}));
  // Pair index u = i * |b| + j recovers the sources.
  EXPECT_EQ(m.group.labels, (std::vector<int>{0, 2}));
  EXPECT_EQ(m.left, (std::vector<int>{0, 1}));
  EXPECT_EQ(m.right, (std::vector<int>{0, 0}));
}

TEST(MergeTest, SingleItems) {
  const MergeResult m = Merge(ItemGroup({2}, {1}), ItemGroup({3}, {1}), 10);
  EXPECT_EQ(m.group.values, std::vector<double>{5});
  EXPECT_EQ(m.group.costs, std::vector<double>{2});
}

TEST(MergeTest, NoPairFits) {
  EXPECT_EQ(CodeOf([] { Merge(ItemGroup({1}, {6}), ItemGroup({1}, {6}), 5); }),
            ErrorCode::kEmptyFront);
}

TEST(MergeTest, SoundnessOnRandomGroups) {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const ItemGroup a = RandomInstance(rng, 1, 9).groups[0];
    const ItemGroup b = RandomInstance(rng, 1, 9).groups[0];
    const double capacity = rng.Uniform(2.0, 20.0);
    MergeResult m;
    try {
      m = Merge(a, b, capacity);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kEmptyFront);
      continue;
    }
    ExpectStrictFront(m.group.values, m.group.costs);
    for (int i = 0; i < a.size(); ++i) {
      for (int j = 0; j < b.size(); ++j) {
        const double v = a.values[i] + b.values[j];
        const double c = a.costs[i] + b.costs[j];
        if (c > capacity) continue;
        bool covered = false;
        for (int k = 0; k < m.group.size(); ++k) {
          covered = covered || (m.group.values[k] >= v && m.group.costs[k] <= c);
        }
        EXPECT_TRUE(covered) << "pair " << i << "," << j;
      }
    }
  }
}

TEST(MergeTest, OutputSensitiveMergeAgreesOnFronts) {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    const ItemGroup raw_a = RandomInstance(rng, 1, 20).groups[0];
    const ItemGroup raw_b = RandomInstance(rng, 1, 20).groups[0];
    const ParetoFront fa = Condense(raw_a.values, raw_a.costs, 1e9);
    const ParetoFront fb = Condense(raw_b.values, raw_b.costs, 1e9);
    const ItemGroup a(fa.values, fa.costs);
    const ItemGroup b(fb.values, fb.costs);
    const double capacity = rng.Uniform(0.0, 20.0);
    MergeResult expected;
    MergeResult actual;
    bool expected_empty = false;
    bool actual_empty = false;
    try {
      expected = Merge(a, b, capacity);
    } catch (const Error&) {
      expected_empty = true;
    }
    try {
      actual = MergeFronts(a, b, capacity);
    } catch (const Error&) {
      actual_empty = true;
    }
    ASSERT_EQ(expected_empty, actual_empty);
    if (expected_empty) continue;
    EXPECT_EQ(expected.group.values, actual.group.values);
    EXPECT_EQ(expected.group.costs, actual.group.costs);
    EXPECT_EQ(expected.left, actual.left);
    EXPECT_EQ(expected.right, actual.right);
  }
}

TEST(MeetInTheMiddleTest, TwoGroupExample) {
  const Solution s = SolveMeetInTheMiddle(TwoGroupInstance());
  EXPECT_EQ(s.total_value, 5);
  EXPECT_EQ(s.total_cost, 3);
}

TEST(MeetInTheMiddleTest, ZeroCapacityPicksBestFreeItems) {
  Instance instance;
  instance.groups.emplace_back(std::vector<double>{1, 4, 9},
                               std::vector<double>{0, 0, 2});
  instance.groups.emplace_back(std::vector<double>{2, 8},
                               std::vector<double>{1, 0});
  instance.groups.emplace_back(std::vector<double>{5}, std::vector<double>{0});
  instance.capacity = 0;
  const Solution s = SolveMeetInTheMiddle(instance);
  EXPECT_EQ(s.chosen, (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(s.total_value, 17);
}

TEST(MeetInTheMiddleTest, InfeasibleGroup) {
  Instance instance = TwoGroupInstance();
  instance.groups.emplace_back(std::vector<double>{1}, std::vector<double>{6});
  EXPECT_EQ(CodeOf([&] { SolveMeetInTheMiddle(instance); }),
            ErrorCode::kInfeasible);
}

TEST(MeetInTheMiddleTest, InvalidInstanceRejected) {
  Instance instance = TwoGroupInstance();
  instance.groups[0].costs[1] = -1;
  EXPECT_EQ(CodeOf([&] { SolveMeetInTheMiddle(instance); }),
            ErrorCode::kInvalidArgument);
  instance = TwoGroupInstance();
  instance.groups.emplace_back();
  EXPECT_EQ(CodeOf([&] { SolveMeetInTheMiddle(instance); }),
            ErrorCode::kInvalidArgument);
}

TEST(MeetInTheMiddleTest, OracleEquivalenceOnRandomInstances) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Instance instance = RandomInstance(rng, 5, 6);
    const auto oracle = EnumerateMck(instance);
    if (!oracle.feasible) {
      EXPECT_EQ(CodeOf([&] { SolveMeetInTheMiddle(instance); }),
                ErrorCode::kInfeasible);
      continue;
    }
    const Solution s = SolveMeetInTheMiddle(instance);
    EXPECT_EQ(s.total_value, oracle.value) << "instance " << t;
    ExpectRecomputes(instance, s);
  }
}

TEST(MeetInTheMiddleTest, CapacityFilledExactly) {
  // The capacity is the floating-point sum of the only items, so the
  // remaining budget after one group can round below the other's cost.
  mck::Instance instance;
  instance.groups.emplace_back(std::vector<double>{78.3113},
                               std::vector<double>{18.812918731});
  instance.groups.emplace_back(std::vector<double>{22.5546},
                               std::vector<double>{19.577409629723515});
  instance.capacity = instance.groups[0].costs[0] + instance.groups[1].costs[0];
  const mck::Solution s = mck::SolveMeetInTheMiddle(instance);
  EXPECT_EQ(s.chosen, (std::vector<int>{0, 0}));
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    mck::Instance tight;
    double total = 0.0;
    const int groups = 1 + rng.UniformInt(6);
    for (int g = 0; g < groups; ++g) {
      const double cost = rng.Uniform(0.0, 20.0);
      total += cost;
      tight.groups.emplace_back(std::vector<double>{rng.Uniform()},
                                std::vector<double>{cost});
    }
    tight.capacity = total;
    const mck::Solution solved = mck::SolveMeetInTheMiddle(tight);
    EXPECT_LE(solved.total_cost, tight.capacity) << t;
  }
}

TEST(MeetInTheMiddleTest, OddAndEvenGroupCounts) {
  Rng rng(2);
  for (int groups = 1; groups <= 9; ++groups) {
    Instance instance;
    for (int g = 0; g < groups; ++g) {
      instance.groups.push_back(RandomInstance(rng, 1, 4).groups[0]);
    }
    instance.capacity = 4.0 * groups;
    const auto oracle = EnumerateMck(instance);
    if (!oracle.feasible) continue;
    EXPECT_EQ(SolveMeetInTheMiddle(instance).total_value, oracle.value);
  }
}

TEST(MeetInTheMiddleTest, DegeneratesToZeroOneKnapsack) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + rng.UniformInt(12);
    Instance instance;
    std::vector<double> v(n);
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) {
      v[i] = rng.Uniform(0.0, 100.0);
      c[i] = rng.Uniform(0.0, 10.0);
      instance.groups.emplace_back(std::vector<double>{0, v[i]},
                                   std::vector<double>{0, c[i]});
    }
    instance.capacity = rng.Uniform(0.0, 5.0 * n);
    double best = 0.0;
    for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
      double value = 0.0;
      double cost = 0.0;
      for (int i = 0; i < n; ++i) {
        if (subset >> i & 1u) {
          value += v[i];
          cost += c[i];
        }
      }
      if (cost <= instance.capacity) best = std::max(best, value);
    }
    EXPECT_EQ(SolveMeetInTheMiddle(instance).total_value, best);
  }
}

TEST(MeetInTheMiddleTest, ConcurrentSolvesAgree) {
  Rng rng(8);
  Instance instance;
  for (int g = 0; g < 12; ++g) {
    instance.groups.push_back(RandomInstance(rng, 1, 30).groups[0]);
  }
  instance.capacity = 40;
  const Solution expected = SolveMeetInTheMiddle(instance);
  std::vector<Solution> results(4);
  std::vector<std::thread> threads;
  for (auto& r : results) {
    threads.emplace_back([&instance, &r] { r = SolveMeetInTheMiddle(instance); });
  }
  for (auto& th : threads) th.join();
  for (const auto& r : results) {
    EXPECT_EQ(r.chosen, expected.chosen);
    EXPECT_EQ(r.total_value, expected.total_value);
  }
}

TEST(MeetInTheMiddleTest, StatsReported) {
  MimStats stats;
  Instance instance = TwoGroupInstance();
  instance.groups.push_back(instance.groups[0]);
  SolveMeetInTheMiddle(instance, &stats);
  EXPECT_GE(stats.largest_front, 1);
  EXPECT_GE(stats.final_left, 1);
}

TEST(ScaleCostTest, FloorOfScaledCost) {
  EXPECT_EQ(ScaleCost(0.15, 10), 1);
  EXPECT_EQ(ScaleCost(0.24, 10), 2);
  EXPECT_EQ(ScaleCost(0.001, 1000), 1);
  EXPECT_EQ(ScaleCost(0.0, 1000), 0);
  EXPECT_EQ(ScaleCost(2.9999, 1), 2);
}

TEST(DynamicProgrammingTest, TwoGroupExampleAtUnitScale) {
  const Solution s = SolveDynamicProgramming(TwoGroupInstance(), 1);
  EXPECT_EQ(s.total_value, 5);
}

TEST(DynamicProgrammingTest, SeesFlooredCosts) {
  // Costs 0.15 and 0.24 become 1 and 2 at scale 10, so both fit in 0.35
  // (scaled to 3) even though the true sum is 0.39.
  Instance instance;
  instance.groups.emplace_back(std::vector<double>{0, 1},
                               std::vector<double>{0, 0.15});
  instance.groups.emplace_back(std::vector<double>{0, 1},
                               std::vector<double>{0, 0.24});
  instance.capacity = 0.35;
  EXPECT_EQ(SolveDynamicProgramming(instance, 10).total_value, 2);
  EXPECT_EQ(SolveMeetInTheMiddle(instance).total_value, 1);
}

TEST(DynamicProgrammingTest, MatchesMimOnIntegerCosts) {
  Rng rng(9);
  for (int t = 0; t < 300; ++t) {
    Instance instance = RandomInstance(rng, 5, 6);
    for (auto& group : instance.groups) {
      for (double& c : group.costs) c = std::round(c);
    }
    instance.capacity = std::round(instance.capacity);
    const auto oracle = EnumerateMck(instance);
    if (!oracle.feasible) {
      EXPECT_EQ(CodeOf([&] { SolveDynamicProgramming(instance, 1); }),
                ErrorCode::kInfeasible);
      continue;
    }
    const Solution dp = SolveDynamicProgramming(instance, 1);
    EXPECT_EQ(dp.total_value, SolveMeetInTheMiddle(instance).total_value);
    ExpectRecomputes(instance, dp);
  }
}

TEST(DynamicProgrammingTest, MatchesMimOnThreeDecimalCosts) {
  Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    Instance instance = RandomInstance(rng, 5, 6);
    for (auto& group : instance.groups) {
      for (double& c : group.costs) c = std::round(c * 1000.0) / 1000.0;
      for (double& v : group.values) v = std::round(v);
    }
    instance.capacity = std::round(instance.capacity * 1000.0) / 1000.0 + 5e-4;
    const auto oracle = EnumerateMck(instance);
    if (!oracle.feasible) continue;
    EXPECT_EQ(SolveDynamicProgramming(instance, 1000).total_value, oracle.value);
  }
}

TEST(DynamicProgrammingTest, CapacityOverflow) {
  Instance instance = TwoGroupInstance();
  instance.capacity = 1e6;
  EXPECT_EQ(CodeOf([&] { SolveDynamicProgramming(instance, 1000, 1 << 20); }),
            ErrorCode::kCapacityOverflow);
}

}  // namespace
}  // namespace chprune::mck
