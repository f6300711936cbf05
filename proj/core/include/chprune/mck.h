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

#ifndef CHPRUNE_MCK_H_
#define CHPRUNE_MCK_H_

// Exact solvers for the multiple-choice knapsack problem (MCK):
//
//   maximize    sum_l v[l][x_l]
//   subject to  sum_l c[l][x_l] <= capacity,   one item x_l per group l.
//
// Three solvers are provided. SolveMeetInTheMiddle() is the production
// solver: it pairs groups from the two ends of the group list, replaces each
// pair by the Pareto front of all pairwise sums, and recurses until two fronts
// remain, which are then combined by a single sort-and-sweep pass. It works
// directly on real-valued costs. SolveDynamicProgramming() is the classic
// pseudo-polynomial DP over integer costs obtained by scaling, and
// SolveBruteForce() enumerates the Cartesian product and serves as the oracle.

#include <cstdint>
#include <span>
#include <vector>

namespace chprune::mck {

// One group of mutually exclusive items. labels[k] is the caller's identifier
// for item k and survives condensing; for instance groups it defaults to the
// position of the item.
struct ItemGroup {
  std::vector<double> values;
  std::vector<double> costs;
  std::vector<int> labels;

  ItemGroup() = default;
  ItemGroup(std::vector<double> values, std::vector<double> costs);
  ItemGroup(std::vector<double> values, std::vector<double> costs,
            std::vector<int> labels);

  int size() const { return static_cast<int>(values.size()); }
};

struct Instance {
  std::vector<ItemGroup> groups;
  double capacity = 0.0;

  // Throws Error(kInvalidArgument) if a group is empty, has mismatched
  // vector lengths, a negative or non-finite cost, a non-finite value, or if
  // the capacity is negative or non-finite.
  void Validate() const;
};

// chosen[l] is the position (0-based) of the selected item in group l.
struct Solution {
  std::vector<int> chosen;
  double total_value = 0.0;
  double total_cost = 0.0;
};

// Builds a Solution whose totals are summed from the chosen items in group
// order. All solvers report totals this way so results are comparable bit for
// bit when they select the same items.
Solution MakeSolution(const Instance& instance, std::vector<int> chosen);

// Items that survive Pareto filtering, sorted by ascending cost. Values and
// costs are both strictly increasing. backrefs[k] is the index of the k-th
// entry in the arrays handed to Condense().
struct ParetoFront {
  std::vector<double> values;
  std::vector<double> costs;
  std::vector<int> backrefs;

  int size() const { return static_cast<int>(values.size()); }
};

// Keeps item i iff cost_i <= capacity and no other item j has
// cost_j <= cost_i and value_j >= value_i; among identical (value, cost)
// pairs the lowest index survives. Throws Error(kEmptyFront) if nothing is
// left.
ParetoFront Condense(std::span<const double> values,
                     std::span<const double> costs, double capacity);

// Result of merging two groups. Item k of `group` is the sum of item left[k]
// of the first group and item right[k] of the second. group.labels holds the
// pair index u = left * |b| + right.
struct MergeResult {
  ItemGroup group;
  std::vector<int> left;
  std::vector<int> right;
};

// Forms all |a|*|b| pairwise sums, then condenses them at `capacity`.
// Throws Error(kEmptyFront) if no pair fits.
MergeResult Merge(const ItemGroup& a, const ItemGroup& b, double capacity);

// Same result as Merge() for inputs that are already Pareto fronts (strictly
// increasing values and costs), but output-sensitive: pairs are generated in
// cost order from one cursor per row of `a`, and each cursor jumps past every
// pair that cannot beat the best value seen so far.
MergeResult MergeFronts(const ItemGroup& a, const ItemGroup& b,
                        double capacity);

inline constexpr std::uint64_t kDefaultEnumerationBound = 10'000'000;

// Maximum-value feasible selection by exhaustive enumeration. Ties go to the
// lower total cost, then to the lexicographically smallest chosen tuple.
// Throws kInfeasible or kTooLarge.
Solution SolveBruteForce(const Instance& instance,
                         std::uint64_t max_combinations =
                             kDefaultEnumerationBound);

struct MimStats {
  int merges = 0;
  std::int64_t largest_front = 0;
  std::int64_t final_left = 0;
  std::int64_t final_right = 0;
};

// Exact meet-in-the-middle solver. Throws kInfeasible.
Solution SolveMeetInTheMiddle(const Instance& instance,
                              MimStats* stats = nullptr);

// floor(cost * scale), with products that sit within rounding noise of an
// integer snapped to that integer (0.001 * 1000 must map to 1, not 0).
std::int64_t ScaleCost(double cost, std::int64_t scale);

inline constexpr std::uint64_t kDefaultDpCellBound = std::uint64_t{1} << 28;

// Dudzinski-Walukiewicz style DP on costs ScaleCost(c, scale) and capacity
// ScaleCost(capacity, scale). Optimal for the rounded instance; when every
// cost is a multiple of 1/scale this is the exact optimum. Space is
// O(groups * scaled capacity) for the backtracking table; exceeding
// max_cells throws kCapacityOverflow. Throws kInfeasible.
Solution SolveDynamicProgramming(const Instance& instance, std::int64_t scale,
                                 std::uint64_t max_cells = kDefaultDpCellBound);

}  // namespace chprune::mck

#endif  // CHPRUNE_MCK_H_
