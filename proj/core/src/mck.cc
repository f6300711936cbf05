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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "chprune/error.h"

namespace chprune::mck {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<int> Iota(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Slack applied to the capacity-derived filters inside the solver. Entries
// within rounding noise of the bound are kept; the final selection is checked
// against the exact capacity.
double FilterTolerance(double capacity) {
  return 1e-9 * std::max(1.0, std::abs(capacity));
}

}  // namespace

ItemGroup::ItemGroup(std::vector<double> values, std::vector<double> costs)
    : values(std::move(values)), costs(std::move(costs)) {
  labels = Iota(static_cast<int>(this->values.size()));
}

ItemGroup::ItemGroup(std::vector<double> values, std::vector<double> costs,
                     std::vector<int> labels)
    : values(std::move(values)),
      costs(std::move(costs)),
      labels(std::move(labels)) {}

void Instance::Validate() const {
  if (!std::isfinite(capacity) || capacity < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "capacity must be finite and nonnegative");
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const ItemGroup& group = groups[g];
    const std::string where = "group " + std::to_string(g);
    if (group.values.empty()) {
      throw Error(ErrorCode::kInvalidArgument, where + " is empty");
    }
    if (group.costs.size() != group.values.size() ||
        group.labels.size() != group.values.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  where + " has mismatched values/costs/labels lengths");
    }
    for (int k = 0; k < group.size(); ++k) {
      if (!std::isfinite(group.values[k])) {
        throw Error(ErrorCode::kInvalidArgument,
                    where + " has a non-finite value");
      }
      if (!std::isfinite(group.costs[k]) || group.costs[k] < 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    where + " has a negative or non-finite cost");
      }
    }
  }
}

Solution MakeSolution(const Instance& instance, std::vector<int> chosen) {
  Solution solution;
  for (std::size_t g = 0; g < chosen.size(); ++g) {
    solution.total_value += instance.groups[g].values[chosen[g]];
    solution.total_cost += instance.groups[g].costs[chosen[g]];
  }
  solution.chosen = std::move(chosen);
  return solution;
}

ParetoFront Condense(std::span<const double> values,
                     std::span<const double> costs, double capacity) {
  if (values.size() != costs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "condense: values and costs differ in length");
  }
  std::vector<int> order;
  order.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (costs[i] <= capacity) order.push_back(static_cast<int>(i));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (costs[a] != costs[b]) return costs[a] < costs[b];
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  ParetoFront front;
  double best = kNegInf;
  for (int i : order) {
    if (values[i] > best) {
      best = values[i];
      front.values.push_back(values[i]);
      front.costs.push_back(costs[i]);
      front.backrefs.push_back(i);
    }
  }
  if (front.values.empty()) {
    throw Error(ErrorCode::kEmptyFront,
                "no item fits capacity " + std::to_string(capacity));
  }
  return front;
}

MergeResult Merge(const ItemGroup& a, const ItemGroup& b, double capacity) {
  if (a.size() == 0 || b.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "merge: empty group");
  }
  const std::size_t n = static_cast<std::size_t>(b.size());
  const std::size_t pairs = static_cast<std::size_t>(a.size()) * n;
  if (pairs > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw Error(ErrorCode::kTooLarge, "merge: too many pairs");
  }
  std::vector<double> values(pairs);
  std::vector<double> costs(pairs);
  for (int i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      values[i * n + j] = a.values[i] + b.values[j];
      costs[i * n + j] = a.costs[i] + b.costs[j];
    }
  }
  ParetoFront front = Condense(values, costs, capacity);
  MergeResult result;
  result.left.reserve(front.size());
  result.right.reserve(front.size());
  for (int u : front.backrefs) {
    result.left.push_back(static_cast<int>(u / n));
    result.right.push_back(static_cast<int>(u % n));
  }
  result.group = ItemGroup(std::move(front.values), std::move(front.costs),
                           std::move(front.backrefs));
  return result;
}

MergeResult MergeFronts(const ItemGroup& a, const ItemGroup& b,
                        double capacity) {
  if (a.size() == 0 || b.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "merge: empty group");
  }
  struct Cursor {
    double cost;
    double value;
    int row;
    int col;
  };
  // Min-heap on (cost, -value, row, col): the first pair popped at a given
  // cost is the best one there, and identical pairs pop in index order.
  auto later = [](const Cursor& x, const Cursor& y) {
    if (x.cost != y.cost) return x.cost > y.cost;
    if (x.value != y.value) return x.value < y.value;
    if (x.row != y.row) return x.row > y.row;
    return x.col > y.col;
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(
      later);
  const int n = b.size();
  auto push = [&](int row, int col) {
    if (col >= n) return;
    const double cost = a.costs[row] + b.costs[col];
    if (cost > capacity) return;
    heap.push({cost, a.values[row] + b.values[col], row, col});
  };
  for (int i = 0; i < a.size(); ++i) push(i, 0);

  MergeResult result;
  std::vector<double> values;
  std::vector<double> costs;
  std::vector<int> labels;
  double best = kNegInf;
  while (!heap.empty()) {
    const Cursor top = heap.top();
    heap.pop();
    if (top.value > best) {
      best = top.value;
      values.push_back(top.value);
      costs.push_back(top.cost);
      labels.push_back(top.row * n + top.col);
      result.left.push_back(top.row);
      result.right.push_back(top.col);
      push(top.row, top.col + 1);
      continue;
    }
    // Skip to the first column whose value in this row beats `best`. Values
    // in b increase strictly, so the predicate is monotone.
    const double row_value = a.values[top.row];
    auto first = b.values.begin() + top.col + 1;
    auto it = std::partition_point(first, b.values.end(), [&](double v) {
      return !(row_value + v > best);
    });
    push(top.row, static_cast<int>(it - b.values.begin()));
  }
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyFront,
                "no pair fits capacity " + std::to_string(capacity));
  }
  result.group =
      ItemGroup(std::move(values), std::move(costs), std::move(labels));
  return result;
}

Solution SolveBruteForce(const Instance& instance,
                         std::uint64_t max_combinations) {
  instance.Validate();
  const std::size_t num_groups = instance.groups.size();
  std::uint64_t combinations = 1;
  for (const ItemGroup& group : instance.groups) {
    combinations *= static_cast<std::uint64_t>(group.size());
    if (combinations > max_combinations) {
      throw Error(ErrorCode::kTooLarge,
                  "enumeration exceeds " + std::to_string(max_combinations));
    }
  }
  std::vector<int> tuple(num_groups, 0);
  std::vector<int> best_tuple;
  bool found = false;
  double best_value = kNegInf;
  double best_cost = 0.0;
  // Odometer order is lexicographic, so only strict improvements replace
  // the incumbent.
  for (std::uint64_t count = 0; count < combinations; ++count) {
    double value = 0.0;
    double cost = 0.0;
    for (std::size_t g = 0; g < num_groups; ++g) {
      value += instance.groups[g].values[tuple[g]];
      cost += instance.groups[g].costs[tuple[g]];
    }
    if (cost <= instance.capacity &&
        (!found || value > best_value ||
         (value == best_value && cost < best_cost))) {
      best_value = value;
      best_cost = cost;
      best_tuple = tuple;
      found = true;
    }
    for (std::size_t g = num_groups; g-- > 0;) {
      if (++tuple[g] < instance.groups[g].size()) break;
      tuple[g] = 0;
    }
  }
  if (!found) {
    throw Error(ErrorCode::kInfeasible, "no selection fits the capacity");
  }
  return MakeSolution(instance, std::move(best_tuple));
}

namespace {

// A front in the merge tree. Leaves map entries to item positions of one
// instance group; inner nodes map entries to entries of two child fronts.
struct FrontNode {
  int group = -1;
  std::vector<int> items;
  int left = -1;
  int right = -1;
  std::vector<int> left_entry;
  std::vector<int> right_entry;
};

struct LiveFront {
  ItemGroup front;
  int node;
};

void Backtrack(const std::vector<FrontNode>& nodes, int node, int entry,
               std::vector<int>& chosen) {
  std::vector<std::pair<int, int>> stack = {{node, entry}};
  while (!stack.empty()) {
    auto [id, k] = stack.back();
    stack.pop_back();
    const FrontNode& n = nodes[id];
    if (n.group >= 0) {
      chosen[n.group] = n.items[k];
    } else {
      stack.push_back({n.left, n.left_entry[k]});
      stack.push_back({n.right, n.right_entry[k]});
    }
  }
}

// Linear-relaxation machinery used to discard front entries that cannot be
// part of any optimal selection. For each group the upper concave hull of
// its front is decomposed into segments of decreasing slope; the relaxed
// optimum for a set of groups under a budget takes every hull's first vertex
// and then fills the budget with the steepest segments first.
struct HullSegment {
  double cost;
  double value;
  double slope;
  int group;
  int from_entry;
  int to_entry;
};

std::vector<HullSegment> HullSegments(const ItemGroup& front, int group) {
  std::vector<int> hull = {0};
  for (int k = 1; k < front.size(); ++k) {
    while (hull.size() >= 2) {
      const int p = hull[hull.size() - 2];
      const int q = hull.back();
      // Drop q if it lies on or below the chord p -> k.
      const double lhs = (front.values[q] - front.values[p]) *
                         (front.costs[k] - front.costs[p]);
      const double rhs = (front.values[k] - front.values[p]) *
                         (front.costs[q] - front.costs[p]);
      if (lhs <= rhs) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(k);
  }
  std::vector<HullSegment> segments;
  for (std::size_t h = 1; h < hull.size(); ++h) {
    const int p = hull[h - 1];
    const int q = hull[h];
    const double dc = front.costs[q] - front.costs[p];
    const double dv = front.values[q] - front.values[p];
    segments.push_back({dc, dv, dv / dc, group, p, q});
  }
  return segments;
}

// Relaxed value function of a fixed set of groups: an upper bound on the best
// value any selection from those groups reaches within a budget.
class RelaxedBound {
 public:
  RelaxedBound(const std::vector<HullSegment>& sorted_segments,
               const std::vector<double>& base_costs,
               const std::vector<double>& base_values,
               const std::vector<char>& include) {
    for (std::size_t g = 0; g < include.size(); ++g) {
      if (include[g]) {
        base_cost_ += base_costs[g];
        base_value_ += base_values[g];
      }
    }
    prefix_cost_.push_back(0.0);
    prefix_value_.push_back(0.0);
    for (const HullSegment& s : sorted_segments) {
      if (!include[s.group]) continue;
      prefix_cost_.push_back(prefix_cost_.back() + s.cost);
      prefix_value_.push_back(prefix_value_.back() + s.value);
      slopes_.push_back(s.slope);
    }
  }

  // `budget` may fall short of the base cost by rounding when a selection
  // fills the capacity exactly, so shortfalls up to `tolerance` count as 0.
  double operator()(double budget, double tolerance) const {
    double r = budget - base_cost_;
    if (r < -tolerance) return kNegInf;
    r = std::max(r, 0.0);
    const std::size_t k =
        std::upper_bound(prefix_cost_.begin(), prefix_cost_.end(), r) -
        prefix_cost_.begin() - 1;
    double value = base_value_ + prefix_value_[k];
    if (k < slopes_.size()) value += (r - prefix_cost_[k]) * slopes_[k];
    return value;
  }

 private:
  double base_cost_ = 0.0;
  double base_value_ = 0.0;
  std::vector<double> prefix_cost_;
  std::vector<double> prefix_value_;
  std::vector<double> slopes_;
};

// Drops entries whose value plus the relaxed bound of the remaining groups
// falls strictly below `incumbent`. Entries are ordered by cost, so the
// surviving subsequence is still a Pareto front.
void PruneByBound(LiveFront& live, FrontNode& node, const RelaxedBound& rest,
                  double capacity, double incumbent) {
  const double tolerance = FilterTolerance(capacity);
  const double margin = 1e-9 * std::max(1.0, std::abs(incumbent));
  ItemGroup& front = live.front;
  int kept = 0;
  const bool leaf = node.group >= 0;
  for (int k = 0; k < front.size(); ++k) {
    if (front.values[k] + rest(capacity - front.costs[k], tolerance) <
        incumbent - margin) {
      continue;
    }
    front.values[kept] = front.values[k];
    front.costs[kept] = front.costs[k];
    front.labels[kept] = front.labels[k];
    if (leaf) {
      node.items[kept] = node.items[k];
    } else {
      node.left_entry[kept] = node.left_entry[k];
      node.right_entry[kept] = node.right_entry[k];
    }
    ++kept;
  }
  front.values.resize(kept);
  front.costs.resize(kept);
  front.labels.resize(kept);
  if (leaf) {
    node.items.resize(kept);
  } else {
    node.left_entry.resize(kept);
    node.right_entry.resize(kept);
  }
}

}  // namespace

Solution SolveMeetInTheMiddle(const Instance& instance, MimStats* stats) {
  instance.Validate();
  MimStats local_stats;
  const double capacity = instance.capacity;
  const double tolerance = FilterTolerance(capacity);
  const int num_groups = static_cast<int>(instance.groups.size());
  if (num_groups == 0) return Solution{};

  // Every group must pay at least its cheapest item, so a partial selection
  // over any subset of groups can use at most min_cost(subset) + slack.
  double min_total = 0.0;
  for (const ItemGroup& group : instance.groups) {
    min_total += *std::min_element(group.costs.begin(), group.costs.end());
  }
  const double slack = capacity - min_total;
  if (slack < -tolerance) {
    throw Error(ErrorCode::kInfeasible,
                "sum of cheapest items exceeds the capacity");
  }

  std::vector<FrontNode> nodes;
  std::vector<LiveFront> live;
  std::vector<std::vector<char>> members;
  for (int g = 0; g < num_groups; ++g) {
    const ItemGroup& group = instance.groups[g];
    const double cheapest =
        *std::min_element(group.costs.begin(), group.costs.end());
    ParetoFront front =
        Condense(group.values, group.costs,
                 std::min(capacity, cheapest + slack) + tolerance);
    FrontNode node;
    node.group = g;
    node.items = front.backrefs;
    nodes.push_back(std::move(node));
    live.push_back({ItemGroup(std::move(front.values), std::move(front.costs),
                              std::move(front.backrefs)),
                    g});
    members.emplace_back(num_groups, 0);
    members.back()[g] = 1;
  }

  // Relaxation over the condensed groups and a greedy incumbent built by
  // walking the hull segments steepest first.
  std::vector<HullSegment> segments;
  std::vector<double> base_costs(num_groups);
  std::vector<double> base_values(num_groups);
  for (int g = 0; g < num_groups; ++g) {
    const ItemGroup& front = live[g].front;
    base_costs[g] = front.costs.front();
    base_values[g] = front.values.front();
    std::vector<HullSegment> hull = HullSegments(front, g);
    segments.insert(segments.end(), hull.begin(), hull.end());
  }
  std::sort(segments.begin(), segments.end(),
            [](const HullSegment& a, const HullSegment& b) {
              if (a.slope != b.slope) return a.slope > b.slope;
              if (a.group != b.group) return a.group < b.group;
              return a.from_entry < b.from_entry;
            });
  double incumbent = kNegInf;
  {
    std::vector<int> at(num_groups, 0);
    std::vector<char> blocked(num_groups, 0);
    double budget = capacity - std::accumulate(base_costs.begin(),
                                               base_costs.end(), 0.0);
    for (const HullSegment& s : segments) {
      if (blocked[s.group]) continue;
      if (s.cost <= budget) {
        at[s.group] = s.to_entry;
        budget -= s.cost;
      } else {
        blocked[s.group] = 1;
      }
    }
    std::vector<int> chosen(num_groups);
    for (int g = 0; g < num_groups; ++g) {
      chosen[g] = live[g].front.labels[at[g]];
    }
    Solution greedy = MakeSolution(instance, std::move(chosen));
    if (greedy.total_cost <= capacity) incumbent = greedy.total_value;
  }
  auto prune = [&](LiveFront& front, const std::vector<char>& in_front) {
    if (incumbent == kNegInf) return;
    std::vector<char> rest(num_groups);
    for (int g = 0; g < num_groups; ++g) rest[g] = !in_front[g];
    RelaxedBound bound(segments, base_costs, base_values, rest);
    PruneByBound(front, nodes[front.node], bound, capacity, incumbent);
    if (front.front.size() == 0) {
      throw Error(ErrorCode::kInfeasible, "bound pruning emptied a front");
    }
  };
  for (int g = 0; g < num_groups; ++g) {
    prune(live[g], members[g]);
    local_stats.largest_front =
        std::max<std::int64_t>(local_stats.largest_front, live[g].front.size());
  }

  // Pair the l-th front with the l-th from the end; an odd middle front
  // passes through. Stop when two fronts remain.
  while (live.size() > 2) {
    const std::size_t count = live.size();
    std::vector<LiveFront> next;
    std::vector<std::vector<char>> next_members;
    next.reserve((count + 1) / 2);
    for (std::size_t l = 0; l < count / 2; ++l) {
      const LiveFront& a = live[l];
      const LiveFront& b = live[count - 1 - l];
      const double bound = std::min(
          capacity, a.front.costs.front() + b.front.costs.front() + slack);
      MergeResult merged = MergeFronts(a.front, b.front, bound + tolerance);
      FrontNode node;
      node.left = a.node;
      node.right = b.node;
      node.left_entry = std::move(merged.left);
      node.right_entry = std::move(merged.right);
      nodes.push_back(std::move(node));
      ++local_stats.merges;
      std::vector<char> in_front = members[l];
      for (int g = 0; g < num_groups; ++g) {
        in_front[g] |= members[count - 1 - l][g];
      }
      next.push_back({std::move(merged.group),
                      static_cast<int>(nodes.size()) - 1});
      prune(next.back(), in_front);
      local_stats.largest_front = std::max<std::int64_t>(
          local_stats.largest_front, next.back().front.size());
      next_members.push_back(std::move(in_front));
    }
    if (count % 2 == 1) {
      next.push_back(std::move(live[count / 2]));
      next_members.push_back(std::move(members[count / 2]));
    }
    live = std::move(next);
    members = std::move(next_members);
  }

  // Fronts sum costs in merge order. A pair whose merged cost lands within
  // rounding of the capacity, on either side, is decided by the group-order total that the
  // returned Solution reports.
  auto fits = [&](int node_a, int entry_a, int node_b, int entry_b,
                  double merged_cost) {
    if (merged_cost < capacity - tolerance) return true;
    if (merged_cost > capacity + tolerance) return false;
    std::vector<int> probe(num_groups, -1);
    Backtrack(nodes, node_a, entry_a, probe);
    if (node_b >= 0) Backtrack(nodes, node_b, entry_b, probe);
    return MakeSolution(instance, std::move(probe)).total_cost <= capacity;
  };

  std::vector<int> chosen(num_groups, -1);
  if (live.size() == 1) {
    const ItemGroup& front = live[0].front;
    int pick = -1;
    for (int k = front.size() - 1; k >= 0; --k) {
      if (fits(live[0].node, k, -1, 0, front.costs[k])) {
        pick = k;
        break;
      }
    }
    if (pick < 0) {
      throw Error(ErrorCode::kInfeasible, "no item fits the capacity");
    }
    Backtrack(nodes, live[0].node, pick, chosen);
  } else {
    // Sort-and-sweep over the last two fronts: both are sorted by cost, so
    // the best partner for successive entries of `a` moves monotonically
    // down `b`.
    const ItemGroup& a = live[0].front;
    const ItemGroup& b = live[1].front;
    local_stats.final_left = a.size();
    local_stats.final_right = b.size();
    int best_a = -1;
    int best_b = -1;
    double best_value = kNegInf;
    double best_cost = 0.0;
    int j = b.size() - 1;
    for (int i = 0; i < a.size() && j >= 0; ++i) {
      while (j >= 0 &&
             !fits(live[0].node, i, live[1].node, j, a.costs[i] + b.costs[j])) {
        --j;
      }
      if (j < 0) break;
      const double value = a.values[i] + b.values[j];
      const double cost = a.costs[i] + b.costs[j];
      if (best_a < 0 || value > best_value ||
          (value == best_value && cost < best_cost)) {
        best_a = i;
        best_b = j;
        best_value = value;
        best_cost = cost;
      }
    }
    if (best_a < 0) {
      throw Error(ErrorCode::kInfeasible, "no selection fits the capacity");
    }
    Backtrack(nodes, live[0].node, best_a, chosen);
    Backtrack(nodes, live[1].node, best_b, chosen);
  }
  if (stats != nullptr) *stats = local_stats;
  return MakeSolution(instance, std::move(chosen));
}

std::int64_t ScaleCost(double cost, std::int64_t scale) {
  const double scaled = cost * static_cast<double>(scale);
  const double nearest = std::nearbyint(scaled);
  if (std::abs(scaled - nearest) <= 1e-9 * std::max(1.0, std::abs(scaled))) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::floor(scaled));
}

Solution SolveDynamicProgramming(const Instance& instance, std::int64_t scale,
                                 std::uint64_t max_cells) {
  instance.Validate();
  if (scale < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  }
  const std::size_t num_groups = instance.groups.size();
  const std::int64_t capacity = ScaleCost(instance.capacity, scale);
  const std::uint64_t width = static_cast<std::uint64_t>(capacity) + 1;
  if (width > max_cells || num_groups * width > max_cells) {
    throw Error(ErrorCode::kCapacityOverflow,
                "scaled capacity " + std::to_string(capacity) + " x " +
                    std::to_string(num_groups) + " groups exceeds " +
                    std::to_string(max_cells) + " cells");
  }
  std::vector<std::vector<std::int64_t>> weights(num_groups);
  for (std::size_t g = 0; g < num_groups; ++g) {
    for (double c : instance.groups[g].costs) {
      weights[g].push_back(ScaleCost(c, scale));
    }
  }

  // best[w]: max value over the groups processed so far with scaled cost
  // at most w.
  std::vector<double> best(width, 0.0);
  std::vector<double> next(width);
  std::vector<std::int32_t> choice(num_groups * width, -1);
  for (std::size_t g = 0; g < num_groups; ++g) {
    const ItemGroup& group = instance.groups[g];
    std::int32_t* row = choice.data() + g * width;
    for (std::uint64_t w = 0; w < width; ++w) {
      double top = kNegInf;
      for (int k = 0; k < group.size(); ++k) {
        const std::int64_t wk = weights[g][k];
        if (wk > static_cast<std::int64_t>(w)) continue;
        const double prev = best[w - wk];
        if (prev == kNegInf) continue;
        const double value = prev + group.values[k];
        if (value > top) {
          top = value;
          row[w] = k;
        }
      }
      next[w] = top;
    }
    best.swap(next);
  }
  if (best[capacity] == kNegInf) {
    throw Error(ErrorCode::kInfeasible, "no selection fits the capacity");
  }
  std::vector<int> chosen(num_groups);
  std::int64_t w = capacity;
  for (std::size_t g = num_groups; g-- > 0;) {
    const int k = choice[g * width + w];
    chosen[g] = k;
    w -= weights[g][k];
  }
  return MakeSolution(instance, std::move(chosen));
}

}  // namespace chprune::mck
