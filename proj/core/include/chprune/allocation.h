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

#ifndef CHPRUNE_ALLOCATION_H_
#define CHPRUNE_ALLOCATION_H_

// Turns per-channel importance scores and a layer-wise cost model into a
// multiple-choice knapsack instance, and turns its solution back into
// per-group channel masks.
//
// Layers that read the same input channels form a PruneGroup and share one
// mask. Choosing to keep p channels of a group keeps its p most important
// channels, so each group becomes one MCK item group with one item per
// permitted count p: value = sum of the p largest importances, cost = sum
// over member layers of T(p, current output count). The output count uses
// the kept count of the downstream group from the previous plan, which
// decouples consecutive layers.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "chprune/cost_model.h"
#include "chprune/mck.h"
#include "chprune/topology.h"

namespace chprune {

// Per-layer importance scores, one per input channel.
using ImportanceMap = std::unordered_map<std::string, std::vector<double>>;

struct PruneGroup {
  std::string tag;
  std::vector<int> layers;  // indices into Topology::layers
  int c_in = 0;
  std::vector<double> summed_importance;
  std::vector<int> permitted;  // ascending union of member permitted sets
  int current_kept = 0;        // kept count in the previous plan
};

// One group per shared-input tag, in order of first appearance. Importances
// of members are summed elementwise. current_kept starts at c_in. Requires
// resolved permitted sets. Throws kShapeMismatch when members disagree on
// c_in or a score vector has the wrong length, kMissingImportance when a
// layer has no scores, kInvalidArgument on negative or non-finite scores.
std::vector<PruneGroup> BuildGroups(const Topology& topology,
                                    const ImportanceMap& importance);

// Same grouping with all-zero importance; used for cost-only queries.
std::vector<PruneGroup> BuildGroups(const Topology& topology);

// Group index of every layer.
std::vector<int> GroupOfLayer(const Topology& topology,
                              const std::vector<PruneGroup>& groups);

struct Encoding {
  mck::Instance instance;
  // MCK group k encodes prune group mck_to_group[k]; its item i keeps
  // counts[k][i] channels.
  std::vector<int> mck_to_group;
  std::vector<std::vector<int>> counts;
  // Groups with a single permitted count are left out of the instance;
  // their cost is subtracted from the capacity and their value is constant.
  std::vector<int> fixed_groups;
  double fixed_cost = 0.0;
  double fixed_value = 0.0;
  double target = 0.0;
};

// Sum of the j largest entries for every j in `counts` (ascending).
std::vector<double> PrefixImportance(const std::vector<double>& importance,
                                     const std::vector<int>& counts);

// Output count of each layer under the given per-group kept counts: the
// largest kept count among the groups of its consumers, or c_out for
// network outputs.
std::vector<int> OutputCounts(const Topology& topology,
                              const std::vector<int>& group_of_layer,
                              const std::vector<int>& kept);

// Throws kLutMiss from the cost model, kInfeasible when the fixed groups
// alone exceed the target.
Encoding BuildInstance(const Topology& topology,
                       const std::vector<PruneGroup>& groups,
                       const CostModel& cost_model, double target);

struct GroupPlan {
  std::string tag;
  std::vector<std::string> layers;
  int kept = 0;
  std::vector<std::uint8_t> mask;
};

struct ChannelPlan {
  std::vector<GroupPlan> groups;
  // Cost of the plan itself: every layer evaluated at its own kept count
  // and the kept count of its consumers in this plan.
  double total_cost = 0.0;
  double target = 0.0;
  double kept_importance = 0.0;

  std::vector<int> KeptCounts() const;
};

// Indicator of the `kept` largest entries; ties go to the lower index.
std::vector<std::uint8_t> TopMask(const std::vector<double>& importance,
                                  int kept);

// Cost of running every layer with the given per-group kept counts.
double PlanCost(const Topology& topology,
                const std::vector<PruneGroup>& groups,
                const CostModel& cost_model, const std::vector<int>& kept);

ChannelPlan SelectMasks(const mck::Solution& solution,
                        const Encoding& encoding, const Topology& topology,
                        const std::vector<PruneGroup>& groups,
                        const CostModel& cost_model);

// The all-ones plan.
ChannelPlan FullPlan(const Topology& topology,
                     const std::vector<PruneGroup>& groups,
                     const CostModel& cost_model);

enum class SolverKind { kMeetInTheMiddle, kDynamicProgramming };

struct PlannerOptions {
  SolverKind solver = SolverKind::kMeetInTheMiddle;
  std::int64_t dp_scale = 1000;
  // Re-solves with the output counts of the previous solution when the
  // decoupled cost estimate under-predicts the plan's true cost.
  int max_refinements = 8;
};

struct PlanOutcome {
  ChannelPlan plan;
  mck::Solution solution;
  Encoding encoding;
  int solves = 0;
};

// Solves for a plan whose true cost is within `target`, starting from each
// group's current_kept. Throws kInfeasible (with the groups whose cheapest
// option costs the most named in the message) when no plan fits.
PlanOutcome PlanChannels(const Topology& topology,
                         const std::vector<PruneGroup>& groups,
                         const CostModel& cost_model, double target,
                         const PlannerOptions& options = {});

}  // namespace chprune

#endif  // CHPRUNE_ALLOCATION_H_
