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

#include "chprune/allocation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "chprune/error.h"

namespace chprune {

namespace {

std::vector<PruneGroup> GroupSkeleton(const Topology& topology) {
  std::vector<PruneGroup> groups;
  for (const std::string& tag : topology.GroupTags()) {
    PruneGroup group;
    group.tag = tag;
    std::set<int> permitted;
    for (std::size_t l = 0; l < topology.layers.size(); ++l) {
      const LayerSpec& layer = topology.layers[l];
      if (layer.group_tag() != tag) continue;
      if (group.layers.empty()) {
        group.c_in = layer.c_in;
      } else if (layer.c_in != group.c_in) {
        throw Error(ErrorCode::kShapeMismatch,
                    "group " + tag + ": layer " + layer.id + " has c_in " +
                        std::to_string(layer.c_in) + ", expected " +
                        std::to_string(group.c_in));
      }
      if (layer.permitted.empty()) {
        throw Error(ErrorCode::kConfig,
                    "layer " + layer.id + " has no permitted set");
      }
      group.layers.push_back(static_cast<int>(l));
      permitted.insert(layer.permitted.begin(), layer.permitted.end());
    }
    group.permitted.assign(permitted.begin(), permitted.end());
    group.current_kept = group.c_in;
    group.summed_importance.assign(group.c_in, 0.0);
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace

std::vector<PruneGroup> BuildGroups(const Topology& topology) {
  return GroupSkeleton(topology);
}

std::vector<PruneGroup> BuildGroups(const Topology& topology,
                                    const ImportanceMap& importance) {
  std::vector<PruneGroup> groups = GroupSkeleton(topology);
  for (PruneGroup& group : groups) {
    for (int l : group.layers) {
      const LayerSpec& layer = topology.layers[l];
      auto it = importance.find(layer.id);
      if (it == importance.end()) {
        throw Error(ErrorCode::kMissingImportance,
                    "no scores for layer " + layer.id);
      }
      const std::vector<double>& scores = it->second;
      if (static_cast<int>(scores.size()) != layer.c_in) {
        throw Error(ErrorCode::kShapeMismatch,
                    "layer " + layer.id + " has " +
                        std::to_string(scores.size()) + " scores for " +
                        std::to_string(layer.c_in) + " input channels");
      }
      for (int i = 0; i < layer.c_in; ++i) {
        if (!std::isfinite(scores[i]) || scores[i] < 0.0) {
          throw Error(ErrorCode::kInvalidArgument,
                      "layer " + layer.id +
                          " has a negative or non-finite score");
        }
        group.summed_importance[i] += scores[i];
      }
    }
  }
  return groups;
}

std::vector<int> GroupOfLayer(const Topology& topology,
                              const std::vector<PruneGroup>& groups) {
  std::vector<int> group_of(topology.layers.size(), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int l : groups[g].layers) group_of[l] = static_cast<int>(g);
  }
  return group_of;
}

std::vector<double> PrefixImportance(const std::vector<double>& importance,
                                     const std::vector<int>& counts) {
  std::vector<double> sorted = importance;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<double> values;
  values.reserve(counts.size());
  double sum = 0.0;
  int taken = 0;
  for (int j : counts) {
    while (taken < j) sum += sorted[taken++];
    values.push_back(sum);
  }
  return values;
}

std::vector<int> OutputCounts(const Topology& topology,
                              const std::vector<int>& group_of_layer,
                              const std::vector<int>& kept) {
  std::vector<int> outputs(topology.layers.size());
  for (std::size_t l = 0; l < topology.layers.size(); ++l) {
    const LayerSpec& layer = topology.layers[l];
    if (layer.downstream.empty()) {
      outputs[l] = layer.c_out;
      continue;
    }
    int out = 0;
    for (const std::string& next : layer.downstream) {
      out = std::max(out, kept[group_of_layer[topology.IndexOf(next)]]);
    }
    outputs[l] = out;
  }
  return outputs;
}

Encoding BuildInstance(const Topology& topology,
                       const std::vector<PruneGroup>& groups,
                       const CostModel& cost_model, double target) {
  const std::vector<int> group_of = GroupOfLayer(topology, groups);
  std::vector<int> current(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    current[g] = groups[g].current_kept;
  }
  const std::vector<int> outputs =
      OutputCounts(topology, group_of, current);

  Encoding encoding;
  encoding.target = target;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const PruneGroup& group = groups[g];
    std::vector<double> values =
        PrefixImportance(group.summed_importance, group.permitted);
    std::vector<double> costs;
    costs.reserve(group.permitted.size());
    for (int j : group.permitted) {
      double cost = 0.0;
      for (int l : group.layers) {
        cost += cost_model.Cost(topology.layers[l], j, outputs[l]);
      }
      costs.push_back(cost);
    }
    if (group.permitted.size() == 1) {
      encoding.fixed_groups.push_back(static_cast<int>(g));
      encoding.fixed_cost += costs[0];
      encoding.fixed_value += values[0];
      continue;
    }
    encoding.mck_to_group.push_back(static_cast<int>(g));
    encoding.counts.push_back(group.permitted);
    encoding.instance.groups.emplace_back(std::move(values), std::move(costs));
  }
  encoding.instance.capacity = target - encoding.fixed_cost;
  if (encoding.instance.capacity < 0.0) {
    std::ostringstream message;
    message << "frozen layers alone cost " << encoding.fixed_cost
            << ", above the target " << target;
    throw Error(ErrorCode::kInfeasible, message.str());
  }
  return encoding;
}

std::vector<int> ChannelPlan::KeptCounts() const {
  std::vector<int> kept;
  kept.reserve(groups.size());
  for (const GroupPlan& group : groups) kept.push_back(group.kept);
  return kept;
}

std::vector<std::uint8_t> TopMask(const std::vector<double>& importance,
                                  int kept) {
  std::vector<int> order(importance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return importance[a] > importance[b];
  });
  std::vector<std::uint8_t> mask(importance.size(), 0);
  for (int k = 0; k < kept; ++k) mask[order[k]] = 1;
  return mask;
}

double PlanCost(const Topology& topology,
                const std::vector<PruneGroup>& groups,
                const CostModel& cost_model, const std::vector<int>& kept) {
  const std::vector<int> group_of = GroupOfLayer(topology, groups);
  const std::vector<int> outputs =
      OutputCounts(topology, group_of, kept);
  double total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int l : groups[g].layers) {
      total += cost_model.Cost(topology.layers[l], kept[g], outputs[l]);
    }
  }
  return total;
}

namespace {

ChannelPlan PlanFromCounts(const Topology& topology,
                           const std::vector<PruneGroup>& groups,
                           const CostModel& cost_model,
                           const std::vector<int>& kept, double target) {
  ChannelPlan plan;
  plan.target = target;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const PruneGroup& group = groups[g];
    GroupPlan out;
    out.tag = group.tag;
    for (int l : group.layers) out.layers.push_back(topology.layers[l].id);
    out.kept = kept[g];
    out.mask = TopMask(group.summed_importance, kept[g]);
    for (int i = 0; i < group.c_in; ++i) {
      if (out.mask[i]) plan.kept_importance += group.summed_importance[i];
    }
    plan.groups.push_back(std::move(out));
  }
  plan.total_cost = PlanCost(topology, groups, cost_model, kept);
  return plan;
}

}  // namespace

ChannelPlan SelectMasks(const mck::Solution& solution,
                        const Encoding& encoding, const Topology& topology,
                        const std::vector<PruneGroup>& groups,
                        const CostModel& cost_model) {
  std::vector<int> kept(groups.size(), -1);
  for (int g : encoding.fixed_groups) kept[g] = groups[g].permitted[0];
  for (std::size_t k = 0; k < encoding.mck_to_group.size(); ++k) {
    kept[encoding.mck_to_group[k]] = encoding.counts[k][solution.chosen[k]];
  }
  return PlanFromCounts(topology, groups, cost_model, kept, encoding.target);
}

ChannelPlan FullPlan(const Topology& topology,
                     const std::vector<PruneGroup>& groups,
                     const CostModel& cost_model) {
  std::vector<int> kept;
  for (const PruneGroup& group : groups) kept.push_back(group.c_in);
  ChannelPlan plan = PlanFromCounts(topology, groups, cost_model, kept, 0.0);
  plan.target = plan.total_cost;
  return plan;
}

namespace {

std::vector<int> NarrowestCounts(const std::vector<PruneGroup>& groups) {
  std::vector<int> counts;
  for (const PruneGroup& group : groups) counts.push_back(group.permitted.front());
  return counts;
}

[[noreturn]] void ThrowInfeasible(const Topology& topology,
                                  const std::vector<PruneGroup>& groups,
                                  const CostModel& cost_model, double target,
                                  std::string reason) {
  // Per-group cost of the plan that keeps the fewest permitted channels
  // everywhere; the most expensive groups are the ones that bind.
  const std::vector<int> group_of = GroupOfLayer(topology, groups);
  const std::vector<int> narrow = NarrowestCounts(groups);
  const std::vector<int> outputs = OutputCounts(topology, group_of, narrow);
  std::vector<std::pair<double, std::string>> floors;
  double total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double cost = 0.0;
    for (int l : groups[g].layers) {
      cost += cost_model.Cost(topology.layers[l], narrow[g], outputs[l]);
    }
    total += cost;
    floors.emplace_back(cost, groups[g].tag);
  }
  std::stable_sort(floors.begin(), floors.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::string prefix = "Infeasible: ";
  if (reason.starts_with(prefix)) reason.erase(0, prefix.size());
  std::ostringstream message;
  message << reason << "; target " << target << " " << cost_model.units()
          << ", narrowest plan costs " << total << "; binding groups:";
  for (std::size_t k = 0; k < floors.size() && k < 5; ++k) {
    message << " " << floors[k].second << " (" << floors[k].first << ")";
  }
  throw Error(ErrorCode::kInfeasible, message.str());
}

mck::Solution Solve(const mck::Instance& instance,
                    const PlannerOptions& options) {
  if (options.solver == SolverKind::kDynamicProgramming) {
    return mck::SolveDynamicProgramming(instance, options.dp_scale);
  }
  return mck::SolveMeetInTheMiddle(instance);
}

}  // namespace

PlanOutcome PlanChannels(const Topology& topology,
                         const std::vector<PruneGroup>& groups,
                         const CostModel& cost_model, double target,
                         const PlannerOptions& options) {
  std::vector<PruneGroup> work = groups;
  std::set<std::vector<int>> seen;
  double capacity = target;
  // Once the current output counts make the target unreachable, every
  // layer is priced at the narrowest consumer counts instead and only the
  // capacity is tightened from then on.
  bool narrow = false;
  const int max_solves = 4 * std::max(1, options.max_refinements);
  PlanOutcome outcome;
  for (int attempt = 0; attempt < max_solves; ++attempt) {
    try {
      outcome.encoding = BuildInstance(topology, work, cost_model, capacity);
      outcome.solution = Solve(outcome.encoding.instance, options);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
      if (narrow) ThrowInfeasible(topology, work, cost_model, target, e.what());
      narrow = true;
      capacity = target;
      const std::vector<int> counts = NarrowestCounts(work);
      for (std::size_t g = 0; g < work.size(); ++g) {
        work[g].current_kept = counts[g];
      }
      continue;
    }
    ++outcome.solves;
    outcome.plan = SelectMasks(outcome.solution, outcome.encoding, topology,
                               work, cost_model);
    outcome.plan.target = target;
    if (outcome.plan.total_cost <= target) return outcome;

    // The decoupled estimate was optimistic. Re-solve around the new counts
    // first; if those were already tried, tighten the capacity by the
    // overshoot.
    const std::vector<int> kept = outcome.plan.KeptCounts();
    if (narrow || !seen.insert(kept).second ||
        outcome.solves >= options.max_refinements) {
      capacity -= (outcome.plan.total_cost - target) +
                  1e-12 * std::max(1.0, std::abs(target));
    }
    if (!narrow) {
      for (std::size_t g = 0; g < work.size(); ++g) {
        work[g].current_kept = kept[g];
      }
    }
  }
  ThrowInfeasible(topology, work, cost_model, target,
                  "no plan within the target after refinement");
}

}  // namespace chprune
