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

#ifndef CHPRUNE_SCHEDULE_H_
#define CHPRUNE_SCHEDULE_H_

#include <cstdint>
#include <functional>
#include <mutex>
#include <vector>

namespace chprune {

// Epoch layout: [0, warmup) dense training; [warmup, warmup + ramp) the cost
// target descends from start_cost to target_cost; [warmup + ramp,
// epochs - cooldown) masks keep refining at the final target; the last
// `cooldown` epochs train with frozen masks.
struct PruneSchedule {
  int epochs = 90;
  int warmup = 10;
  int ramp = 30;
  int cooldown = 45;
  int rewire_every = 80;
  double start_cost = 1.0;
  double target_cost = 1.0;

  // Throws Error(kConfig) unless warmup + ramp <= epochs - cooldown,
  // rewire_every >= 1 and 0 < target_cost <= start_cost.
  void Validate() const;

  bool InRewireWindow(int epoch) const {
    return epoch >= warmup && epoch < epochs - cooldown;
  }

  // Cost target in force during `epoch`. Before warmup ends this is
  // start_cost; from warmup + ramp on it is exactly target_cost.
  double IntermediateTarget(int epoch) const;

  // True iff `step` (1-based count of steps since the rewiring window
  // opened) is a multiple of rewire_every and `epoch` lies in the window.
  bool ShouldRewire(std::int64_t step, int epoch) const;
};

// Geometric interpolation between start and target over the ramp:
// start * (target / start)^min(1, (e - warmup + 1) / ramp).
double GeometricTarget(const PruneSchedule& schedule, int epoch);

// Exponential moving average of per-group importance vectors:
// running <- momentum * running + (1 - momentum) * sample.
// Single writer; Read() returns a consistent snapshot under concurrent use.
class ImportanceAccumulator {
 public:
  explicit ImportanceAccumulator(double momentum = 0.9);

  // The first call fixes the shapes; later samples must match them.
  // Throws Error(kShapeMismatch) otherwise, kInvalidArgument on negative or
  // non-finite entries.
  void Accumulate(const std::vector<std::vector<double>>& sample);
  std::vector<std::vector<double>> Read() const;
  void Reset();

  double momentum() const { return momentum_; }
  std::int64_t steps_since_reset() const;

 private:
  double momentum_;
  mutable std::mutex mu_;
  std::vector<std::vector<double>> running_;
  std::int64_t steps_ = 0;
};

}  // namespace chprune

#endif  // CHPRUNE_SCHEDULE_H_
