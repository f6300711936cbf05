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

#include "chprune/schedule.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "chprune/error.h"

namespace chprune {

void PruneSchedule::Validate() const {
  if (warmup < 0 || ramp < 0 || cooldown < 0 || epochs <= 0) {
    throw Error(ErrorCode::kConfig, "schedule epochs must be nonnegative");
  }
  if (warmup + ramp > epochs - cooldown) {
    throw Error(ErrorCode::kConfig,
                "warmup + ramp (" + std::to_string(warmup + ramp) +
                    ") exceeds epochs - cooldown (" +
                    std::to_string(epochs - cooldown) + ")");
  }
  if (rewire_every < 1) {
    throw Error(ErrorCode::kConfig, "rewire period must be >= 1");
  }
  if (!(target_cost > 0.0) || !(target_cost <= start_cost)) {
    throw Error(ErrorCode::kConfig,
                "target cost must satisfy 0 < target <= start cost");
  }
}

double GeometricTarget(const PruneSchedule& schedule, int epoch) {
  if (epoch < schedule.warmup) return schedule.start_cost;
  if (schedule.ramp == 0) return schedule.target_cost;
  const double progress = std::min(
      1.0, static_cast<double>(epoch - schedule.warmup + 1) / schedule.ramp);
  if (progress >= 1.0) return schedule.target_cost;
  return schedule.start_cost *
         std::pow(schedule.target_cost / schedule.start_cost, progress);
}

double PruneSchedule::IntermediateTarget(int epoch) const {
  return GeometricTarget(*this, epoch);
}

bool PruneSchedule::ShouldRewire(std::int64_t step, int epoch) const {
  return step >= 0 && step % rewire_every == 0 && InRewireWindow(epoch);
}

ImportanceAccumulator::ImportanceAccumulator(double momentum)
    : momentum_(momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "momentum must lie in [0, 1)");
  }
}

void ImportanceAccumulator::Accumulate(
    const std::vector<std::vector<double>>& sample) {
  for (const auto& v : sample) {
    for (double x : v) {
      if (!std::isfinite(x) || x < 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "importance samples must be finite and nonnegative");
      }
    }
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (running_.empty()) {
    running_.resize(sample.size());
    for (std::size_t g = 0; g < sample.size(); ++g) {
      running_[g].assign(sample[g].size(), 0.0);
    }
  }
  if (sample.size() != running_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "importance group count changed");
  }
  for (std::size_t g = 0; g < sample.size(); ++g) {
    if (sample[g].size() != running_[g].size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "importance vector " + std::to_string(g) +
                      " changed length");
    }
  }
  for (std::size_t g = 0; g < sample.size(); ++g) {
    for (std::size_t i = 0; i < sample[g].size(); ++i) {
      running_[g][i] =
          momentum_ * running_[g][i] + (1.0 - momentum_) * sample[g][i];
    }
  }
  ++steps_;
}

std::vector<std::vector<double>> ImportanceAccumulator::Read() const {
  std::lock_guard<std::mutex> lock(mu_);
  return running_;
}

void ImportanceAccumulator::Reset() {
  std::lock_guard<std::mutex> lock(mu_);
  for (auto& v : running_) std::fill(v.begin(), v.end(), 0.0);
  steps_ = 0;
}

std::int64_t ImportanceAccumulator::steps_since_reset() const {
  std::lock_guard<std::mutex> lock(mu_);
  return steps_;
}

}  // namespace chprune
