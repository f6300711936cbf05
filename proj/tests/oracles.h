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

#ifndef CHPRUNE_TESTS_ORACLES_H_
#define CHPRUNE_TESTS_ORACLES_H_

// Reference computations written independently of the library code they
// check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "chprune/mck.h"
#include "chprune/micrograd.h"

namespace chprune::testing {

struct Enumerated {
  bool feasible = false;
  double value = 0.0;
  double cost = 0.0;
  std::vector<int> chosen;
};

// Odometer over every selection. Keeps the best value, then the lower cost,
// then the lexicographically smaller tuple (the odometer visits tuples in
// lexicographic order, so only strict improvements replace the incumbent).
inline Enumerated EnumerateMck(const mck::Instance& instance) {
  Enumerated best;
  const std::size_t n = instance.groups.size();
  std::vector<int> tuple(n, 0);
  while (true) {
    double value = 0.0;
    double cost = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
      value += instance.groups[g].values[tuple[g]];
      cost += instance.groups[g].costs[tuple[g]];
    }
    if (cost <= instance.capacity &&
        (!best.feasible || value > best.value ||
         (value == best.value && cost < best.cost))) {
      best = {true, value, cost, tuple};
    }
    std::size_t g = n;
    while (g > 0) {
      --g;
      if (++tuple[g] < instance.groups[g].size()) break;
      tuple[g] = 0;
      if (g == 0) return best;
    }
    if (n == 0) return best;
  }
}

// Sum of the k largest entries.
inline double TopSum(std::vector<double> scores, int k) {
  std::sort(scores.begin(), scores.end(), std::greater<>());
  return std::accumulate(scores.begin(), scores.begin() + k, 0.0);
}

inline double RelativeError(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct DifferenceReport {
  double worst = 0.0;
  std::int64_t checked = 0;
  std::int64_t skipped = 0;
};

// Central differences with step 1e-4 on every coordinate of `tensors`,
// compared with the gradients already stored in them. `loss` evaluates the
// objective and reports the ReLU sign pattern; coordinates whose
// perturbation changes the pattern sit on a kink and are skipped.
inline DifferenceReport CentralDifferences(
    const std::vector<grad::TensorPtr>& tensors,
    const std::function<double(std::vector<std::uint8_t>*)>& loss) {
  constexpr double kStep = 1e-4;
  DifferenceReport report;
  std::vector<std::uint8_t> base;
  loss(&base);
  for (const auto& t : tensors) {
    for (std::size_t k = 0; k < t->size(); ++k) {
      const double saved = t->data()[k];
      std::vector<std::uint8_t> up;
      std::vector<std::uint8_t> down;
      t->data()[k] = saved + kStep;
      const double f_up = loss(&up);
      t->data()[k] = saved - kStep;
      const double f_down = loss(&down);
      t->data()[k] = saved;
      if (up != base || down != base) {
        ++report.skipped;
        continue;
      }
      const double numeric = (f_up - f_down) / (2 * kStep);
      report.worst =
          std::max(report.worst, RelativeError(numeric, t->grad()[k]));
      ++report.checked;
    }
  }
  return report;
}

}  // namespace chprune::testing

#endif  // CHPRUNE_TESTS_ORACLES_H_
