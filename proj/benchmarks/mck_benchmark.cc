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

#include <benchmark/benchmark.h>

#include <vector>

#include "chprune/mck.h"
#include "chprune/random.h"

namespace chprune {
namespace {

// Groups of `items` increasing (cost, value) pairs, capacity at half the
// total cost of the most expensive items.
mck::Instance MonotoneInstance(int groups, int items, std::uint64_t seed) {
  Rng rng(seed);
  mck::Instance instance;
  double dearest = 0.0;
  for (int g = 0; g < groups; ++g) {
    std::vector<double> values(items);
    std::vector<double> costs(items);
    double v = 0.0;
    double c = 0.0;
    for (int i = 0; i < items; ++i) {
      v += rng.Uniform(0.0, 1.0);
      c += rng.Uniform(0.0, 0.1);
      values[i] = v;
      costs[i] = std::round(c * 1000.0) / 1000.0;
    }
    dearest += costs.back();
    instance.groups.emplace_back(std::move(values), std::move(costs));
  }
  instance.capacity = std::round(dearest * 500.0) / 1000.0;
  return instance;
}

void BM_MeetInTheMiddle(benchmark::State& state) {
  const mck::Instance instance =
      MonotoneInstance(state.range(0), state.range(1), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mck::SolveMeetInTheMiddle(instance));
  }
}
BENCHMARK(BM_MeetInTheMiddle)
    ->Args({8, 16})
    ->Args({16, 32})
    ->Args({38, 64})
    ->Args({38, 257})
    ->Unit(benchmark::kMillisecond);

void BM_DynamicProgramming(benchmark::State& state) {
  const mck::Instance instance =
      MonotoneInstance(state.range(0), state.range(1), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mck::SolveDynamicProgramming(instance, 1000));
  }
}
BENCHMARK(BM_DynamicProgramming)
    ->Args({8, 16})
    ->Args({16, 32})
    ->Unit(benchmark::kMillisecond);

void BM_MergeFronts(benchmark::State& state) {
  const mck::Instance instance = MonotoneInstance(2, state.range(0), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mck::MergeFronts(
        instance.groups[0], instance.groups[1], instance.capacity));
  }
}
BENCHMARK(BM_MergeFronts)->Arg(64)->Arg(257)->Arg(1024);

void BM_Merge(benchmark::State& state) {
  const mck::Instance instance = MonotoneInstance(2, state.range(0), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mck::Merge(instance.groups[0], instance.groups[1], instance.capacity));
  }
}
BENCHMARK(BM_Merge)->Arg(64)->Arg(257)->Arg(1024);

}  // namespace
}  // namespace chprune
