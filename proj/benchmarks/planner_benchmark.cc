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

#include "chprune/allocation.h"
#include "chprune/cost_model.h"
#include "chprune/random.h"
#include "chprune/topology.h"

namespace chprune {
namespace {

struct ResNetSetup {
  Topology topology;
  CostLut lut;
  std::vector<PruneGroup> groups;

  ResNetSetup() {
    topology = ResNet50Topology({.image_size = 224, .freeze_stem = false});
    topology.ResolvePermitted(8, true);
    SynthLutOptions options;
    options.seed = 7;
    lut = SynthLut(topology, options);
    Rng rng(7);
    ImportanceMap importance;
    for (const LayerSpec& layer : topology.layers) {
      std::vector<double> scores(layer.c_in);
      for (double& s : scores) s = rng.Uniform();
      importance[layer.id] = std::move(scores);
    }
    groups = BuildGroups(topology, importance);
  }
};

const ResNetSetup& Setup() {
  static const ResNetSetup setup;
  return setup;
}

void BM_BuildInstance(benchmark::State& state) {
  const ResNetSetup& s = Setup();
  const LutCostModel model(s.lut);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildInstance(s.topology, s.groups, model, 50.0));
  }
}
BENCHMARK(BM_BuildInstance)->Unit(benchmark::kMillisecond);

// Full planner including decoupling refinements, target in percent of the
// unpruned cost.
void BM_PlanChannels(benchmark::State& state) {
  const ResNetSetup& s = Setup();
  const LutCostModel model(s.lut);
  const double target = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(PlanChannels(s.topology, s.groups, model, target));
  }
}
BENCHMARK(BM_PlanChannels)->Arg(30)->Arg(50)->Arg(80)->Unit(
    benchmark::kMillisecond);

}  // namespace
}  // namespace chprune
