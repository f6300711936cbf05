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

#ifndef CHPRUNE_SIMULATE_H_
#define CHPRUNE_SIMULATE_H_

// End-to-end soft-masking pruning on a small Conv-BN-ReLU chain trained on
// synthetic data: dense warmup, periodic cost-constrained re-planning of the
// input-channel masks with BN rescaling, then a frozen-mask cooldown.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chprune/allocation.h"
#include "chprune/cost_model.h"
#include "chprune/micrograd.h"
#include "chprune/schedule.h"
#include "chprune/topology.h"

namespace chprune {

// "30%" is a fraction of `full_cost`; "12.5" or "12.5ms" is absolute.
// Throws Error(kConfig) on anything else or a non-positive value.
double ParseTargetCost(std::string_view text, double full_cost);

// Class-conditional Gaussian images: every class has a fixed random mean
// image and samples add isotropic noise.
struct BlobDataset {
  int classes = 4;
  int samples = 256;
  int channels = 3;
  int image_size = 8;
  double noise = 1.0;

  std::vector<double> images;  // samples x channels x size x size
  std::vector<int> labels;

  void Generate(Rng& rng);
  // Copies the samples at `order[begin, begin + count)` into a batch.
  grad::TensorPtr Batch(const std::vector<int>& order, int begin, int count,
                        std::vector<int>* labels_out) const;
};

// Conv-BN-ReLU blocks following a chain topology, then global average
// pooling and a linear classifier. Block l's mask selects the input channels
// of convolution l; its BN is rescaled by that mask's kept fraction.
class ToyNet {
 public:
  struct Block {
    grad::MaskedConv conv;
    grad::BatchNorm bn;
  };

  // Throws Error(kConfig) unless `topology` is a chain whose layer l feeds
  // exactly layer l + 1.
  ToyNet(const Topology& topology, int classes, Rng& rng);

  // (N, classes, 1, 1) class scores.
  grad::TensorPtr Logits(grad::Tape& tape, const grad::TensorPtr& x);
  // Mean cross-entropy of Logits() against `labels`.
  grad::TensorPtr Forward(grad::Tape& tape, const grad::TensorPtr& x,
                          std::span<const int> labels);

  std::vector<Block>& blocks() { return blocks_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  grad::Linear& head() { return head_; }

  // Every trainable tensor: conv weights, gamma_orig, beta, head weight and
  // bias.
  std::vector<grad::TensorPtr> Parameters() const;
  void ZeroGrad();

 private:
  std::vector<Block> blocks_;
  grad::Linear head_;
};

struct TraceRecord {
  int epoch = 0;
  std::int64_t step = 0;  // global optimizer step, 1-based
  double target = 0.0;    // cost target in force this epoch
  double plan_cost = 0.0;
  std::vector<int> kept;  // per prune group
  int flips_on = 0;       // channels restored (0 -> 1)
  int flips_off = 0;      // channels removed (1 -> 0)
  int solves = 0;
  double solver_ms = 0.0;
};

// Per-layer importance samples for one step. The default uses the Taylor
// importance of the current gradients; tests substitute scripted drifts.
using ImportanceSource = std::function<ImportanceMap(
    int epoch, std::int64_t step, const ImportanceMap& measured)>;

struct SimConfig {
  std::uint64_t seed = 1;
  // Chain to train; ChainTopology(3, {16, 16, 32, 32}, 3, 8) when empty.
  Topology topology;
  BlobDataset data;
  int batch = 32;
  double learning_rate = 0.05;
  double sgd_momentum = 0.9;

  PruneSchedule schedule{.epochs = 12,
                         .warmup = 2,
                         .ramp = 4,
                         .cooldown = 3,
                         .rewire_every = 4};
  std::string target = "50%";
  double importance_momentum = 0.9;
  int multiple = 8;
  bool allow_layer_pruning = false;

  // Cost model: FLOPs if set, else `lut` if it has tables, else a synthetic
  // LUT generated from `seed`.
  bool use_flops = false;
  CostLut lut;
  PlannerOptions planner;
  ImportanceSource importance_source;
};

struct SimResult {
  std::vector<TraceRecord> trace;
  ChannelPlan final_plan;
  double start_cost = 0.0;
  double target_cost = 0.0;
  std::vector<double> epoch_loss;
  double final_accuracy = 0.0;
  // Input masks of every layer at the end of each epoch.
  std::vector<std::vector<std::vector<std::uint8_t>>> epoch_masks;
  // True when every masked input channel's dense weights are exactly zero
  // after the final permanent application.
  bool masks_applied = false;
  Topology topology;
};

// Throws Error(kInfeasible) when a target cannot be met and Error(kConfig)
// on invalid settings.
SimResult RunSimulation(const SimConfig& config);

// One JSON object per record, newline-terminated. Wall-clock solver time is
// left out so equal seeds give byte-identical traces.
std::string TraceToJsonLines(const std::vector<TraceRecord>& trace);
std::string TimingsToJsonLines(const std::vector<TraceRecord>& trace);

}  // namespace chprune

#endif  // CHPRUNE_SIMULATE_H_
