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

#include "chprune/simulate.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "chprune/error.h"

namespace chprune {

namespace {

std::string_view Trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

// Independent stream for each consumer of randomness.
std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq sequence{static_cast<std::uint32_t>(seed),
                         static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(stream)};
  std::uint32_t parts[2];
  sequence.generate(parts, parts + 2);
  return (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
}

}  // namespace

double ParseTargetCost(std::string_view text, double full_cost) {
  std::string_view body = Trim(text);
  bool percent = false;
  if (body.ends_with('%')) {
    percent = true;
    body.remove_suffix(1);
  } else if (body.ends_with("ms")) {
    body.remove_suffix(2);
  }
  body = Trim(body);
  const std::string number(body);
  char* end = nullptr;
  const double value = std::strtod(number.c_str(), &end);
  if (number.empty() || end != number.c_str() + number.size() ||
      !std::isfinite(value) || value <= 0.0) {
    throw Error(ErrorCode::kConfig,
                "target cost must be a positive number of ms or a "
                "percentage, got \"" + std::string(text) + "\"");
  }
  return percent ? full_cost * value / 100.0 : value;
}

void BlobDataset::Generate(Rng& rng) {
  if (classes < 2 || samples < 1 || channels < 1 || image_size < 1) {
    throw Error(ErrorCode::kConfig, "dataset dimensions must be positive");
  }
  const int pixels = channels * image_size * image_size;
  std::vector<double> means(static_cast<std::size_t>(classes) * pixels);
  for (double& m : means) m = rng.Normal();
  images.assign(static_cast<std::size_t>(samples) * pixels, 0.0);
  labels.assign(samples, 0);
  for (int n = 0; n < samples; ++n) {
    labels[n] = n % classes;
    const double* mean = means.data() + static_cast<std::size_t>(labels[n]) * pixels;
    double* image = images.data() + static_cast<std::size_t>(n) * pixels;
    for (int p = 0; p < pixels; ++p) image[p] = mean[p] + noise * rng.Normal();
  }
}

grad::TensorPtr BlobDataset::Batch(const std::vector<int>& order, int begin,
                                   int count,
                                   std::vector<int>* labels_out) const {
  const std::size_t pixels =
      static_cast<std::size_t>(channels) * image_size * image_size;
  auto batch = grad::MakeTensor(count, channels, image_size, image_size);
  labels_out->resize(count);
  for (int k = 0; k < count; ++k) {
    const int n = order[begin + k];
    std::copy_n(images.begin() + n * pixels, pixels,
                batch->data().begin() + k * pixels);
    (*labels_out)[k] = labels[n];
  }
  return batch;
}

ToyNet::ToyNet(const Topology& topology, int classes, Rng& rng) {
  const auto& layers = topology.layers;
  if (layers.empty()) throw Error(ErrorCode::kConfig, "empty network");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool last = l + 1 == layers.size();
    const bool chained = last ? layers[l].downstream.empty()
                              : layers[l].downstream.size() == 1 &&
                                    layers[l].downstream[0] == layers[l + 1].id;
    if (!chained || !layers[l].shared_input_group.empty()) {
      throw Error(ErrorCode::kConfig,
                  "simulation needs a plain chain; layer " + layers[l].id +
                      " breaks it");
    }
    if (layers[l].kernel != 1 && layers[l].kernel != 3) {
      throw Error(ErrorCode::kConfig, "simulation supports kernels 1 and 3");
    }
    blocks_.push_back(
        {grad::MaskedConv(layers[l].c_in, layers[l].c_out, layers[l].kernel,
                          rng),
         grad::BatchNorm(layers[l].c_out)});
  }
  head_ = grad::Linear(layers.back().c_out, classes, rng);
}

grad::TensorPtr ToyNet::Logits(grad::Tape& tape, const grad::TensorPtr& x) {
  grad::TensorPtr h = x;
  for (Block& block : blocks_) {
    h = grad::Relu(tape,
                   grad::BatchNorm2d(tape, grad::Conv2d(tape, h, block.conv),
                                     block.bn));
  }
  return grad::LinearForward(tape, grad::GlobalAvgPool(tape, h), head_);
}

grad::TensorPtr ToyNet::Forward(grad::Tape& tape, const grad::TensorPtr& x,
                                std::span<const int> labels) {
  return grad::SoftmaxCrossEntropy(tape, Logits(tape, x), labels);
}

std::vector<grad::TensorPtr> ToyNet::Parameters() const {
  std::vector<grad::TensorPtr> params;
  for (const Block& block : blocks_) {
    params.push_back(block.conv.weight);
    params.push_back(block.bn.gamma_orig);
    params.push_back(block.bn.beta);
  }
  params.push_back(head_.weight);
  params.push_back(head_.bias);
  return params;
}

void ToyNet::ZeroGrad() {
  for (Block& block : blocks_) {
    block.conv.ZeroGrad();
    block.bn.ZeroGrad();
  }
  head_.ZeroGrad();
}

SimResult RunSimulation(const SimConfig& config) {
  SimResult result;
  Topology topology = config.topology;
  if (topology.layers.empty()) {
    topology = ChainTopology(config.data.channels, {16, 16, 32, 32}, 3,
                             config.data.image_size);
  }
  topology.ResolvePermitted(config.multiple, config.allow_layer_pruning);
  topology.Validate();
  if (topology.layers.front().c_in != config.data.channels) {
    throw Error(ErrorCode::kConfig,
                "first layer input count differs from the data channels");
  }
  if (config.batch < 1 || config.batch > config.data.samples) {
    throw Error(ErrorCode::kConfig, "batch must lie in [1, samples]");
  }

  std::unique_ptr<CostModel> cost_model;
  if (config.use_flops) {
    cost_model = std::make_unique<FlopsCostModel>();
  } else if (!config.lut.tables.empty()) {
    cost_model = std::make_unique<LutCostModel>(config.lut);
  } else {
    SynthLutOptions options;
    options.seed = config.seed;
    cost_model = std::make_unique<LutCostModel>(SynthLut(topology, options));
  }

  std::vector<PruneGroup> groups = BuildGroups(topology);
  ChannelPlan plan = FullPlan(topology, groups, *cost_model);
  result.start_cost = plan.total_cost;
  result.target_cost = ParseTargetCost(config.target, result.start_cost);
  PruneSchedule schedule = config.schedule;
  schedule.start_cost = result.start_cost;
  schedule.target_cost = result.target_cost;
  schedule.Validate();

  BlobDataset data = config.data;
  Rng data_rng(SubSeed(config.seed, 1));
  data.Generate(data_rng);
  Rng init_rng(SubSeed(config.seed, 2));
  ToyNet net(topology, data.classes, init_rng);
  Rng order_rng(SubSeed(config.seed, 3));

  const std::vector<grad::TensorPtr> params = net.Parameters();
  std::vector<std::vector<double>> velocity;
  for (const auto& p : params) velocity.emplace_back(p->size(), 0.0);

  ImportanceAccumulator accumulator(config.importance_momentum);
  std::vector<int> order(data.samples);
  const int steps_per_epoch = data.samples / config.batch;
  std::int64_t global_step = 0;
  std::int64_t window_step = 0;
  std::vector<int> labels;

  auto rewire = [&](int epoch) {
    const double target = schedule.IntermediateTarget(epoch);
    const std::vector<std::vector<double>> running = accumulator.Read();
    ImportanceMap importance;
    for (std::size_t l = 0; l < topology.layers.size(); ++l) {
      importance[topology.layers[l].id] = running[l];
    }
    std::vector<PruneGroup> scored = BuildGroups(topology, importance);
    for (std::size_t g = 0; g < scored.size(); ++g) {
      scored[g].current_kept = plan.groups[g].kept;
    }
    TraceRecord record;
    record.epoch = epoch;
    record.step = global_step;
    record.target = target;
    const auto start = std::chrono::steady_clock::now();
    ChannelPlan next;
    if (target >= result.start_cost) {
      // The unpruned network fits and keeps every channel.
      next = FullPlan(topology, scored, *cost_model);
      next.target = target;
    } else {
      PlanOutcome outcome =
          PlanChannels(topology, scored, *cost_model, target, config.planner);
      next = std::move(outcome.plan);
      record.solves = outcome.solves;
    }
    record.solver_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    for (std::size_t g = 0; g < next.groups.size(); ++g) {
      const auto& before = plan.groups[g].mask;
      const auto& after = next.groups[g].mask;
      for (std::size_t i = 0; i < after.size(); ++i) {
        record.flips_on += !before[i] && after[i];
        record.flips_off += before[i] && !after[i];
      }
      for (int layer : scored[g].layers) {
        ToyNet::Block& block = net.blocks()[layer];
        block.conv.mask = after;
        grad::BnRescale(block.bn, after);
      }
    }
    plan = std::move(next);
    record.plan_cost = plan.total_cost;
    record.kept = plan.KeptCounts();
    result.trace.push_back(std::move(record));
    accumulator.Reset();
  };

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (int k = data.samples - 1; k > 0; --k) {
      std::swap(order[k], order[order_rng.UniformInt(k + 1)]);
    }
    double loss_sum = 0.0;
    for (int b = 0; b < steps_per_epoch; ++b) {
      ++global_step;
      grad::Tape tape;
      auto x = data.Batch(order, b * config.batch, config.batch, &labels);
      auto loss = net.Forward(tape, x, labels);
      tape.Backward(loss);
      loss_sum += loss->data()[0];

      if (schedule.InRewireWindow(epoch)) {
        ++window_step;
        ImportanceMap measured;
        for (std::size_t l = 0; l < topology.layers.size(); ++l) {
          measured[topology.layers[l].id] =
              grad::TaylorImportance(net.blocks()[l].conv);
        }
        if (config.importance_source) {
          measured = config.importance_source(epoch, global_step, measured);
        }
        std::vector<std::vector<double>> sample;
        for (const LayerSpec& layer : topology.layers) {
          auto it = measured.find(layer.id);
          if (it == measured.end()) {
            throw Error(ErrorCode::kMissingImportance,
                        "no importance sample for " + layer.id);
          }
          sample.push_back(it->second);
        }
        accumulator.Accumulate(sample);
        if (schedule.ShouldRewire(window_step, epoch)) rewire(epoch);
      }

      for (std::size_t p = 0; p < params.size(); ++p) {
        auto& data_ref = params[p]->data();
        const auto& grad_ref = params[p]->grad();
        for (std::size_t k = 0; k < data_ref.size(); ++k) {
          velocity[p][k] = config.sgd_momentum * velocity[p][k] + grad_ref[k];
          data_ref[k] -= config.learning_rate * velocity[p][k];
        }
      }
      net.ZeroGrad();
    }
    result.epoch_loss.push_back(loss_sum / steps_per_epoch);
    std::vector<std::vector<std::uint8_t>> masks;
    for (const auto& block : net.blocks()) masks.push_back(block.conv.mask);
    result.epoch_masks.push_back(std::move(masks));
  }

  result.masks_applied = true;
  for (auto& block : net.blocks()) {
    block.conv.ApplyMaskPermanently();
    const grad::Tensor4& w = *block.conv.weight;
    for (int i = 0; i < block.conv.c_in(); ++i) {
      if (block.conv.mask[i]) continue;
      for (int o = 0; o < block.conv.c_out(); ++o) {
        for (int r = 0; r < block.conv.kernel(); ++r) {
          for (int s = 0; s < block.conv.kernel(); ++s) {
            result.masks_applied = result.masks_applied && w.at(o, i, r, s) == 0.0;
          }
        }
      }
    }
  }

  int correct = 0;
  std::iota(order.begin(), order.end(), 0);
  for (int b = 0; b < steps_per_epoch; ++b) {
    grad::Tape tape;
    auto x = data.Batch(order, b * config.batch, config.batch, &labels);
    auto logits = net.Logits(tape, x);
    for (int n = 0; n < config.batch; ++n) {
      int best = 0;
      for (int k = 1; k < logits->c(); ++k) {
        if (logits->at(n, k, 0, 0) > logits->at(n, best, 0, 0)) best = k;
      }
      correct += best == labels[n];
    }
  }
  result.final_accuracy =
      static_cast<double>(correct) / (steps_per_epoch * config.batch);
  plan.target = result.target_cost;
  result.final_plan = std::move(plan);
  result.topology = std::move(topology);
  return result;
}

std::string TraceToJsonLines(const std::vector<TraceRecord>& trace) {
  std::ostringstream out;
  for (const TraceRecord& r : trace) {
    nlohmann::ordered_json line = {{"epoch", r.epoch},
                                   {"step", r.step},
                                   {"target", r.target},
                                   {"plan_cost", r.plan_cost},
                                   {"kept", r.kept},
                                   {"flips_on", r.flips_on},
                                   {"flips_off", r.flips_off},
                                   {"solves", r.solves}};
    out << line.dump() << '\n';
  }
  return out.str();
}

std::string TimingsToJsonLines(const std::vector<TraceRecord>& trace) {
  std::ostringstream out;
  for (const TraceRecord& r : trace) {
    nlohmann::ordered_json line = {
        {"step", r.step}, {"solver_ms", r.solver_ms}};
    out << line.dump() << '\n';
  }
  return out.str();
}

}  // namespace chprune
