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

#include "chprune/verify.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "chprune/allocation.h"
#include "chprune/error.h"
#include "chprune/mck.h"
#include "chprune/micrograd.h"
#include "chprune/random.h"
#include "chprune/schedule.h"

namespace chprune {

namespace {

using grad::BatchNorm;
using grad::MaskedConv;
using grad::Tape;
using grad::TensorPtr;

std::string Describe(std::int64_t index, const std::string& what) {
  std::ostringstream out;
  out << "case " << index << ": " << what;
  return out.str();
}

CheckOutcome Named(const char* name) {
  CheckOutcome outcome;
  outcome.name = name;
  return outcome;
}

void Fail(CheckOutcome& outcome, std::int64_t index, const std::string& what) {
  if (!outcome.passed) return;
  outcome.passed = false;
  outcome.detail = Describe(index, what);
}

mck::Instance RandomInstance(Rng& rng, int max_groups, int max_items,
                             double max_cost, double max_value) {
  mck::Instance instance;
  const int groups = 1 + rng.UniformInt(max_groups);
  double max_total = 0.0;
  for (int g = 0; g < groups; ++g) {
    const int items = 1 + rng.UniformInt(max_items);
    std::vector<double> values(items);
    std::vector<double> costs(items);
    for (int i = 0; i < items; ++i) {
      values[i] = rng.Uniform(0.0, max_value);
      costs[i] = rng.Uniform(0.0, max_cost);
    }
    max_total += *std::max_element(costs.begin(), costs.end());
    instance.groups.emplace_back(std::move(values), std::move(costs));
  }
  instance.capacity = rng.Uniform(0.0, max_total);
  return instance;
}

bool IsInfeasible(const Error& e) { return e.code() == ErrorCode::kInfeasible; }

// Solves with `solve`; returns false (and the failure) on infeasibility.
template <typename Fn>
bool TrySolve(Fn&& solve, mck::Solution* out) {
  try {
    *out = solve();
    return true;
  } catch (const Error& e) {
    if (!IsInfeasible(e)) throw;
    return false;
  }
}

bool Recomputes(const mck::Instance& instance, const mck::Solution& s) {
  if (s.chosen.size() != instance.groups.size()) return false;
  double value = 0.0;
  double cost = 0.0;
  for (std::size_t g = 0; g < s.chosen.size(); ++g) {
    const int k = s.chosen[g];
    if (k < 0 || k >= instance.groups[g].size()) return false;
    value += instance.groups[g].values[k];
    cost += instance.groups[g].costs[k];
  }
  return std::abs(value - s.total_value) <= 1e-9 &&
         std::abs(cost - s.total_cost) <= 1e-9 &&
         s.total_cost <= instance.capacity;
}

// ---------------------------------------------------------------------------
// Differentiation helpers.

struct TwoLayerNet {
  MaskedConv conv1;
  BatchNorm bn1;
  MaskedConv conv2;
  BatchNorm bn2;
  grad::Linear head;
  TensorPtr input;
  std::vector<int> labels;

  TensorPtr Loss(Tape& tape) {
    auto h = grad::Relu(tape, grad::BatchNorm2d(
                                  tape, grad::Conv2d(tape, input, conv1), bn1));
    h = grad::Relu(tape,
                   grad::BatchNorm2d(tape, grad::Conv2d(tape, h, conv2), bn2));
    return grad::SoftmaxCrossEntropy(
        tape, grad::LinearForward(tape, grad::GlobalAvgPool(tape, h), head),
        labels);
  }

  std::vector<TensorPtr> Parameters() {
    return {conv1.weight, bn1.gamma_orig, bn1.beta, conv2.weight,
            bn2.gamma_orig, bn2.beta, head.weight, head.bias, input};
  }
};

void RandomizeBn(BatchNorm& bn, Rng& rng) {
  for (double& g : bn.gamma_orig->data()) g = rng.Uniform(0.5, 1.5);
  for (double& b : bn.beta->data()) b = 0.5 * rng.Normal();
}

TwoLayerNet RandomTwoLayerNet(Rng& rng) {
  const int batch = 2 + rng.UniformInt(3);
  const int c0 = 1 + rng.UniformInt(4);
  const int c1 = 1 + rng.UniformInt(6);
  const int c2 = 1 + rng.UniformInt(6);
  const int size = 2 + rng.UniformInt(5);
  const int k1 = rng.UniformInt(2) ? 3 : 1;
  const int k2 = rng.UniformInt(2) ? 3 : 1;
  const int classes = 3;
  TwoLayerNet net{MaskedConv(c0, c1, k1, rng), BatchNorm(c1),
                  MaskedConv(c1, c2, k2, rng), BatchNorm(c2),
                  grad::Linear(c2, classes, rng), nullptr, {}};
  RandomizeBn(net.bn1, rng);
  RandomizeBn(net.bn2, rng);
  net.input = grad::MakeTensor(batch, c0, size, size);
  net.input->FillNormal(rng, 1.0);
  for (int n = 0; n < batch; ++n) net.labels.push_back(rng.UniformInt(classes));
  return net;
}

void ZeroAll(const std::vector<TensorPtr>& params) {
  for (const auto& p : params) p->ZeroGrad();
}

// Largest relative error between analytic gradients already stored in
// `params` and central differences of `loss`. Coordinates whose perturbation
// flips any ReLU are skipped.
double MaxFiniteDifferenceError(
    const std::vector<TensorPtr>& params,
    const std::function<double(std::vector<std::uint8_t>*)>& loss,
    std::int64_t* checked) {
  constexpr double kStep = 1e-4;
  std::vector<std::uint8_t> base_pattern;
  loss(&base_pattern);
  double worst = 0.0;
  for (const auto& p : params) {
    for (std::size_t k = 0; k < p->size(); ++k) {
      const double saved = p->data()[k];
      std::vector<std::uint8_t> plus_pattern;
      std::vector<std::uint8_t> minus_pattern;
      p->data()[k] = saved + kStep;
      const double plus = loss(&plus_pattern);
      p->data()[k] = saved - kStep;
      const double minus = loss(&minus_pattern);
      p->data()[k] = saved;
      if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * kStep);
      const double analytic = p->grad()[k];
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
      ++*checked;
    }
  }
  return worst;
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckOutcome& c) { return c.passed; });
}

Json VerifyReport::ToJson() const {
  Json list = Json::array();
  for (const CheckOutcome& c : checks) {
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"cases", c.cases},
                    {"detail", c.detail}});
  }
  return {{"suite", suite}, {"seed", seed}, {"passed", passed()},
          {"checks", list}};
}

CheckOutcome CheckMckOracle(int instances, std::uint64_t seed) {
  CheckOutcome outcome = Named("mck_oracle_equivalence");
  Rng rng(seed);
  int infeasible = 0;
  for (int t = 0; t < instances; ++t) {
    const mck::Instance instance = RandomInstance(rng, 5, 6, 10.0, 100.0);
    mck::Solution brute;
    mck::Solution mim;
    const bool brute_ok =
        TrySolve([&] { return mck::SolveBruteForce(instance); }, &brute);
    const bool mim_ok =
        TrySolve([&] { return mck::SolveMeetInTheMiddle(instance); }, &mim);
    ++outcome.cases;
    if (brute_ok != mim_ok) {
      Fail(outcome, t, "feasibility verdicts differ");
    } else if (!brute_ok) {
      ++infeasible;
    } else if (brute.total_value != mim.total_value) {
      Fail(outcome, t, "values differ");
    } else if (!Recomputes(instance, brute) || !Recomputes(instance, mim)) {
      Fail(outcome, t, "selection infeasible or totals inconsistent");
    }
  }
  if (outcome.passed) {
    outcome.detail = std::to_string(instances - infeasible) +
                     " feasible instances matched, " +
                     std::to_string(infeasible) + " infeasible on both";
  }
  return outcome;
}

CheckOutcome CheckDpAgreement(int instances, std::uint64_t seed) {
  CheckOutcome outcome = Named("mck_dp_agreement");
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    mck::Instance instance = RandomInstance(rng, 5, 6, 10.0, 100.0);
    for (auto& group : instance.groups) {
      for (double& c : group.costs) c = std::round(c * 1000.0) / 1000.0;
      for (double& v : group.values) v = std::round(v);
    }
    // Half a unit of slack keeps rounding noise in the summed costs from
    // deciding feasibility.
    instance.capacity = std::round(instance.capacity * 1000.0) / 1000.0 + 5e-4;
    mck::Solution dp;
    mck::Solution mim;
    const bool dp_ok = TrySolve(
        [&] { return mck::SolveDynamicProgramming(instance, 1000); }, &dp);
    const bool mim_ok =
        TrySolve([&] { return mck::SolveMeetInTheMiddle(instance); }, &mim);
    ++outcome.cases;
    if (dp_ok != mim_ok) {
      Fail(outcome, t, "feasibility verdicts differ");
    } else if (dp_ok && dp.total_value != mim.total_value) {
      Fail(outcome, t, "values differ");
    } else if (dp_ok && !Recomputes(instance, dp)) {
      Fail(outcome, t, "dp selection inconsistent");
    }
  }
  return outcome;
}

CheckOutcome CheckMergeSoundness(int instances, std::uint64_t seed) {
  CheckOutcome outcome = Named("mck_merge_soundness");
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const mck::Instance instance = RandomInstance(rng, 1, 8, 10.0, 100.0);
    const mck::Instance other = RandomInstance(rng, 1, 8, 10.0, 100.0);
    const mck::ItemGroup& a = instance.groups[0];
    const mck::ItemGroup& b = other.groups[0];
    const double capacity = rng.Uniform(0.0, 20.0);
    ++outcome.cases;
    mck::MergeResult merged;
    bool any_fits = false;
    for (int i = 0; i < a.size(); ++i) {
      for (int j = 0; j < b.size(); ++j) {
        any_fits = any_fits || a.costs[i] + b.costs[j] <= capacity;
      }
    }
    try {
      merged = mck::Merge(a, b, capacity);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyFront || any_fits) {
        Fail(outcome, t, "unexpected empty front");
      }
      continue;
    }
    const mck::ItemGroup& front = merged.group;
    for (int k = 1; k < front.size(); ++k) {
      if (!(front.values[k - 1] < front.values[k] &&
            front.costs[k - 1] < front.costs[k])) {
        Fail(outcome, t, "front not strictly increasing");
      }
    }
    for (int k = 0; k < front.size(); ++k) {
      const int i = merged.left[k];
      const int j = merged.right[k];
      if (a.values[i] + b.values[j] != front.values[k] ||
          a.costs[i] + b.costs[j] != front.costs[k] ||
          front.labels[k] != i * b.size() + j) {
        Fail(outcome, t, "backpointers do not reproduce the entry");
      }
    }
    for (int i = 0; i < a.size(); ++i) {
      for (int j = 0; j < b.size(); ++j) {
        const double v = a.values[i] + b.values[j];
        const double c = a.costs[i] + b.costs[j];
        if (c > capacity) continue;
        bool covered = false;
        for (int k = 0; k < front.size() && !covered; ++k) {
          covered = front.values[k] >= v && front.costs[k] <= c;
        }
        if (!covered) Fail(outcome, t, "feasible pair not dominated");
      }
    }
  }
  return outcome;
}

CheckOutcome CheckKnapsackDegeneration(int instances, std::uint64_t seed) {
  CheckOutcome outcome = Named("mck_knapsack_degeneration");
  Rng rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int n = 1 + rng.UniformInt(12);
    mck::Instance instance;
    std::vector<double> v(n);
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) {
      v[i] = rng.Uniform(0.0, 100.0);
      c[i] = rng.Uniform(0.0, 10.0);
      instance.groups.emplace_back(std::vector<double>{0.0, v[i]},
                                   std::vector<double>{0.0, c[i]});
    }
    instance.capacity = rng.Uniform(0.0, 5.0 * n);
    // 0-1 knapsack by subset enumeration, summing in item order.
    double best = 0.0;
    for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
      double value = 0.0;
      double cost = 0.0;
      for (int i = 0; i < n; ++i) {
        value += (subset >> i & 1u) ? v[i] : 0.0;
        cost += (subset >> i & 1u) ? c[i] : 0.0;
      }
      if (cost <= instance.capacity) best = std::max(best, value);
    }
    ++outcome.cases;
    const mck::Solution mim = mck::SolveMeetInTheMiddle(instance);
    if (mim.total_value != best) Fail(outcome, t, "values differ");
  }
  return outcome;
}

CheckOutcome CheckGradientIdentity(int nets, std::uint64_t seed) {
  CheckOutcome outcome = Named("gradient_identity");
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < nets; ++t) {
    TwoLayerNet net = RandomTwoLayerNet(rng);
    Tape tape;
    tape.Backward(net.Loss(tape));
    const BatchNorm* norms[] = {&net.bn1};
    const MaskedConv* convs[] = {&net.conv2};
    const grad::IdentityResidual r = grad::GradientIdentityResidual(norms, convs);
    worst = std::max(worst, r.relative);
    ++outcome.cases;
    if (!(r.relative <= 1e-5)) Fail(outcome, t, "relative residual too big");
  }

  // Two normalized branches summed before the rectifier and read by two
  // convolutions.
  for (int t = 0; t < std::max(1, nets / 10); ++t) {
    const int batch = 3;
    const int c0 = 3;
    const int c1 = 5;
    const int size = 4;
    MaskedConv branch_a(c0, c1, 3, rng);
    MaskedConv branch_b(c0, c1, 1, rng);
    BatchNorm bn_a(c1);
    BatchNorm bn_b(c1);
    RandomizeBn(bn_a, rng);
    RandomizeBn(bn_b, rng);
    MaskedConv reader_a(c1, 4, 3, rng);
    MaskedConv reader_b(c1, 4, 1, rng);
    std::vector<double> readout(batch * 4 * size * size);
    for (double& r : readout) r = rng.Normal();
    auto x = grad::MakeTensor(batch, c0, size, size);
    x->FillNormal(rng, 1.0);
    Tape tape;
    auto sum = grad::Add(
        tape, grad::BatchNorm2d(tape, grad::Conv2d(tape, x, branch_a), bn_a),
        grad::BatchNorm2d(tape, grad::Conv2d(tape, x, branch_b), bn_b));
    auto h = grad::Relu(tape, sum);
    auto out = grad::Add(tape, grad::Conv2d(tape, h, reader_a),
                         grad::Conv2d(tape, h, reader_b));
    tape.Backward(grad::WeightedSum(tape, out, readout));
    const BatchNorm* norms[] = {&bn_a, &bn_b};
    const MaskedConv* convs[] = {&reader_a, &reader_b};
    const grad::IdentityResidual r = grad::GradientIdentityResidual(norms, convs);
    worst = std::max(worst, r.relative);
    ++outcome.cases;
    if (!(r.relative <= 1e-5)) Fail(outcome, t, "skip topology residual");
  }

  // Under soft masking a pruned channel's normalization terms vanish while
  // its straight-through conv term does not.
  {
    TwoLayerNet net = RandomTwoLayerNet(rng);
    net.conv2.mask.assign(net.conv2.c_in(), 1);
    net.conv2.mask[0] = 0;
    Tape tape;
    tape.Backward(net.Loss(tape));
    const BatchNorm* norms[] = {&net.bn1};
    const MaskedConv* convs[] = {&net.conv2};
    const grad::IdentityResidual r = grad::GradientIdentityResidual(norms, convs);
    ++outcome.cases;
    if (r.bn_side[0] != 0.0 || r.conv_side[0] == 0.0) {
      Fail(outcome, nets, "soft-masked channel did not split the identity");
    }
  }
  if (outcome.passed) {
    std::ostringstream out;
    out << "worst relative residual " << worst;
    outcome.detail = out.str();
  }
  return outcome;
}

CheckOutcome CheckFiniteDifferences(int nets, std::uint64_t seed) {
  CheckOutcome outcome = Named("finite_differences");
  Rng rng(seed);
  double worst = 0.0;
  std::int64_t coordinates = 0;
  for (int t = 0; t < nets; ++t) {
    TwoLayerNet net = RandomTwoLayerNet(rng);
    const auto params = net.Parameters();
    ZeroAll(params);
    {
      Tape tape;
      tape.Backward(net.Loss(tape));
    }
    auto loss = [&](std::vector<std::uint8_t>* pattern) {
      Tape tape;
      const double value = net.Loss(tape)->data()[0];
      *pattern = tape.relu_pattern();
      return value;
    };
    const double err = MaxFiniteDifferenceError(params, loss, &coordinates);
    worst = std::max(worst, err);
    ++outcome.cases;
    if (!(err <= 1e-4)) Fail(outcome, t, "relative error above 1e-4");
  }
  if (outcome.passed) {
    std::ostringstream out;
    out << coordinates << " coordinates, worst relative error " << worst;
    outcome.detail = out.str();
  }
  return outcome;
}

CheckOutcome CheckStraightThrough(int layers, std::uint64_t seed) {
  CheckOutcome outcome = Named("straight_through");
  Rng rng(seed);
  for (int t = 0; t < layers; ++t) {
    const int c_in = 2 + rng.UniformInt(7);
    const int c_out = 1 + rng.UniformInt(8);
    const int kernel = rng.UniformInt(2) ? 3 : 1;
    MaskedConv conv(c_in, c_out, kernel, rng);
    for (int i = 0; i < c_in; ++i) conv.mask[i] = rng.UniformInt(2);
    conv.mask[rng.UniformInt(c_in)] = 0;
    auto x = grad::MakeTensor(3, c_in, 4, 4);
    x->FillNormal(rng, 1.0);
    std::vector<double> readout(3 * c_out * 16);
    for (double& r : readout) r = rng.Normal();
    const std::vector<double> dense_before = conv.weight->data();

    Tape tape;
    auto y = grad::Conv2d(tape, x, conv);
    tape.Backward(grad::WeightedSum(tape, y, readout));
    ++outcome.cases;
    if (conv.weight->data() != dense_before) {
      Fail(outcome, t, "forward pass modified dense weights");
    }
    for (int i = 0; i < c_in; ++i) {
      if (conv.mask[i]) continue;
      double norm = 0.0;
      for (int o = 0; o < c_out; ++o) {
        for (int r = 0; r < kernel; ++r) {
          for (int s = 0; s < kernel; ++s) {
            norm += std::pow(conv.weight->grad_at(o, i, r, s), 2);
          }
        }
      }
      if (!(std::sqrt(norm) > 1e-12)) {
        Fail(outcome, t, "masked channel received no gradient");
      }
    }

    // Restoring every channel must reproduce a dense convolution exactly.
    MaskedConv dense = conv;
    dense.weight = std::make_shared<grad::Tensor4>(*conv.weight);
    dense.mask.assign(c_in, 1);
    conv.mask.assign(c_in, 1);
    Tape restore;
    auto restored = grad::Conv2d(restore, x, conv);
    auto reference = grad::Conv2d(restore, x, dense);
    if (restored->data() != reference->data()) {
      Fail(outcome, t, "restored output differs from the dense output");
    }
  }
  return outcome;
}

CheckOutcome CheckBnScaling() {
  CheckOutcome outcome = Named("bn_scaling");
  grad::ProbeConfig config;
  const grad::ProbeResult full = grad::GradientProbe(1.0, config);
  const grad::ProbeResult quarter = grad::GradientProbe(0.25, config);
  grad::ProbeConfig layer_pruning = config;
  layer_pruning.eps = 0.0;
  const grad::ProbeResult none = grad::GradientProbe(0.0, layer_pruning);
  outcome.cases = 3;
  if (full.unscaled_mean_abs_gz != full.scaled_mean_abs_gz) {
    Fail(outcome, 0, "unpruned probe depends on scaling");
  }
  if (!(quarter.scaled_mean_abs_gz < quarter.unscaled_mean_abs_gz)) {
    Fail(outcome, 1, "scaling did not reduce the gradient");
  }
  if (none.unscaled_finite || !none.scaled_finite) {
    Fail(outcome, 2, "fully masked probe finiteness is wrong");
  }
  if (outcome.passed) {
    std::ostringstream out;
    out << "keep 25%: scaled " << quarter.scaled_mean_abs_gz << " < unscaled "
        << quarter.unscaled_mean_abs_gz;
    outcome.detail = out.str();
  }
  return outcome;
}

CheckOutcome CheckScheduleTargets(int schedules, std::uint64_t seed) {
  CheckOutcome outcome = Named("schedule_targets");
  Rng rng(seed);
  for (int t = 0; t < schedules; ++t) {
    PruneSchedule s;
    s.warmup = rng.UniformInt(10);
    s.ramp = 1 + rng.UniformInt(20);
    s.cooldown = rng.UniformInt(10);
    s.epochs = s.warmup + s.ramp + s.cooldown + rng.UniformInt(10);
    s.rewire_every = 1 + rng.UniformInt(100);
    s.start_cost = rng.Uniform(1.0, 100.0);
    s.target_cost = s.start_cost * rng.Uniform(0.05, 1.0);
    s.Validate();
    ++outcome.cases;
    double previous = s.start_cost;
    for (int e = 0; e < s.epochs; ++e) {
      const double target = s.IntermediateTarget(e);
      if (target > previous) Fail(outcome, t, "target increased");
      if (e >= s.warmup && e < s.warmup + s.ramp &&
          s.target_cost < s.start_cost && !(target < previous)) {
        Fail(outcome, t, "target not strictly decreasing on the ramp");
      }
      if (e >= s.warmup + s.ramp && target != s.target_cost) {
        Fail(outcome, t, "target not exact after the ramp");
      }
      previous = target;
    }
    // Steps counted from the opening of the window.
    const int steps_per_epoch = 1 + rng.UniformInt(50);
    std::int64_t step = 0;
    std::int64_t rewires = 0;
    for (int e = 0; e < s.epochs; ++e) {
      for (int b = 0; b < steps_per_epoch; ++b) {
        if (!s.InRewireWindow(e)) {
          if (s.ShouldRewire(step, e)) Fail(outcome, t, "rewire outside");
          continue;
        }
        ++step;
        rewires += s.ShouldRewire(step, e);
      }
    }
    if (rewires != step / s.rewire_every) {
      Fail(outcome, t, "rewire count differs from floor(steps / r)");
    }
  }
  return outcome;
}

CheckOutcome CheckAccumulator(int trials, std::uint64_t seed) {
  CheckOutcome outcome = Named("importance_accumulator");
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const double momentum = rng.Uniform(0.0, 0.99);
    const double alpha = rng.Uniform(0.1, 10.0);
    ImportanceAccumulator plain(momentum);
    ImportanceAccumulator scaled(momentum);
    ImportanceAccumulator constant(momentum);
    const int length = 1 + rng.UniformInt(6);
    std::vector<std::vector<double>> fixed{std::vector<double>(length)};
    for (double& v : fixed[0]) v = rng.Uniform(0.0, 5.0);
    std::vector<std::vector<double>> last;
    for (int step = 0; step < 2000; ++step) {
      std::vector<std::vector<double>> sample{std::vector<double>(length)};
      for (double& v : sample[0]) v = rng.Uniform(0.0, 5.0);
      auto times = sample;
      for (double& v : times[0]) v *= alpha;
      plain.Accumulate(sample);
      scaled.Accumulate(times);
      constant.Accumulate(fixed);
      last = sample;
    }
    ++outcome.cases;
    const auto a = plain.Read();
    const auto b = scaled.Read();
    const auto c = constant.Read();
    for (int i = 0; i < length; ++i) {
      if (std::abs(alpha * a[0][i] - b[0][i]) >
          1e-12 * std::max(1.0, std::abs(b[0][i]))) {
        Fail(outcome, t, "not scale-equivariant");
      }
      if (std::abs(c[0][i] - fixed[0][i]) > 1e-9 * std::max(1.0, fixed[0][i])) {
        Fail(outcome, t, "constant input is not a fixed point");
      }
    }
    plain.Reset();
    for (const auto& row : plain.Read()) {
      for (double v : row) {
        if (v != 0.0) Fail(outcome, t, "reset left a nonzero entry");
      }
    }
    ImportanceAccumulator memoryless(0.0);
    memoryless.Accumulate(fixed);
    memoryless.Accumulate(last);
    if (memoryless.Read() != last) Fail(outcome, t, "zero momentum remembers");
  }
  return outcome;
}

CheckOutcome CheckEncoderRoundTrip(int cases, std::uint64_t seed) {
  CheckOutcome outcome = Named("encoder_round_trip");
  Rng rng(seed);
  for (int t = 0; t < cases; ++t) {
    // Three prune groups; the second has two members sharing their input.
    Topology topology;
    const int widths[] = {8 + 4 * rng.UniformInt(4), 8 + 4 * rng.UniformInt(4),
                          8 + 4 * rng.UniformInt(4)};
    const char* ids[] = {"a", "b1", "b2", "c"};
    const int width_of[] = {widths[0], widths[1], widths[1], widths[2]};
    for (int l = 0; l < 4; ++l) {
      LayerSpec layer;
      layer.id = ids[l];
      layer.c_in = width_of[l];
      layer.c_out = 4;
      layer.kernel = 1;
      if (l == 1 || l == 2) layer.shared_input_group = "b";
      topology.layers.push_back(layer);
    }
    topology.ResolvePermitted(4, rng.UniformInt(2) == 1);
    topology.Validate();

    CostLut lut;
    ImportanceMap importance;
    for (const LayerSpec& layer : topology.layers) {
      for (int p : layer.permitted) {
        lut.Set(layer.id, p, layer.c_out,
                p == 0 ? 0.0 : rng.UniformInt(8 * layer.c_in) / 8.0);
      }
      auto& scores = importance[layer.id];
      for (int i = 0; i < layer.c_in; ++i) scores.push_back(rng.UniformInt(50));
    }
    const LutCostModel cost_model(lut);
    const std::vector<PruneGroup> groups = BuildGroups(topology, importance);
    const double full = FullPlan(topology, groups, cost_model).total_cost;
    const double target = std::round(rng.Uniform(0.2, 1.0) * full * 8.0) / 8.0;

    // Exhaustive search over permitted-count tuples.
    double best = -1.0;
    std::vector<int> kept(groups.size());
    std::function<void(std::size_t)> search = [&](std::size_t g) {
      if (g == groups.size()) {
        const double cost = PlanCost(topology, groups, cost_model, kept);
        if (cost > target) return;
        double value = 0.0;
        for (std::size_t k = 0; k < groups.size(); ++k) {
          std::vector<double> sorted = groups[k].summed_importance;
          std::sort(sorted.begin(), sorted.end(), std::greater<>());
          value += std::accumulate(sorted.begin(), sorted.begin() + kept[k], 0.0);
        }
        best = std::max(best, value);
        return;
      }
      for (int p : groups[g].permitted) {
        kept[g] = p;
        search(g + 1);
      }
    };
    search(0);

    ++outcome.cases;
    try {
      const PlanOutcome planned =
          PlanChannels(topology, groups, cost_model, target);
      if (best < 0.0) {
        Fail(outcome, t, "planner found a plan the search did not");
      } else if (planned.plan.kept_importance != best) {
        Fail(outcome, t, "kept importance differs from exhaustive search");
      } else if (planned.plan.total_cost > target) {
        Fail(outcome, t, "plan exceeds target");
      }
    } catch (const Error& e) {
      if (!IsInfeasible(e) || best >= 0.0) {
        Fail(outcome, t, std::string("planner failed: ") + e.what());
      }
    }
  }
  return outcome;
}

VerifyReport RunVerify(std::string_view suite, std::uint64_t seed) {
  const bool all = suite == "all";
  if (!all && suite != "mck" && suite != "micrograd" && suite != "schedule" &&
      suite != "allocation") {
    throw Error(ErrorCode::kConfig,
                "unknown suite \"" + std::string(suite) +
                    "\"; expected mck, micrograd, schedule, allocation or all");
  }
  VerifyReport report;
  report.suite = std::string(suite);
  report.seed = seed;
  auto& checks = report.checks;
  if (all || suite == "mck") {
    checks.push_back(CheckMckOracle(1000, seed));
    checks.push_back(CheckDpAgreement(200, seed + 1));
    checks.push_back(CheckMergeSoundness(500, seed + 2));
    checks.push_back(CheckKnapsackDegeneration(200, seed + 3));
  }
  if (all || suite == "micrograd") {
    checks.push_back(CheckGradientIdentity(100, seed + 4));
    checks.push_back(CheckFiniteDifferences(20, seed + 5));
    checks.push_back(CheckStraightThrough(50, seed + 6));
    checks.push_back(CheckBnScaling());
  }
  if (all || suite == "schedule") {
    checks.push_back(CheckScheduleTargets(200, seed + 7));
    checks.push_back(CheckAccumulator(20, seed + 8));
  }
  if (all || suite == "allocation") {
    checks.push_back(CheckEncoderRoundTrip(100, seed + 9));
  }
  return report;
}

}  // namespace chprune
