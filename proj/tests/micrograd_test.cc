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

#include "chprune/micrograd.h"

#include <gtest/gtest.h>

#include <cmath>

#include "chprune/error.h"
#include "chprune/random.h"
#include "oracles.h"

namespace chprune::grad {
namespace {

using ::chprune::testing::CentralDifferences;

// Direct convolution, stride 1, zero padding K/2, weights taken as given.
std::vector<double> ReferenceConv(const Tensor4& x, const Tensor4& w) {
  const int k = w.h();
  const int pad = k / 2;
  std::vector<double> y(static_cast<std::size_t>(x.n()) * w.n() * x.h() * x.w());
  std::size_t idx = 0;
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < w.n(); ++o) {
      for (int h = 0; h < x.h(); ++h) {
        for (int v = 0; v < x.w(); ++v, ++idx) {
          double acc = 0.0;
          for (int i = 0; i < x.c(); ++i) {
            for (int r = 0; r < k; ++r) {
              for (int s = 0; s < k; ++s) {
                const int hh = h + r - pad;
                const int vv = v + s - pad;
                if (hh < 0 || hh >= x.h() || vv < 0 || vv >= x.w()) continue;
                acc += w.at(o, i, r, s) * x.at(n, i, hh, vv);
              }
            }
          }
          y[idx] = acc;
        }
      }
    }
  }
  return y;
}

std::vector<double> RandomVector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Normal();
  return v;
}

double LossOf(Tape& tape, const TensorPtr& loss,
              std::vector<std::uint8_t>* pattern) {
  *pattern = tape.relu_pattern();
  return loss->data()[0];
}

TEST(ConvTest, MatchesDirectConvolution) {
  Rng rng(1);
  for (int kernel : {1, 3}) {
    MaskedConv conv(3, 4, kernel, rng);
    auto x = MakeTensor(2, 3, 5, 4);
    x->FillNormal(rng, 1.0);
    Tape tape;
    auto y = Conv2d(tape, x, conv);
    const auto expected = ReferenceConv(*x, *conv.weight);
    ASSERT_EQ(y->size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
      EXPECT_NEAR(y->data()[k], expected[k], 1e-12);
    }
  }
}

TEST(ConvTest, MaskedForwardUsesEffectiveWeights) {
  Rng rng(2);
  MaskedConv conv(4, 3, 3, rng);
  conv.mask = {1, 0, 1, 0};
  auto x = MakeTensor(2, 4, 4, 4);
  x->FillNormal(rng, 1.0);
  Tape tape;
  auto y = Conv2d(tape, x, conv);
  const auto expected = ReferenceConv(*x, conv.EffectiveWeight());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    EXPECT_NEAR(y->data()[k], expected[k], 1e-12);
  }
}

TEST(ConvTest, AllOnesMaskIsPlainConvolution) {
  Rng rng(3);
  MaskedConv soft(3, 2, 3, rng);
  MaskedConv hard = soft;
  hard.weight = std::make_shared<Tensor4>(*soft.weight);
  hard.straight_through = false;
  auto x = MakeTensor(2, 3, 4, 4);
  x->FillNormal(rng, 1.0);
  auto x2 = std::make_shared<Tensor4>(*x);
  const auto readout = RandomVector(rng, 2 * 2 * 16);
  Tape a;
  auto ya = Conv2d(a, x, soft);
  a.Backward(WeightedSum(a, ya, readout));
  Tape b;
  auto yb = Conv2d(b, x2, hard);
  b.Backward(WeightedSum(b, yb, readout));
  EXPECT_EQ(ya->data(), yb->data());
  EXPECT_EQ(soft.weight->grad(), hard.weight->grad());
  EXPECT_EQ(x->grad(), x2->grad());
}

TEST(ConvTest, StraightThroughGradientReachesMaskedChannels) {
  Rng rng(4);
  MaskedConv conv(4, 3, 3, rng);
  conv.mask = {1, 0, 1, 0};
  MaskedConv hard = conv;
  hard.weight = std::make_shared<Tensor4>(*conv.weight);
  hard.straight_through = false;
  // Reference: the same weights with masked channels physically zeroed
  // and no mask. Its weight gradient is dL/dW_eff.
  MaskedConv zeroed = conv;
  zeroed.weight = std::make_shared<Tensor4>(conv.EffectiveWeight());
  zeroed.mask.assign(4, 1);

  auto x = MakeTensor(2, 4, 4, 4);
  x->FillNormal(rng, 1.0);
  const auto readout = RandomVector(rng, 2 * 3 * 16);
  const std::vector<double> dense = conv.weight->data();
  std::vector<TensorPtr> inputs;
  for (MaskedConv* c : {&conv, &hard, &zeroed}) {
    Tape tape;
    inputs.push_back(std::make_shared<Tensor4>(*x));
    auto y = Conv2d(tape, inputs.back(), *c);
    tape.Backward(WeightedSum(tape, y, readout));
  }
  EXPECT_EQ(conv.weight->data(), dense);
  EXPECT_EQ(conv.weight->grad(), zeroed.weight->grad());
  EXPECT_EQ(inputs[0]->grad(), inputs[2]->grad());
  for (int o = 0; o < 3; ++o) {
    for (int r = 0; r < 3; ++r) {
      for (int s = 0; s < 3; ++s) {
        EXPECT_NE(conv.weight->grad_at(o, 1, r, s), 0.0);
        EXPECT_EQ(hard.weight->grad_at(o, 1, r, s), 0.0);
        EXPECT_EQ(hard.weight->grad_at(o, 0, r, s),
                  conv.weight->grad_at(o, 0, r, s));
      }
    }
  }
}

TEST(ConvTest, RestoringAChannelUsesPreservedWeights) {
  Rng rng(5);
  MaskedConv conv(3, 2, 3, rng);
  auto x = MakeTensor(1, 3, 4, 4);
  x->FillNormal(rng, 1.0);
  Tape tape;
  const auto before = Conv2d(tape, x, conv)->data();
  conv.mask[1] = 0;
  Conv2d(tape, x, conv);
  conv.mask[1] = 1;
  EXPECT_EQ(Conv2d(tape, x, conv)->data(), before);
}

TEST(ConvTest, ApplyMaskPermanently) {
  Rng rng(6);
  MaskedConv conv(3, 2, 1, rng);
  conv.mask = {0, 1, 1};
  conv.ApplyMaskPermanently();
  EXPECT_EQ(conv.weight->at(0, 0, 0, 0), 0.0);
  EXPECT_EQ(conv.weight->at(1, 0, 0, 0), 0.0);
  EXPECT_NE(conv.weight->at(0, 1, 0, 0), 0.0);
}

TEST(ConvTest, ShapeMismatch) {
  Rng rng(7);
  MaskedConv conv(3, 2, 3, rng);
  Tape tape;
  try {
    Conv2d(tape, MakeTensor(1, 4, 3, 3), conv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(BatchNormTest, StandardizedInputPassesThrough) {
  Rng rng(8);
  auto x = MakeTensor(4, 2, 3, 3);
  x->FillNormal(rng, 1.0);
  // Standardize each channel exactly.
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    double var = 0.0;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 3; ++w) mean += x->at(n, c, h, w) / 36;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 3; ++w)
          var += std::pow(x->at(n, c, h, w) - mean, 2) / 36;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 3; ++w)
          x->at(n, c, h, w) = (x->at(n, c, h, w) - mean) / std::sqrt(var);
  }
  BatchNorm bn(2);
  Tape tape;
  auto y = BatchNorm2d(tape, x, bn);
  // Unit variance plus the variance floor.
  const double shrink = 1.0 / std::sqrt(1.0 + bn.eps);
  for (std::size_t k = 0; k < x->size(); ++k) {
    EXPECT_NEAR(y->data()[k], x->data()[k] * shrink, 1e-12);
  }
}

TEST(BatchNormTest, ClosedFormGradients) {
  Rng rng(9);
  const int n_batch = 3;
  const int channels = 2;
  const int size = 3;
  auto x = MakeTensor(n_batch, channels, size, size);
  x->FillNormal(rng, 2.0);
  BatchNorm bn(channels);
  for (double& g : bn.gamma_orig->data()) g = rng.Uniform(0.5, 2.0);
  for (double& b : bn.beta->data()) b = rng.Normal();
  bn.scale = 0.75;
  const auto readout = RandomVector(rng, x->size());
  Tape tape;
  auto y = BatchNorm2d(tape, x, bn);
  tape.Backward(WeightedSum(tape, y, readout));

  const double count = n_batch * size * size;
  for (int c = 0; c < channels; ++c) {
    const double gamma = bn.gamma_orig->data()[c] * bn.scale;
    double g_beta = 0.0;
    double g_gamma = 0.0;
    std::vector<double> xhat;
    for (int n = 0; n < n_batch; ++n)
      for (int h = 0; h < size; ++h)
        for (int w = 0; w < size; ++w) {
          const double xh = (x->at(n, c, h, w) - bn.batch_mean[c]) /
                            bn.batch_std[c];
          const double g = readout[x->Index(n, c, h, w)];
          g_beta += g;
          g_gamma += g * xh;
          xhat.push_back(xh);
        }
    EXPECT_NEAR(bn.beta->grad()[c], g_beta, 1e-10);
    EXPECT_NEAR(bn.gamma_orig->grad()[c], bn.scale * g_gamma, 1e-10);
    int k = 0;
    for (int n = 0; n < n_batch; ++n)
      for (int h = 0; h < size; ++h)
        for (int w = 0; w < size; ++w, ++k) {
          const double g = readout[x->Index(n, c, h, w)];
          const double expected = gamma / bn.batch_std[c] *
                                  (g - g_beta / count - xhat[k] * g_gamma / count);
          EXPECT_NEAR(x->grad_at(n, c, h, w), expected, 1e-10);
        }
  }
}

TEST(BatchNormTest, DegenerateBatch) {
  BatchNorm bn(2);
  Tape tape;
  try {
    BatchNorm2d(tape, MakeTensor(1, 2, 1, 1), bn);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBatch);
  }
}

TEST(BatchNormTest, RescaleFromMask) {
  BatchNorm bn(8);
  std::vector<std::uint8_t> mask(8, 1);
  BnRescale(bn, mask);
  EXPECT_EQ(bn.scale, 1.0);
  std::fill(mask.begin(), mask.begin() + 4, 0);
  BnRescale(bn, mask);
  EXPECT_EQ(bn.scale, 0.5);
  EXPECT_EQ(bn.EffectiveGamma(0), 0.5);
  EXPECT_EQ(bn.gamma_orig->data()[0], 1.0);
  std::fill(mask.begin(), mask.end(), 0);
  BnRescale(bn, mask);
  EXPECT_EQ(bn.scale, 0.0);
}

struct SmallNet {
  MaskedConv conv1;
  BatchNorm bn1;
  MaskedConv conv2;
  BatchNorm bn2;
  Linear head;
  TensorPtr x;
  std::vector<int> labels;
  TensorPtr skip_weight;  // optional 1x1 branch added before the head

  TensorPtr Loss(Tape& tape) {
    auto h1 = Relu(tape, BatchNorm2d(tape, Conv2d(tape, x, conv1), bn1));
    auto h2 = BatchNorm2d(tape, Conv2d(tape, h1, conv2), bn2);
    auto out = Relu(tape, h2);
    return SoftmaxCrossEntropy(
        tape, LinearForward(tape, GlobalAvgPool(tape, out), head), labels);
  }

  std::vector<TensorPtr> Tensors() const {
    return {conv1.weight, bn1.gamma_orig, bn1.beta, conv2.weight,
            bn2.gamma_orig, bn2.beta, head.weight, head.bias, x};
  }
};

SmallNet RandomNet(Rng& rng) {
  const int n = 1 + rng.UniformInt(4);
  const int c0 = 1 + rng.UniformInt(8);
  const int c1 = 1 + rng.UniformInt(8);
  const int c2 = 1 + rng.UniformInt(8);
  const int size = 2 + rng.UniformInt(5);
  SmallNet net{MaskedConv(c0, c1, rng.UniformInt(2) ? 3 : 1, rng),
               BatchNorm(c1),
               MaskedConv(c1, c2, rng.UniformInt(2) ? 3 : 1, rng),
               BatchNorm(c2),
               Linear(c2, 3, rng),
               MakeTensor(n, c0, size, size),
               {},
               nullptr};
  net.x->FillNormal(rng, 1.0);
  for (BatchNorm* bn : {&net.bn1, &net.bn2}) {
    for (double& g : bn->gamma_orig->data()) g = rng.Uniform(0.5, 1.5);
    for (double& b : bn->beta->data()) b = 0.3 * rng.Normal();
    bn->scale = rng.Uniform(0.5, 1.0);
  }
  for (int i = 0; i < n; ++i) net.labels.push_back(rng.UniformInt(3));
  return net;
}

TEST(FiniteDifferenceTest, EveryParameterAndInput) {
  Rng rng(10);
  std::int64_t checked = 0;
  for (int t = 0; t < 25; ++t) {
    SmallNet net = RandomNet(rng);
    for (int i = 0; i < net.conv2.c_in(); ++i) {
      net.conv2.mask[i] = rng.Uniform() < 0.7;
    }
    {
      Tape tape;
      tape.Backward(net.Loss(tape));
    }
    // Soft masking passes dL/dW_eff to the dense weights, which finite
    // differences of the dense weights cannot see; compare it on a copy
    // whose masked channels are zeroed instead.
    SmallNet plain = net;
    plain.conv2.weight = std::make_shared<Tensor4>(net.conv2.EffectiveWeight());
    plain.conv2.mask.assign(plain.conv2.c_in(), 1);
    std::vector<TensorPtr> tensors;
    for (const auto& p : plain.Tensors()) {
      tensors.push_back(std::make_shared<Tensor4>(*p));
    }
    plain.conv1.weight = tensors[0];
    plain.bn1.gamma_orig = tensors[1];
    plain.bn1.beta = tensors[2];
    plain.conv2.weight = tensors[3];
    plain.bn2.gamma_orig = tensors[4];
    plain.bn2.beta = tensors[5];
    plain.head.weight = tensors[6];
    plain.head.bias = tensors[7];
    plain.x = tensors[8];
    for (const auto& p : tensors) p->ZeroGrad();
    {
      Tape tape;
      tape.Backward(plain.Loss(tape));
    }
    EXPECT_EQ(plain.conv2.weight->grad(), net.conv2.weight->grad());
    const auto report = CentralDifferences(
        tensors, [&](std::vector<std::uint8_t>* pattern) {
          Tape tape;
          return LossOf(tape, plain.Loss(tape), pattern);
        });
    EXPECT_LE(report.worst, 1e-4) << "net " << t;
    checked += report.checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(FiniteDifferenceTest, SkipAddition) {
  Rng rng(11);
  MaskedConv a(2, 3, 3, rng);
  MaskedConv b(2, 3, 1, rng);
  auto x = MakeTensor(2, 2, 4, 4);
  x->FillNormal(rng, 1.0);
  const auto readout = RandomVector(rng, 2 * 3 * 16);
  auto loss = [&](Tape& tape) {
    return WeightedSum(tape, Relu(tape, Add(tape, Conv2d(tape, x, a),
                                            Conv2d(tape, x, b))),
                       readout);
  };
  {
    Tape tape;
    tape.Backward(loss(tape));
  }
  const auto report = CentralDifferences(
      {a.weight, b.weight, x}, [&](std::vector<std::uint8_t>* pattern) {
        Tape tape;
        return LossOf(tape, loss(tape), pattern);
      });
  EXPECT_LE(report.worst, 1e-4);
}

TEST(TaylorImportanceTest, Examples) {
  Rng rng(12);
  MaskedConv conv(2, 1, 1, rng);
  conv.has_gradient = true;
  conv.weight->ZeroGrad();
  EXPECT_EQ(TaylorImportance(conv), (std::vector<double>{0, 0}));
  conv.weight->at(0, 0, 0, 0) = 2;
  conv.weight->grad_at(0, 0, 0, 0) = 3;
  EXPECT_EQ(TaylorImportance(conv)[0], 6);

  MaskedConv two(1, 2, 1, rng);
  two.has_gradient = true;
  two.weight->data() = {1, 1};
  two.weight->grad() = {1, -1};
  EXPECT_EQ(TaylorImportance(two)[0], 0);
}

TEST(TaylorImportanceTest, StaleGradient) {
  Rng rng(13);
  MaskedConv conv(2, 2, 1, rng);
  auto x = MakeTensor(1, 2, 2, 2);
  Tape tape;
  Conv2d(tape, x, conv);
  try {
    TaylorImportance(conv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleGradient);
  }
}

TEST(TaylorImportanceTest, OutputPermutationInvariant) {
  Rng rng(14);
  MaskedConv conv(3, 4, 3, rng);
  conv.has_gradient = true;
  for (double& g : conv.weight->grad()) g = rng.Normal();
  MaskedConv permuted = conv;
  permuted.weight = std::make_shared<Tensor4>(*conv.weight);
  const int order[] = {2, 0, 3, 1};
  for (int o = 0; o < 4; ++o) {
    for (int i = 0; i < 3; ++i) {
      for (int r = 0; r < 3; ++r) {
        for (int s = 0; s < 3; ++s) {
          permuted.weight->at(o, i, r, s) = conv.weight->at(order[o], i, r, s);
          permuted.weight->grad_at(o, i, r, s) =
              conv.weight->grad_at(order[o], i, r, s);
        }
      }
    }
  }
  const auto a = TaylorImportance(conv);
  const auto b = TaylorImportance(permuted);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(GradientIdentityTest, UnmaskedNetsSatisfyIdentity) {
  Rng rng(15);
  for (int t = 0; t < 100; ++t) {
    SmallNet net = RandomNet(rng);
    net.bn1.scale = 1.0;
    Tape tape;
    tape.Backward(net.Loss(tape));
    const BatchNorm* norms[] = {&net.bn1};
    const MaskedConv* convs[] = {&net.conv2};
    const IdentityResidual r = GradientIdentityResidual(norms, convs);
    EXPECT_LE(r.relative, 1e-5) << "net " << t;
    // Independent restatement of both sides for channel 0.
    double conv_side = 0.0;
    for (int o = 0; o < net.conv2.c_out(); ++o)
      for (int p = 0; p < net.conv2.kernel(); ++p)
        for (int q = 0; q < net.conv2.kernel(); ++q)
          conv_side += net.conv2.weight->at(o, 0, p, q) *
                       net.conv2.weight->grad_at(o, 0, p, q);
    const double bn_side =
        net.bn1.gamma_orig->data()[0] * net.bn1.gamma_orig->grad()[0] +
        net.bn1.beta->data()[0] * net.bn1.beta->grad()[0];
    EXPECT_NEAR(bn_side, conv_side, 1e-5 * std::max(1.0, r.scale));
  }
}

TEST(GradientIdentityTest, HoldsWithBnScaling) {
  // Both sides are invariant to how gamma is split between gamma_orig and s.
  Rng rng(16);
  SmallNet net = RandomNet(rng);
  Tape tape;
  tape.Backward(net.Loss(tape));
  const BatchNorm* norms[] = {&net.bn1};
  const MaskedConv* convs[] = {&net.conv2};
  EXPECT_LE(GradientIdentityResidual(norms, convs).relative, 1e-5);
}

TEST(GradientIdentityTest, SoftMaskedChannelBreaksIdentity) {
  Rng rng(17);
  SmallNet net = RandomNet(rng);
  while (net.conv2.c_in() < 2) net = RandomNet(rng);
  net.conv2.mask[1] = 0;
  Tape tape;
  tape.Backward(net.Loss(tape));
  const BatchNorm* norms[] = {&net.bn1};
  const MaskedConv* convs[] = {&net.conv2};
  const IdentityResidual r = GradientIdentityResidual(norms, convs);
  EXPECT_EQ(r.bn_side[1], 0.0);
  EXPECT_NE(r.conv_side[1], 0.0);
  EXPECT_NEAR(r.bn_side[0], r.conv_side[0], 1e-5 * std::max(1.0, r.scale));
}

TEST(ProbeTest, NoMaskingMeansNoDifference) {
  const ProbeResult r = GradientProbe(1.0, {});
  EXPECT_EQ(r.kept, 16);
  EXPECT_EQ(r.unscaled_mean_abs_gz, r.scaled_mean_abs_gz);
  EXPECT_EQ(r.unscaled_mean_abs_gz, r.unpruned_mean_abs_gz);
}

TEST(ProbeTest, ScalingDampsGradientGrowth) {
  const ProbeResult r = GradientProbe(0.25, {});
  EXPECT_EQ(r.kept, 4);
  EXPECT_LT(r.scaled_mean_abs_gz, r.unscaled_mean_abs_gz);
  EXPECT_GT(r.unscaled_mean_abs_gz, r.unpruned_mean_abs_gz);
}

TEST(ProbeTest, FullyMaskedLayer) {
  ProbeConfig config;
  config.eps = 0.0;
  const ProbeResult r = GradientProbe(0.0, config);
  EXPECT_FALSE(r.unscaled_finite);
  EXPECT_TRUE(r.scaled_finite);
  EXPECT_TRUE(std::isfinite(r.scaled_mean_abs_gz));
}

TEST(ProbeTest, VarianceFloorBoundsButAmplifies) {
  const ProbeResult r = GradientProbe(0.0, {});
  EXPECT_TRUE(r.unscaled_finite);
  EXPECT_GT(r.unscaled_mean_abs_gz, 100.0 * r.unpruned_mean_abs_gz);
  EXPECT_EQ(r.scaled_mean_abs_gz, 0.0);
}

}  // namespace
}  // namespace chprune::grad
