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

#ifndef CHPRUNE_MICROGRAD_H_
#define CHPRUNE_MICROGRAD_H_

// A small reverse-mode differentiation engine for Conv-BN-ReLU networks with
// soft input-channel masks.
//
// Forward ops append a backward closure to a Tape; Tape::Backward() runs them
// in reverse. Parameter gradients accumulate until ZeroGrad(). Everything is
// double precision, single-threaded per tape, and deterministic.
//
// Masked convolutions compute with W * m but keep W intact. In the default
// straight-through mode the dense weight receives the full gradient of the
// effective weight, while the input gradient still uses the masked weights.
// Batch normalization always uses batch statistics, and its effective scale is
// gamma_orig * s where s is set from the kept-channel fraction of the
// convolution feeding it.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "chprune/random.h"

namespace chprune::grad {

// Dense (N, C, H, W) array with a same-shaped gradient buffer.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w);

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return data_.size(); }

  std::size_t Index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w;
  }
  double& at(int n, int c, int h, int w) { return data_[Index(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const {
    return data_[Index(n, c, h, w)];
  }
  double& grad_at(int n, int c, int h, int w) {
    return grad_[Index(n, c, h, w)];
  }
  double grad_at(int n, int c, int h, int w) const {
    return grad_[Index(n, c, h, w)];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }

  void ZeroGrad();
  bool AllFinite() const;

  void FillNormal(Rng& rng, double stddev);

 private:
  int n_ = 0;
  int c_ = 0;
  int h_ = 0;
  int w_ = 0;
  std::vector<double> data_;
  std::vector<double> grad_;
};

using TensorPtr = std::shared_ptr<Tensor4>;

TensorPtr MakeTensor(int n, int c, int h, int w);

class Tape {
 public:
  void Record(std::function<void()> backward) {
    backward_.push_back(std::move(backward));
  }

  // Seeds d(loss)/d(loss) = 1 for a single-element `loss`, then runs every
  // recorded closure newest first. The tape is cleared afterwards.
  void Backward(const TensorPtr& loss);

  void Clear() {
    backward_.clear();
    relu_pattern_.clear();
  }

  // Sign of every ReLU input seen during the forward pass; lets gradient
  // checks detect when a perturbation crossed a kink.
  std::vector<std::uint8_t>& relu_pattern() { return relu_pattern_; }

 private:
  std::vector<std::function<void()>> backward_;
  std::vector<std::uint8_t> relu_pattern_;
};

// Convolution with stride 1, zero padding K/2 and K in {1, 3}; no bias.
struct MaskedConv {
  TensorPtr weight;                 // (C_out, C_in, K, K)
  std::vector<std::uint8_t> mask;   // C_in entries, 1 = kept
  // Straight-through: dL/dW = dL/dW_eff. Hard masking: dL/dW = dL/dW_eff * m.
  bool straight_through = true;
  // Set by the backward pass, cleared by the forward pass and ZeroGrad().
  bool has_gradient = false;

  MaskedConv() = default;
  MaskedConv(int c_in, int c_out, int kernel, Rng& rng);

  int c_in() const { return weight->c(); }
  int c_out() const { return weight->n(); }
  int kernel() const { return weight->h(); }
  int kept() const;

  // W * m, materialized.
  Tensor4 EffectiveWeight() const;

  void ZeroGrad();

  // Permanently zeroes the dense weights of masked input channels.
  void ApplyMaskPermanently();
};

struct BatchNorm {
  TensorPtr gamma_orig;  // (1, C, 1, 1)
  TensorPtr beta;        // (1, C, 1, 1)
  double scale = 1.0;    // s in [0, 1]; effective gamma = gamma_orig * s
  double eps = 1e-5;
  double momentum = 0.1;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  // Statistics of the most recent forward pass.
  std::vector<double> batch_mean;
  std::vector<double> batch_std;

  BatchNorm() = default;
  explicit BatchNorm(int channels);

  int channels() const { return gamma_orig->c(); }
  double EffectiveGamma(int c) const {
    return gamma_orig->data()[c] * scale;
  }

  void ZeroGrad();
};

struct Linear {
  TensorPtr weight;  // (K, C, 1, 1)
  TensorPtr bias;    // (1, K, 1, 1)

  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng);

  void ZeroGrad();
};

// Ops. Each returns a fresh tensor and records its backward on `tape`.
// Shape errors throw Error(kShapeMismatch).
TensorPtr Conv2d(Tape& tape, const TensorPtr& x, MaskedConv& conv);
// Throws Error(kDegenerateBatch) when N * H * W < 2.
TensorPtr BatchNorm2d(Tape& tape, const TensorPtr& x, BatchNorm& bn);
TensorPtr Relu(Tape& tape, const TensorPtr& x);
TensorPtr Add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr GlobalAvgPool(Tape& tape, const TensorPtr& x);
// x: (N, C, 1, 1) -> (N, K, 1, 1).
TensorPtr LinearForward(Tape& tape, const TensorPtr& x, Linear& linear);
// Mean softmax cross-entropy over the batch; returns a (1, 1, 1, 1) tensor.
TensorPtr SoftmaxCrossEntropy(Tape& tape, const TensorPtr& logits,
                              std::span<const int> labels);
// sum(x * weights); returns a (1, 1, 1, 1) tensor.
TensorPtr WeightedSum(Tape& tape, const TensorPtr& x,
                      std::span<const double> weights);

// s <- (sum of mask) / |mask|. gamma_orig is untouched.
void BnRescale(BatchNorm& bn, std::span<const std::uint8_t> mask);

// |sum_{o,r,s} W[o,i,r,s] * dL/dW[o,i,r,s]| per input channel i, using the
// dense weights and their (straight-through) gradients. Throws
// Error(kStaleGradient) if no backward pass has run since the last forward.
std::vector<double> TaylorImportance(const MaskedConv& conv);

struct IdentityResidual {
  double max_abs = 0.0;
  // Largest magnitude of either side over all channels.
  double scale = 0.0;
  double relative = 0.0;
  std::vector<double> bn_side;
  std::vector<double> conv_side;
};

// Per channel i, compares sum_k (gamma_k,i g_gamma_k,i + beta_k,i g_beta_k,i)
// over the normalization layers whose (summed, rectified) output feeds the
// convolutions against sum_j sum_{o,r,s} W_j g_W_j over those convolutions.
// Exact in real arithmetic for unmasked or hard-masked networks.
IdentityResidual GradientIdentityResidual(std::span<const BatchNorm* const> norms,
                                 std::span<const MaskedConv* const> consumers);

struct ProbeConfig {
  int batch = 8;
  int c_in = 16;
  int c_out = 8;
  int size = 6;
  int kernel = 3;
  double eps = 1e-5;
  std::uint64_t seed = 7;
};

struct ProbeResult {
  int kept = 0;
  double unpruned_mean_abs_gz = 0.0;
  double unscaled_mean_abs_gz = 0.0;
  double scaled_mean_abs_gz = 0.0;
  bool unscaled_finite = true;
  bool scaled_finite = true;
};

// Conv -> BN -> fixed linear readout on a seeded random batch. Masks the
// first round((1 - keep_fraction) * c_in) input channels and reports the mean
// |dL/dz| at the convolution output, once with s = 1 and once with s set by
// BnRescale, alongside the unmasked baseline.
ProbeResult GradientProbe(double keep_fraction, const ProbeConfig& config);

}  // namespace chprune::grad

#endif  // CHPRUNE_MICROGRAD_H_
