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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chprune/error.h"

namespace chprune::grad {

namespace {

void RequireSameShape(const Tensor4& a, const Tensor4& b, const char* op) {
  if (a.n() != b.n() || a.c() != b.c() || a.h() != b.h() || a.w() != b.w()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Tensor4::Tensor4(int n, int c, int h, int w)
    : n_(n),
      c_(c),
      h_(h),
      w_(w),
      data_(static_cast<std::size_t>(n) * c * h * w, 0.0),
      grad_(data_.size(), 0.0) {}

void Tensor4::ZeroGrad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

bool Tensor4::AllFinite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(data_.begin(), data_.end(), finite) &&
         std::all_of(grad_.begin(), grad_.end(), finite);
}

void Tensor4::FillNormal(Rng& rng, double stddev) {
  for (double& v : data_) v = stddev * rng.Normal();
}

TensorPtr MakeTensor(int n, int c, int h, int w) {
  return std::make_shared<Tensor4>(n, c, h, w);
}

void Tape::Backward(const TensorPtr& loss) {
  if (loss->size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar loss");
  }
  loss->grad()[0] = 1.0;
  for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
  Clear();
}

MaskedConv::MaskedConv(int c_in, int c_out, int kernel, Rng& rng)
    : weight(MakeTensor(c_out, c_in, kernel, kernel)), mask(c_in, 1) {
  weight->FillNormal(rng, std::sqrt(2.0 / (c_in * kernel * kernel)));
}

int MaskedConv::kept() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), 1));
}

Tensor4 MaskedConv::EffectiveWeight() const {
  Tensor4 effective = *weight;
  for (int o = 0; o < c_out(); ++o) {
    for (int i = 0; i < c_in(); ++i) {
      if (mask[i]) continue;
      for (int r = 0; r < kernel(); ++r) {
        for (int s = 0; s < kernel(); ++s) effective.at(o, i, r, s) = 0.0;
      }
    }
  }
  effective.ZeroGrad();
  return effective;
}

void MaskedConv::ZeroGrad() {
  weight->ZeroGrad();
  has_gradient = false;
}

void MaskedConv::ApplyMaskPermanently() {
  Tensor4 effective = EffectiveWeight();
  weight->data() = effective.data();
}

BatchNorm::BatchNorm(int channels)
    : gamma_orig(MakeTensor(1, channels, 1, 1)),
      beta(MakeTensor(1, channels, 1, 1)),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {
  std::fill(gamma_orig->data().begin(), gamma_orig->data().end(), 1.0);
}

void BatchNorm::ZeroGrad() {
  gamma_orig->ZeroGrad();
  beta->ZeroGrad();
}

Linear::Linear(int in_features, int out_features, Rng& rng)
    : weight(MakeTensor(out_features, in_features, 1, 1)),
      bias(MakeTensor(1, out_features, 1, 1)) {
  weight->FillNormal(rng, std::sqrt(1.0 / in_features));
}

void Linear::ZeroGrad() {
  weight->ZeroGrad();
  bias->ZeroGrad();
}

TensorPtr Conv2d(Tape& tape, const TensorPtr& x, MaskedConv& conv) {
  const int k = conv.kernel();
  if (k != 1 && k != 3) {
    throw Error(ErrorCode::kShapeMismatch, "conv: kernel must be 1 or 3");
  }
  if (x->c() != conv.c_in() ||
      static_cast<int>(conv.mask.size()) != conv.c_in()) {
    throw Error(ErrorCode::kShapeMismatch,
                "conv: input has " + std::to_string(x->c()) +
                    " channels, layer expects " + std::to_string(conv.c_in()));
  }
  const int batch = x->n();
  const int height = x->h();
  const int width = x->w();
  const int pad = k / 2;
  auto y = MakeTensor(batch, conv.c_out(), height, width);
  auto effective = std::make_shared<Tensor4>(conv.EffectiveWeight());
  conv.has_gradient = false;

  // Visits every (output, input, tap) triple with the valid output rectangle
  // for that tap; fn(y_row, x_row, len) handles one contiguous row.
  const int c_out = conv.c_out();
  const int c_in = conv.c_in();
  auto x_index = [=](int n, int c, int h, int w) {
    return ((static_cast<std::size_t>(n) * c_in + c) * height + h) * width + w;
  };
  auto y_index = [=](int n, int c, int h, int w) {
    return ((static_cast<std::size_t>(n) * c_out + c) * height + h) * width + w;
  };
  auto for_each_tap = [=](auto&& fn) {
    for (int n = 0; n < batch; ++n) {
      for (int o = 0; o < c_out; ++o) {
        for (int i = 0; i < c_in; ++i) {
          for (int r = 0; r < k; ++r) {
            const int h_lo = std::max(0, pad - r);
            const int h_hi = std::min(height, height + pad - r);
            for (int s = 0; s < k; ++s) {
              const int w_lo = std::max(0, pad - s);
              const int w_hi = std::min(width, width + pad - s);
              if (w_lo >= w_hi) continue;
              for (int h = h_lo; h < h_hi; ++h) {
                fn(n, o, i, r, s, h, w_lo, w_hi - w_lo,
                   y_index(n, o, h, w_lo),
                   x_index(n, i, h + r - pad, w_lo + s - pad));
              }
            }
          }
        }
      }
    }
  };

  {
    const double* xd = x->data().data();
    double* yd = y->data().data();
    for_each_tap([&](int, int o, int i, int r, int s, int, int, int len,
                     std::size_t yi, std::size_t xi) {
      const double w = effective->at(o, i, r, s);
      if (w == 0.0) return;
      for (int t = 0; t < len; ++t) yd[yi + t] += w * xd[xi + t];
    });
  }

  tape.Record([x, y, effective, &conv, for_each_tap]() {
    const double* xd = x->data().data();
    const double* gy = y->grad().data();
    double* gx = x->grad().data();
    Tensor4& gw = *conv.weight;
    for_each_tap([&](int, int o, int i, int r, int s, int, int, int len,
                     std::size_t yi, std::size_t xi) {
      const double w = effective->at(o, i, r, s);
      double acc = 0.0;
      for (int t = 0; t < len; ++t) {
        acc += gy[yi + t] * xd[xi + t];
        gx[xi + t] += w * gy[yi + t];
      }
      if (conv.straight_through || conv.mask[i]) {
        gw.grad_at(o, i, r, s) += acc;
      }
    });
    conv.has_gradient = true;
  });
  return y;
}

TensorPtr BatchNorm2d(Tape& tape, const TensorPtr& x, BatchNorm& bn) {
  if (x->c() != bn.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "batchnorm: channel count differs");
  }
  const int batch = x->n();
  const int channels = x->c();
  const int plane = x->h() * x->w();
  const int count = batch * plane;
  if (count < 2) {
    throw Error(ErrorCode::kDegenerateBatch,
                "batch statistics need at least two values per channel");
  }
  auto y = MakeTensor(batch, channels, x->h(), x->w());
  auto normalized = std::make_shared<std::vector<double>>(x->size());
  bn.batch_mean.assign(channels, 0.0);
  bn.batch_std.assign(channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    double mean = 0.0;
    for (int n = 0; n < batch; ++n) {
      const double* row = x->data().data() + x->Index(n, c, 0, 0);
      for (int p = 0; p < plane; ++p) mean += row[p];
    }
    mean /= count;
    double var = 0.0;
    for (int n = 0; n < batch; ++n) {
      const double* row = x->data().data() + x->Index(n, c, 0, 0);
      for (int p = 0; p < plane; ++p) var += (row[p] - mean) * (row[p] - mean);
    }
    var /= count;
    const double sigma = std::sqrt(var + bn.eps);
    bn.batch_mean[c] = mean;
    bn.batch_std[c] = sigma;
    bn.running_mean[c] =
        (1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * mean;
    bn.running_var[c] = (1.0 - bn.momentum) * bn.running_var[c] +
                        bn.momentum * var * count / (count - 1);
    const double gamma = bn.EffectiveGamma(c);
    const double beta = bn.beta->data()[c];
    for (int n = 0; n < batch; ++n) {
      const std::size_t base = x->Index(n, c, 0, 0);
      for (int p = 0; p < plane; ++p) {
        const double xhat = (x->data()[base + p] - mean) / sigma;
        (*normalized)[base + p] = xhat;
        // A zero effective scale makes the channel the constant beta.
        y->data()[base + p] = gamma == 0.0 ? beta : gamma * xhat + beta;
      }
    }
  }

  tape.Record([x, y, normalized, &bn, batch, channels, plane, count]() {
    for (int c = 0; c < channels; ++c) {
      double g_gamma = 0.0;  // with respect to the effective gamma
      double g_beta = 0.0;
      for (int n = 0; n < batch; ++n) {
        const std::size_t base = y->Index(n, c, 0, 0);
        for (int p = 0; p < plane; ++p) {
          const double g = y->grad()[base + p];
          g_beta += g;
          if (g != 0.0) g_gamma += g * (*normalized)[base + p];
        }
      }
      bn.gamma_orig->grad()[c] += bn.scale * g_gamma;
      bn.beta->grad()[c] += g_beta;
      const double gamma = bn.EffectiveGamma(c);
      if (gamma == 0.0) continue;
      const double factor = gamma / bn.batch_std[c];
      for (int n = 0; n < batch; ++n) {
        const std::size_t base = y->Index(n, c, 0, 0);
        for (int p = 0; p < plane; ++p) {
          x->grad()[base + p] +=
              factor * (y->grad()[base + p] - g_beta / count -
                        (*normalized)[base + p] * g_gamma / count);
        }
      }
    }
  });
  return y;
}

TensorPtr Relu(Tape& tape, const TensorPtr& x) {
  auto y = MakeTensor(x->n(), x->c(), x->h(), x->w());
  auto& pattern = tape.relu_pattern();
  for (std::size_t k = 0; k < x->size(); ++k) {
    const bool on = x->data()[k] > 0.0;
    y->data()[k] = on ? x->data()[k] : 0.0;
    pattern.push_back(on ? 1 : 0);
  }
  tape.Record([x, y]() {
    for (std::size_t k = 0; k < x->size(); ++k) {
      if (x->data()[k] > 0.0) x->grad()[k] += y->grad()[k];
    }
  });
  return y;
}

TensorPtr Add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
  RequireSameShape(*a, *b, "add");
  auto y = MakeTensor(a->n(), a->c(), a->h(), a->w());
  for (std::size_t k = 0; k < a->size(); ++k) {
    y->data()[k] = a->data()[k] + b->data()[k];
  }
  tape.Record([a, b, y]() {
    for (std::size_t k = 0; k < y->size(); ++k) {
      a->grad()[k] += y->grad()[k];
      b->grad()[k] += y->grad()[k];
    }
  });
  return y;
}

TensorPtr GlobalAvgPool(Tape& tape, const TensorPtr& x) {
  auto y = MakeTensor(x->n(), x->c(), 1, 1);
  const int plane = x->h() * x->w();
  for (int n = 0; n < x->n(); ++n) {
    for (int c = 0; c < x->c(); ++c) {
      const double* row = x->data().data() + x->Index(n, c, 0, 0);
      y->at(n, c, 0, 0) = std::accumulate(row, row + plane, 0.0) / plane;
    }
  }
  tape.Record([x, y, plane]() {
    for (int n = 0; n < x->n(); ++n) {
      for (int c = 0; c < x->c(); ++c) {
        const double g = y->grad_at(n, c, 0, 0) / plane;
        double* row = x->grad().data() + x->Index(n, c, 0, 0);
        for (int p = 0; p < plane; ++p) row[p] += g;
      }
    }
  });
  return y;
}

TensorPtr LinearForward(Tape& tape, const TensorPtr& x, Linear& linear) {
  const int in = linear.weight->c();
  const int out = linear.weight->n();
  if (x->c() != in || x->h() != 1 || x->w() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "linear: expected (N, C, 1, 1)");
  }
  auto y = MakeTensor(x->n(), out, 1, 1);
  for (int n = 0; n < x->n(); ++n) {
    for (int k = 0; k < out; ++k) {
      double acc = linear.bias->data()[k];
      for (int c = 0; c < in; ++c) {
        acc += linear.weight->at(k, c, 0, 0) * x->at(n, c, 0, 0);
      }
      y->at(n, k, 0, 0) = acc;
    }
  }
  tape.Record([x, y, &linear, in, out]() {
    for (int n = 0; n < x->n(); ++n) {
      for (int k = 0; k < out; ++k) {
        const double g = y->grad_at(n, k, 0, 0);
        linear.bias->grad()[k] += g;
        for (int c = 0; c < in; ++c) {
          linear.weight->grad_at(k, c, 0, 0) += g * x->at(n, c, 0, 0);
          x->grad_at(n, c, 0, 0) += g * linear.weight->at(k, c, 0, 0);
        }
      }
    }
  });
  return y;
}

TensorPtr SoftmaxCrossEntropy(Tape& tape, const TensorPtr& logits,
                              std::span<const int> labels) {
  const int batch = logits->n();
  const int classes = logits->c();
  if (static_cast<int>(labels.size()) != batch) {
    throw Error(ErrorCode::kShapeMismatch, "cross-entropy: label count");
  }
  auto loss = MakeTensor(1, 1, 1, 1);
  auto probs = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(batch) * classes);
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    double top = logits->at(n, 0, 0, 0);
    for (int k = 1; k < classes; ++k) top = std::max(top, logits->at(n, k, 0, 0));
    double z = 0.0;
    for (int k = 0; k < classes; ++k) {
      const double e = std::exp(logits->at(n, k, 0, 0) - top);
      (*probs)[n * classes + k] = e;
      z += e;
    }
    for (int k = 0; k < classes; ++k) (*probs)[n * classes + k] /= z;
    total -= std::log((*probs)[n * classes + labels[n]]);
  }
  loss->data()[0] = total / batch;
  std::vector<int> label_copy(labels.begin(), labels.end());
  tape.Record([logits, loss, probs, label_copy, batch, classes]() {
    const double g = loss->grad()[0] / batch;
    for (int n = 0; n < batch; ++n) {
      for (int k = 0; k < classes; ++k) {
        const double target = k == label_copy[n] ? 1.0 : 0.0;
        logits->grad_at(n, k, 0, 0) += g * ((*probs)[n * classes + k] - target);
      }
    }
  });
  return loss;
}

TensorPtr WeightedSum(Tape& tape, const TensorPtr& x,
                      std::span<const double> weights) {
  if (weights.size() != x->size()) {
    throw Error(ErrorCode::kShapeMismatch, "weighted sum: size differs");
  }
  auto loss = MakeTensor(1, 1, 1, 1);
  double total = 0.0;
  for (std::size_t k = 0; k < x->size(); ++k) total += x->data()[k] * weights[k];
  loss->data()[0] = total;
  std::vector<double> w(weights.begin(), weights.end());
  tape.Record([x, loss, w]() {
    const double g = loss->grad()[0];
    for (std::size_t k = 0; k < x->size(); ++k) x->grad()[k] += g * w[k];
  });
  return loss;
}

void BnRescale(BatchNorm& bn, std::span<const std::uint8_t> mask) {
  if (mask.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "rescale: empty mask");
  }
  const auto kept = std::count(mask.begin(), mask.end(), 1);
  bn.scale = static_cast<double>(kept) / static_cast<double>(mask.size());
}

std::vector<double> TaylorImportance(const MaskedConv& conv) {
  if (!conv.has_gradient) {
    throw Error(ErrorCode::kStaleGradient,
                "importance requested before a backward pass");
  }
  std::vector<double> importance(conv.c_in(), 0.0);
  const Tensor4& w = *conv.weight;
  for (int i = 0; i < conv.c_in(); ++i) {
    double sum = 0.0;
    for (int o = 0; o < conv.c_out(); ++o) {
      for (int r = 0; r < conv.kernel(); ++r) {
        for (int s = 0; s < conv.kernel(); ++s) {
          sum += w.at(o, i, r, s) * w.grad_at(o, i, r, s);
        }
      }
    }
    importance[i] = std::abs(sum);
  }
  return importance;
}

IdentityResidual GradientIdentityResidual(
    std::span<const BatchNorm* const> norms,
    std::span<const MaskedConv* const> consumers) {
  if (norms.empty() || consumers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "identity check needs both sides");
  }
  const int channels = norms.front()->channels();
  IdentityResidual result;
  result.bn_side.assign(channels, 0.0);
  result.conv_side.assign(channels, 0.0);
  for (const BatchNorm* bn : norms) {
    if (bn->channels() != channels) {
      throw Error(ErrorCode::kShapeMismatch, "identity check: channel counts");
    }
    for (int c = 0; c < channels; ++c) {
      // gamma * g_gamma is the same for the effective and original weight.
      result.bn_side[c] += bn->gamma_orig->data()[c] * bn->gamma_orig->grad()[c] +
                           bn->beta->data()[c] * bn->beta->grad()[c];
    }
  }
  for (const MaskedConv* conv : consumers) {
    if (conv->c_in() != channels) {
      throw Error(ErrorCode::kShapeMismatch, "identity check: channel counts");
    }
    const Tensor4& w = *conv->weight;
    for (int c = 0; c < channels; ++c) {
      for (int o = 0; o < conv->c_out(); ++o) {
        for (int r = 0; r < conv->kernel(); ++r) {
          for (int s = 0; s < conv->kernel(); ++s) {
            result.conv_side[c] += w.at(o, c, r, s) * w.grad_at(o, c, r, s);
          }
        }
      }
    }
  }
  for (int c = 0; c < channels; ++c) {
    result.max_abs = std::max(
        result.max_abs, std::abs(result.bn_side[c] - result.conv_side[c]));
    result.scale = std::max({result.scale, std::abs(result.bn_side[c]),
                             std::abs(result.conv_side[c])});
  }
  result.relative = result.scale > 0.0 ? result.max_abs / result.scale : 0.0;
  return result;
}

namespace {

// Mean |dL/dz| at the convolution output and whether everything stayed
// finite.
std::pair<double, bool> RunProbe(const ProbeConfig& config,
                                 const Tensor4& input, MaskedConv& conv,
                                 BatchNorm& bn,
                                 const std::vector<double>& readout) {
  Tape tape;
  auto x = std::make_shared<Tensor4>(input);
  conv.ZeroGrad();
  bn.ZeroGrad();
  auto z = Conv2d(tape, x, conv);
  auto y = BatchNorm2d(tape, z, bn);
  auto loss = WeightedSum(tape, y, readout);
  tape.Backward(loss);
  double sum = 0.0;
  bool finite = loss->AllFinite() && y->AllFinite();
  for (double g : z->grad()) {
    sum += std::abs(g);
    finite = finite && std::isfinite(g);
  }
  finite = finite && conv.weight->AllFinite();
  (void)config;
  return {sum / static_cast<double>(z->size()), finite};
}

}  // namespace

ProbeResult GradientProbe(double keep_fraction, const ProbeConfig& config) {
  Rng rng(config.seed);
  MaskedConv conv(config.c_in, config.c_out, config.kernel, rng);
  BatchNorm bn(config.c_out);
  bn.eps = config.eps;
  for (double& g : bn.gamma_orig->data()) g = rng.Uniform(0.5, 1.5);
  for (double& b : bn.beta->data()) b = 0.1 * rng.Normal();
  Tensor4 input(config.batch, config.c_in, config.size, config.size);
  input.FillNormal(rng, 1.0);
  std::vector<double> readout(static_cast<std::size_t>(config.batch) *
                              config.c_out * config.size * config.size);
  for (double& r : readout) r = rng.Normal();

  ProbeResult result;
  result.kept = static_cast<int>(std::lround(keep_fraction * config.c_in));
  result.unpruned_mean_abs_gz =
      RunProbe(config, input, conv, bn, readout).first;

  for (int i = 0; i < config.c_in; ++i) {
    conv.mask[i] = i >= config.c_in - result.kept ? 1 : 0;
  }
  bn.scale = 1.0;
  std::tie(result.unscaled_mean_abs_gz, result.unscaled_finite) =
      RunProbe(config, input, conv, bn, readout);
  BnRescale(bn, conv.mask);
  std::tie(result.scaled_mean_abs_gz, result.scaled_finite) =
      RunProbe(config, input, conv, bn, readout);
  return result;
}

}  // namespace chprune::grad
