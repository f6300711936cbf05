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

#ifndef CHPRUNE_COST_MODEL_H_
#define CHPRUNE_COST_MODEL_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "chprune/topology.h"

namespace chprune {

// Layer-wise cost T(p_in, p_out). Implementations are read-only after
// construction and may be shared across threads.
class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual double Cost(const LayerSpec& layer, int p_in, int p_out) const = 0;
  virtual std::string_view units() const = 0;
};

// Measured latency tables: per layer id, (p_in, p_out) -> milliseconds.
// Lookups are exact; there is no interpolation and no monotonicity
// assumption.
struct CostLut {
  int batch = 0;
  std::string device;
  std::unordered_map<std::string, std::map<std::pair<int, int>, double>>
      tables;

  // Throws Error(kLutMiss) when the layer or the entry is absent.
  double Lookup(std::string_view layer_id, int p_in, int p_out) const;

  void Set(const std::string& layer_id, int p_in, int p_out, double ms);
};

class LutCostModel : public CostModel {
 public:
  explicit LutCostModel(CostLut lut) : lut_(std::move(lut)) {}

  double Cost(const LayerSpec& layer, int p_in, int p_out) const override {
    return lut_.Lookup(layer.id, p_in, p_out);
  }
  std::string_view units() const override { return "ms"; }

  const CostLut& lut() const { return lut_; }

 private:
  CostLut lut_;
};

// Dense convolution FLOPs, counting a multiply-add as two operations:
// 2 * p_in * p_out * K^2 * H_out * W_out.
std::int64_t FlopsCost(const LayerSpec& layer, int p_in, int p_out);

class FlopsCostModel : public CostModel {
 public:
  double Cost(const LayerSpec& layer, int p_in, int p_out) const override {
    return static_cast<double>(FlopsCost(layer, p_in, p_out));
  }
  std::string_view units() const override { return "flops"; }
};

struct SynthLutOptions {
  std::uint64_t seed = 0;
  // Latency is constant on blocks (k*period, (k+1)*period] of either count.
  int cliff_period = 8;
  // Total latency of the unpruned network; every entry is scaled to match.
  double full_cost_ms = 100.0;
  int batch = 256;
  std::string device = "synthetic";
};

// Deterministic piecewise-flat latency profile with jumps at multiples of
// cliff_period, nondecreasing in both counts. Rows are generated for every
// p_in in the layer's group permitted set and every p_out in the permitted
// set of its downstream group (or c_out for network outputs); requires
// resolved permitted sets. Entries with p_in == 0 or p_out == 0 cost 0.
CostLut SynthLut(const Topology& topology, const SynthLutOptions& options);

}  // namespace chprune

#endif  // CHPRUNE_COST_MODEL_H_
