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

#include "chprune/cost_model.h"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "chprune/error.h"

namespace chprune {

double CostLut::Lookup(std::string_view layer_id, int p_in, int p_out) const {
  auto table = tables.find(std::string(layer_id));
  if (table == tables.end()) {
    throw Error(ErrorCode::kLutMiss,
                "no table for layer " + std::string(layer_id));
  }
  auto entry = table->second.find({p_in, p_out});
  if (entry == table->second.end()) {
    throw Error(ErrorCode::kLutMiss, "layer " + std::string(layer_id) +
                                         " has no entry for (" +
                                         std::to_string(p_in) + ", " +
                                         std::to_string(p_out) + ")");
  }
  return entry->second;
}

void CostLut::Set(const std::string& layer_id, int p_in, int p_out,
                  double ms) {
  tables[layer_id][{p_in, p_out}] = ms;
}

std::int64_t FlopsCost(const LayerSpec& layer, int p_in, int p_out) {
  return 2 * static_cast<std::int64_t>(p_in) * p_out * layer.kernel *
         layer.kernel * layer.out_h * layer.out_w;
}

namespace {

double Unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int Blocks(int count, int period) { return (count + period - 1) / period; }

}  // namespace

CostLut SynthLut(const Topology& topology, const SynthLutOptions& options) {
  if (options.cliff_period < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cliff_period must be >= 1");
  }
  const int period = options.cliff_period;
  struct Profile {
    std::vector<int> p_in;
    std::vector<int> p_out;
    std::vector<double> in_jitter;   // cumulative, indexed by block
    std::vector<double> out_jitter;  // cumulative, indexed by block
    double work_per_block;
    double overhead;
  };
  std::vector<Profile> profiles;
  double full = 0.0;
  for (std::size_t l = 0; l < topology.layers.size(); ++l) {
    const LayerSpec& layer = topology.layers[l];
    std::seed_seq seq{options.seed, static_cast<std::uint64_t>(l)};
    std::mt19937_64 rng(seq);
    Profile profile;
    profile.p_in = GroupPermitted(topology, layer.group_tag());
    std::set<int> outs;
    for (const std::string& next : layer.downstream) {
      const LayerSpec& consumer = topology.layers[topology.IndexOf(next)];
      for (int p : GroupPermitted(topology, consumer.group_tag())) {
        outs.insert(p);
      }
    }
    outs.insert(layer.c_out);
    profile.p_out.assign(outs.begin(), outs.end());
    const int in_blocks = Blocks(layer.c_in, period);
    const int out_blocks = Blocks(layer.c_out, period);
    profile.in_jitter.assign(in_blocks + 1, 0.0);
    profile.out_jitter.assign(out_blocks + 1, 0.0);
    for (int b = 1; b <= in_blocks; ++b) {
      profile.in_jitter[b] =
          profile.in_jitter[b - 1] + 0.6 * out_blocks * Unit(rng);
    }
    for (int b = 1; b <= out_blocks; ++b) {
      profile.out_jitter[b] =
          profile.out_jitter[b - 1] + 0.6 * in_blocks * Unit(rng);
    }
    profile.work_per_block = static_cast<double>(layer.kernel) *
                             layer.kernel * layer.out_h * layer.out_w;
    const double dense =
        profile.work_per_block *
        (in_blocks * out_blocks + profile.in_jitter[in_blocks] +
         profile.out_jitter[out_blocks]);
    profile.overhead = (0.02 + 0.03 * Unit(rng)) * dense;
    full += dense + profile.overhead;
    profiles.push_back(std::move(profile));
  }
  const double scale = full > 0.0 ? options.full_cost_ms / full : 0.0;

  CostLut lut;
  lut.batch = options.batch;
  lut.device = options.device;
  for (std::size_t l = 0; l < topology.layers.size(); ++l) {
    const Profile& profile = profiles[l];
    const std::string& id = topology.layers[l].id;
    auto& table = lut.tables[id];
    for (int p_in : profile.p_in) {
      for (int p_out : profile.p_out) {
        double ms = 0.0;
        if (p_in > 0 && p_out > 0) {
          const int bi = Blocks(p_in, period);
          const int bo = Blocks(p_out, period);
          ms = scale * (profile.work_per_block *
                            (bi * bo + profile.in_jitter[bi] +
                             profile.out_jitter[bo]) +
                        profile.overhead);
        }
        table[{p_in, p_out}] = ms;
      }
    }
  }
  return lut;
}

}  // namespace chprune
