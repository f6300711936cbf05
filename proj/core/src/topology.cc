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

#include "chprune/topology.h"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "chprune/error.h"

namespace chprune {

int Topology::IndexOf(std::string_view id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

void Topology::Validate() const {
  std::unordered_set<std::string> seen;
  for (const LayerSpec& layer : layers) {
    if (layer.id.empty()) throw Error(ErrorCode::kConfig, "layer without id");
    if (!seen.insert(layer.id).second) {
      throw Error(ErrorCode::kConfig, "duplicate layer id " + layer.id);
    }
    if (layer.c_in <= 0 || layer.c_out <= 0 || layer.kernel <= 0 ||
        layer.out_h <= 0 || layer.out_w <= 0) {
      throw Error(ErrorCode::kConfig,
                  "layer " + layer.id + " has a non-positive dimension");
    }
    if (!std::is_sorted(layer.permitted.begin(), layer.permitted.end()) ||
        std::adjacent_find(layer.permitted.begin(), layer.permitted.end()) !=
            layer.permitted.end()) {
      throw Error(ErrorCode::kConfig,
                  "layer " + layer.id + " permitted set is not ascending");
    }
    for (int p : layer.permitted) {
      if (p < 0 || p > layer.c_in) {
        throw Error(ErrorCode::kConfig, "layer " + layer.id +
                                            " permits a count outside [0, c_in]");
      }
    }
  }
  for (const LayerSpec& layer : layers) {
    for (const std::string& next : layer.downstream) {
      const int k = IndexOf(next);
      if (k < 0) {
        throw Error(ErrorCode::kConfig,
                    "layer " + layer.id + " feeds unknown layer " + next);
      }
      if (layers[k].c_in != layer.c_out) {
        throw Error(ErrorCode::kShapeMismatch,
                    layer.id + " -> " + next + ": c_out " +
                        std::to_string(layer.c_out) + " != c_in " +
                        std::to_string(layers[k].c_in));
      }
    }
  }
}

void Topology::ResolvePermitted(int multiple, bool allow_zero) {
  for (LayerSpec& layer : layers) {
    if (layer.permitted.empty()) {
      layer.permitted = LayerPermitted(layer.c_in, multiple, allow_zero);
    }
  }
}

std::vector<std::string> Topology::GroupTags() const {
  std::vector<std::string> tags;
  std::unordered_set<std::string> seen;
  for (const LayerSpec& layer : layers) {
    if (seen.insert(layer.group_tag()).second) tags.push_back(layer.group_tag());
  }
  return tags;
}

std::vector<int> PermittedMultiples(int c_in, int multiple, bool allow_zero) {
  if (multiple < 1) {
    throw Error(ErrorCode::kInvalidArgument, "multiple must be >= 1");
  }
  std::vector<int> permitted;
  if (allow_zero) permitted.push_back(0);
  for (int i = multiple; i <= c_in; i += multiple) permitted.push_back(i);
  return permitted;
}

std::vector<int> LayerPermitted(int c_in, int multiple, bool allow_zero) {
  std::vector<int> permitted = PermittedMultiples(c_in, multiple, allow_zero);
  if (permitted.empty() || permitted.back() != c_in) permitted.push_back(c_in);
  return permitted;
}

std::vector<int> GroupPermitted(const Topology& topology,
                                std::string_view tag) {
  std::set<int> merged;
  for (const LayerSpec& layer : topology.layers) {
    if (layer.group_tag() == tag) {
      merged.insert(layer.permitted.begin(), layer.permitted.end());
    }
  }
  return {merged.begin(), merged.end()};
}

namespace {

LayerSpec Conv(std::string id, int c_in, int c_out, int kernel, int out_hw,
               std::string group) {
  LayerSpec layer;
  layer.id = std::move(id);
  layer.c_in = c_in;
  layer.c_out = c_out;
  layer.kernel = kernel;
  layer.out_h = out_hw;
  layer.out_w = out_hw;
  layer.shared_input_group = std::move(group);
  return layer;
}

}  // namespace

Topology ResNet50Topology(const ResNet50Options& options) {
  const int widths[4] = {64, 128, 256, 512};
  const int blocks[4] = {3, 4, 6, 3};
  Topology topology;
  auto& layers = topology.layers;

  const int stem_hw = options.image_size / 2;
  int hw = stem_hw / 2;  // after the stride-2 max pool
  layers.push_back(Conv("conv1", 3, 64, 7, stem_hw, "image"));
  if (options.freeze_stem) layers.back().permitted = {3};

  int stream = 0;
  int channels = 64;
  std::string stream_tag = "stream0";
  std::vector<std::string> writers = {"conv1"};  // layers feeding the stream
  for (int s = 0; s < 4; ++s) {
    const int width = widths[s];
    const int out_channels = 4 * width;
    for (int b = 0; b < blocks[s]; ++b) {
      const std::string prefix =
          "layer" + std::to_string(s + 1) + "." + std::to_string(b);
      const int in_hw = hw;
      const int out_hw = (b == 0 && s > 0) ? hw / 2 : hw;
      const std::string conv1 = prefix + ".conv1";
      const std::string conv2 = prefix + ".conv2";
      const std::string conv3 = prefix + ".conv3";
      std::vector<std::string> readers = {conv1};
      layers.push_back(Conv(conv1, channels, width, 1, in_hw, stream_tag));
      layers.back().downstream = {conv2};
      layers.push_back(Conv(conv2, width, width, 3, out_hw, conv2));
      layers.back().downstream = {conv3};
      layers.push_back(Conv(conv3, width, out_channels, 1, out_hw, conv3));
      std::vector<std::string> new_writers = {conv3};
      if (b == 0) {
        const std::string down = prefix + ".downsample";
        layers.push_back(
            Conv(down, channels, out_channels, 1, out_hw, stream_tag));
        readers.push_back(down);
        new_writers.push_back(down);
      }
      // Every writer of the incoming stream feeds this block's readers.
      for (const std::string& w : writers) {
        LayerSpec& writer = layers[topology.IndexOf(w)];
        writer.downstream.insert(writer.downstream.end(), readers.begin(),
                                 readers.end());
      }
      // After the first block, the previous writers keep writing into the
      // same residual stream, so they remain writers.
      if (b == 0) {
        writers = new_writers;
        ++stream;
        stream_tag = "stream" + std::to_string(stream);
      } else {
        writers.insert(writers.end(), new_writers.begin(), new_writers.end());
      }
      channels = out_channels;
      hw = out_hw;
    }
  }
  if (options.freeze_stem) {
    for (LayerSpec& layer : layers) {
      if (layer.shared_input_group == "stream0") layer.permitted = {64};
    }
  }
  return topology;
}

Topology ChainTopology(int in_channels, const std::vector<int>& widths,
                       int kernel, int image_size) {
  Topology topology;
  int channels = in_channels;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    LayerSpec layer = Conv("conv" + std::to_string(l + 1), channels,
                           widths[l], kernel, image_size, "");
    if (l + 1 < widths.size()) {
      layer.downstream = {"conv" + std::to_string(l + 2)};
    }
    if (l == 0) layer.permitted = {in_channels};
    topology.layers.push_back(std::move(layer));
    channels = widths[l];
  }
  return topology;
}

}  // namespace chprune
