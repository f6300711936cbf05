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

#ifndef CHPRUNE_TOPOLOGY_H_
#define CHPRUNE_TOPOLOGY_H_

#include <string>
#include <string_view>
#include <vector>

namespace chprune {

// One convolution layer as seen by the planner.
struct LayerSpec {
  std::string id;
  int c_in = 0;
  int c_out = 0;
  int kernel = 1;
  // Output spatial size; only the FLOPs cost model reads these.
  int out_h = 1;
  int out_w = 1;
  // Layers consuming this layer's output.
  std::vector<std::string> downstream;
  // Layers with the same tag read the same input channels and must share a
  // mask. Empty means the layer forms its own group.
  std::string shared_input_group;
  // Allowed kept-input-channel counts, ascending. Empty means "derive from
  // the multiple-of rule" (see ResolvePermitted).
  std::vector<int> permitted;

  const std::string& group_tag() const {
    return shared_input_group.empty() ? id : shared_input_group;
  }
};

struct Topology {
  std::vector<LayerSpec> layers;

  // Index of the layer with `id`, or -1.
  int IndexOf(std::string_view id) const;

  // Checks positive dimensions, unique ids, known downstream ids, matching
  // c_out/c_in across every edge, and permitted sets within [0, c_in].
  // Throws Error(kConfig) or Error(kShapeMismatch).
  void Validate() const;

  // Fills every empty `permitted` with LayerPermitted(c_in, ...).
  void ResolvePermitted(int multiple, bool allow_zero);

  // Distinct group tags in order of first appearance.
  std::vector<std::string> GroupTags() const;
};

// {i : i % multiple == 0, 0 < i <= c_in}, plus 0 iff allow_zero.
std::vector<int> PermittedMultiples(int c_in, int multiple = 8,
                                    bool allow_zero = false);

// PermittedMultiples() with c_in itself added, so the unpruned layer is
// always representable even when c_in is not a multiple.
std::vector<int> LayerPermitted(int c_in, int multiple, bool allow_zero);

// Union of the permitted sets of every layer carrying `tag`. Requires
// resolved permitted sets.
std::vector<int> GroupPermitted(const Topology& topology,
                                std::string_view tag);

struct ResNet50Options {
  int image_size = 224;
  // Freeze the stem convolution (P = {3}) and the layers reading the stem
  // output (P = {64}), as in the ImageNet experiments.
  bool freeze_stem = true;
};

// Torchvision-style ResNet50 (v1.5): 53 convolutions in 38 shared-input
// groups, 22,531 input channels in total. The classifier is not included.
Topology ResNet50Topology(const ResNet50Options& options = {});

// Sequential chain of 3x3 stride-1 convolutions: in_channels -> widths[0]
// -> widths[1] -> ... The first layer is frozen at its input width.
Topology ChainTopology(int in_channels, const std::vector<int>& widths,
                       int kernel, int image_size);

}  // namespace chprune

#endif  // CHPRUNE_TOPOLOGY_H_
