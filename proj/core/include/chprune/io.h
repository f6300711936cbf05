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

#ifndef CHPRUNE_IO_H_
#define CHPRUNE_IO_H_

// JSON readers and writers for every file the tool consumes or produces.
// Parse failures and schema violations throw Error(kConfig).

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "chprune/allocation.h"
#include "chprune/cost_model.h"
#include "chprune/mck.h"
#include "chprune/topology.h"

namespace chprune {

using Json = nlohmann::ordered_json;

Json ReadJsonFile(const std::filesystem::path& path);
// Writes `json` with two-space indentation and a trailing newline.
void WriteJsonFile(const std::filesystem::path& path, const Json& json);

// {"capacity": C, "groups": [{"values": [...], "costs": [...]}]}
mck::Instance InstanceFromJson(const Json& json);
Json InstanceToJson(const mck::Instance& instance);
// {"chosen": [1-based item index per group], "value": v, "cost": c}
Json SolutionToJson(const mck::Instance& instance,
                    const mck::Solution& solution);

// {"layers": [{"id": str, "scores": [...]}]}
ImportanceMap ImportanceFromJson(const Json& json);
Json ImportanceToJson(const Topology& topology,
                      const ImportanceMap& importance);

// {"layers": [{"id", "c_in", "c_out", "kernel", "downstream",
//              "shared_input_group", optional "permitted", "out_h",
//              "out_w"}]}
Topology TopologyFromJson(const Json& json);
Json TopologyToJson(const Topology& topology);

// {"meta": {"batch", "device"}, "layers": [{"id", "rows": [{"p_in",
// "p_out", "ms"}]}]}. Layers are written in topology order when one is
// given, otherwise sorted by id.
CostLut LutFromJson(const Json& json);
Json LutToJson(const CostLut& lut, const Topology* topology = nullptr);

// {"groups": [{"layers", "kept", "mask"}], "total_cost_ms", "target_ms"}
Json PlanToJson(const ChannelPlan& plan);

}  // namespace chprune

#endif  // CHPRUNE_IO_H_
