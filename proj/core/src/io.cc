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

#include "chprune/io.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chprune/error.h"

namespace chprune {

namespace {

const Json& Field(const Json& object, const char* key, const char* where) {
  if (!object.is_object() || !object.contains(key)) {
    throw Error(ErrorCode::kConfig,
                std::string(where) + ": missing field \"" + key + "\"");
  }
  return object.at(key);
}

template <typename T>
T Get(const Json& object, const char* key, const char* where) {
  const Json& value = Field(object, key, where);
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kConfig, std::string(where) + ": field \"" + key +
                                        "\" has the wrong type");
  }
}

const Json& Array(const Json& object, const char* key, const char* where) {
  const Json& value = Field(object, key, where);
  if (!value.is_array()) {
    throw Error(ErrorCode::kConfig, std::string(where) + ": field \"" + key +
                                        "\" must be an array");
  }
  return value;
}

}  // namespace

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kConfig, "cannot open " + path.string());
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kConfig, "cannot write " + path.string());
  }
  out << json.dump(2) << '\n';
}

mck::Instance InstanceFromJson(const Json& json) {
  mck::Instance instance;
  instance.capacity = Get<double>(json, "capacity", "instance");
  for (const Json& group : Array(json, "groups", "instance")) {
    instance.groups.emplace_back(
        Get<std::vector<double>>(group, "values", "instance group"),
        Get<std::vector<double>>(group, "costs", "instance group"));
  }
  try {
    instance.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return instance;
}

Json InstanceToJson(const mck::Instance& instance) {
  Json groups = Json::array();
  for (const mck::ItemGroup& group : instance.groups) {
    groups.push_back({{"values", group.values}, {"costs", group.costs}});
  }
  return {{"capacity", instance.capacity}, {"groups", groups}};
}

Json SolutionToJson(const mck::Instance& instance,
                    const mck::Solution& solution) {
  Json chosen = Json::array();
  for (std::size_t g = 0; g < solution.chosen.size(); ++g) {
    chosen.push_back(instance.groups[g].labels[solution.chosen[g]] + 1);
  }
  return {{"chosen", chosen},
          {"value", solution.total_value},
          {"cost", solution.total_cost}};
}

ImportanceMap ImportanceFromJson(const Json& json) {
  ImportanceMap importance;
  for (const Json& layer : Array(json, "layers", "importance")) {
    const auto id = Get<std::string>(layer, "id", "importance layer");
    if (!importance
             .emplace(id, Get<std::vector<double>>(layer, "scores",
                                                   "importance layer"))
             .second) {
      throw Error(ErrorCode::kConfig, "importance: duplicate layer " + id);
    }
  }
  return importance;
}

Json ImportanceToJson(const Topology& topology,
                      const ImportanceMap& importance) {
  Json layers = Json::array();
  for (const LayerSpec& layer : topology.layers) {
    auto it = importance.find(layer.id);
    if (it == importance.end()) continue;
    layers.push_back({{"id", layer.id}, {"scores", it->second}});
  }
  return {{"layers", layers}};
}

Topology TopologyFromJson(const Json& json) {
  Topology topology;
  for (const Json& entry : Array(json, "layers", "topology")) {
    LayerSpec layer;
    layer.id = Get<std::string>(entry, "id", "topology layer");
    layer.c_in = Get<int>(entry, "c_in", "topology layer");
    layer.c_out = Get<int>(entry, "c_out", "topology layer");
    layer.kernel = Get<int>(entry, "kernel", "topology layer");
    if (entry.contains("downstream")) {
      layer.downstream =
          Get<std::vector<std::string>>(entry, "downstream", "topology layer");
    }
    if (entry.contains("shared_input_group") &&
        !entry.at("shared_input_group").is_null()) {
      layer.shared_input_group =
          Get<std::string>(entry, "shared_input_group", "topology layer");
    }
    if (entry.contains("permitted")) {
      layer.permitted =
          Get<std::vector<int>>(entry, "permitted", "topology layer");
      std::sort(layer.permitted.begin(), layer.permitted.end());
    }
    if (entry.contains("out_h")) {
      layer.out_h = Get<int>(entry, "out_h", "topology layer");
    }
    if (entry.contains("out_w")) {
      layer.out_w = Get<int>(entry, "out_w", "topology layer");
    }
    topology.layers.push_back(std::move(layer));
  }
  topology.Validate();
  return topology;
}

Json TopologyToJson(const Topology& topology) {
  Json layers = Json::array();
  for (const LayerSpec& layer : topology.layers) {
    Json entry = {{"id", layer.id},
                  {"c_in", layer.c_in},
                  {"c_out", layer.c_out},
                  {"kernel", layer.kernel},
                  {"downstream", layer.downstream},
                  {"shared_input_group", layer.shared_input_group}};
    if (!layer.permitted.empty()) entry["permitted"] = layer.permitted;
    entry["out_h"] = layer.out_h;
    entry["out_w"] = layer.out_w;
    layers.push_back(std::move(entry));
  }
  return {{"layers", layers}};
}

CostLut LutFromJson(const Json& json) {
  CostLut lut;
  if (json.contains("meta")) {
    const Json& meta = json.at("meta");
    if (meta.contains("batch")) lut.batch = Get<int>(meta, "batch", "lut meta");
    if (meta.contains("device")) {
      lut.device = Get<std::string>(meta, "device", "lut meta");
    }
  }
  for (const Json& layer : Array(json, "layers", "lut")) {
    const auto id = Get<std::string>(layer, "id", "lut layer");
    for (const Json& row : Array(layer, "rows", "lut layer")) {
      const double ms = Get<double>(row, "ms", "lut row");
      if (!(ms >= 0.0) || !std::isfinite(ms)) {
        throw Error(ErrorCode::kConfig,
                    "lut: negative or non-finite latency for " + id);
      }
      lut.Set(id, Get<int>(row, "p_in", "lut row"),
              Get<int>(row, "p_out", "lut row"), ms);
    }
  }
  return lut;
}

Json LutToJson(const CostLut& lut, const Topology* topology) {
  std::vector<std::string> ids;
  if (topology != nullptr) {
    for (const LayerSpec& layer : topology->layers) {
      if (lut.tables.count(layer.id)) ids.push_back(layer.id);
    }
  } else {
    for (const auto& [id, table] : lut.tables) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
  }
  Json layers = Json::array();
  for (const std::string& id : ids) {
    Json rows = Json::array();
    for (const auto& [key, ms] : lut.tables.at(id)) {
      rows.push_back({{"p_in", key.first}, {"p_out", key.second}, {"ms", ms}});
    }
    layers.push_back({{"id", id}, {"rows", rows}});
  }
  return {{"meta", {{"batch", lut.batch}, {"device", lut.device}}},
          {"layers", layers}};
}

Json PlanToJson(const ChannelPlan& plan) {
  Json groups = Json::array();
  for (const GroupPlan& group : plan.groups) {
    Json mask = Json::array();
    for (std::uint8_t bit : group.mask) mask.push_back(static_cast<int>(bit));
    groups.push_back({{"tag", group.tag},
                      {"layers", group.layers},
                      {"kept", group.kept},
                      {"mask", mask}});
  }
  return {{"groups", groups},
          {"total_cost_ms", plan.total_cost},
          {"target_ms", plan.target},
          {"kept_importance", plan.kept_importance}};
}

}  // namespace chprune
