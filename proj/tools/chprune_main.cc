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

// chprune: cost-constrained channel planning from the command line.
//
//   chprune solve instance.json [--solver mim|dp|brute] [--scale 1000]
//   chprune plan --topology t.json --importance i.json (--lut l.json |
//       --flops) --target-cost 50% [--out dir]
//   chprune simulate [--topology t.json] [--lut l.json | --flops]
//       --target-cost 50% [--epochs ...] [--out dir]
//   chprune gen-lut --topology t.json|resnet50|toy-chain [--out lut.json]
//   chprune verify all|mck|micrograd|schedule|allocation [--out r.json]
//
// Exit status: 0 success, 1 internal error, 2 infeasible target, 3 bad
// configuration or file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "chprune/allocation.h"
#include "chprune/cost_model.h"
#include "chprune/error.h"
#include "chprune/io.h"
#include "chprune/mck.h"
#include "chprune/simulate.h"
#include "chprune/topology.h"
#include "chprune/verify.h"

namespace chprune {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;

struct CommonOptions {
  std::uint64_t seed = 1;
  std::string target = "50%";
  std::string topology;
  std::string lut;
  bool flops = false;
  std::string importance;
  std::string out;
  int multiple = 8;
  bool allow_layer_pruning = false;
};

Topology LoadTopology(const std::string& spec, int image_size) {
  if (spec == "resnet50") return ResNet50Topology();
  if (spec == "toy-chain" || spec.empty()) {
    return ChainTopology(3, {16, 16, 32, 32}, 3, image_size);
  }
  return TopologyFromJson(ReadJsonFile(spec));
}

std::unique_ptr<CostModel> LoadCostModel(const CommonOptions& options) {
  if (options.flops) return std::make_unique<FlopsCostModel>();
  if (options.lut.empty()) {
    throw Error(ErrorCode::kConfig, "give either --lut <path> or --flops");
  }
  return std::make_unique<LutCostModel>(LutFromJson(ReadJsonFile(options.lut)));
}

std::filesystem::path OutputDir(const std::string& out) {
  std::filesystem::path dir = out.empty() ? "." : out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kConfig, "cannot create " + dir.string());
  return dir;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kConfig, "cannot write " + path.string());
  out << text;
}

void PrintPlanTable(const ChannelPlan& plan, const Topology& topology,
                    const std::vector<PruneGroup>& groups,
                    std::string_view units) {
  std::fprintf(stderr, "%-24s %8s %8s\n", "group", "kept", "c_in");
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    std::fprintf(stderr, "%-24s %8d %8d\n", plan.groups[g].tag.c_str(),
                 plan.groups[g].kept, groups[g].c_in);
  }
  std::fprintf(stderr, "cost %.6g %.*s (target %.6g) over %zu layers\n",
               plan.total_cost, static_cast<int>(units.size()), units.data(),
               plan.target, topology.layers.size());
}

int RunSolve(const std::string& path, const std::string& solver,
             std::int64_t scale, const std::string& out) {
  const mck::Instance instance = InstanceFromJson(ReadJsonFile(path));
  mck::Solution solution;
  if (solver == "mim") {
    solution = mck::SolveMeetInTheMiddle(instance);
  } else if (solver == "dp") {
    solution = mck::SolveDynamicProgramming(instance, scale);
  } else if (solver == "brute") {
    solution = mck::SolveBruteForce(instance);
  } else {
    throw Error(ErrorCode::kConfig, "unknown solver " + solver);
  }
  const Json json = SolutionToJson(instance, solution);
  if (!out.empty()) WriteJsonFile(out, json);
  std::cout << json.dump() << '\n';
  return kExitOk;
}

int RunPlan(const CommonOptions& options) {
  if (options.topology.empty() || options.importance.empty()) {
    throw Error(ErrorCode::kConfig, "plan needs --topology and --importance");
  }
  Topology topology = LoadTopology(options.topology, 8);
  topology.ResolvePermitted(options.multiple, options.allow_layer_pruning);
  topology.Validate();
  const auto cost_model = LoadCostModel(options);
  const ImportanceMap importance =
      ImportanceFromJson(ReadJsonFile(options.importance));
  const std::vector<PruneGroup> groups = BuildGroups(topology, importance);
  const double full = FullPlan(topology, groups, *cost_model).total_cost;
  const double target = ParseTargetCost(options.target, full);
  const PlanOutcome outcome =
      PlanChannels(topology, groups, *cost_model, target);
  const Json json = PlanToJson(outcome.plan);
  if (!options.out.empty()) {
    WriteJsonFile(OutputDir(options.out) / "plan.json", json);
  }
  std::cout << json.dump() << '\n';
  PrintPlanTable(outcome.plan, topology, groups, cost_model->units());
  return kExitOk;
}

int RunSimulate(const CommonOptions& options, SimConfig config) {
  config.seed = options.seed;
  config.target = options.target;
  config.multiple = options.multiple;
  config.allow_layer_pruning = options.allow_layer_pruning;
  config.use_flops = options.flops;
  if (!options.topology.empty()) {
    config.topology = LoadTopology(options.topology, config.data.image_size);
  }
  if (!options.lut.empty()) config.lut = LutFromJson(ReadJsonFile(options.lut));
  const SimResult result = RunSimulation(config);

  const std::filesystem::path dir = OutputDir(options.out);
  WriteText(dir / "trace.jsonl", TraceToJsonLines(result.trace));
  WriteText(dir / "timings.jsonl", TimingsToJsonLines(result.trace));
  WriteJsonFile(dir / "plan.json", PlanToJson(result.final_plan));
  std::fprintf(stderr,
               "%zu rewiring events; start cost %.6g, target %.6g, final %.6g; "
               "train accuracy %.3f\n",
               result.trace.size(), result.start_cost, result.target_cost,
               result.final_plan.total_cost, result.final_accuracy);
  PrintPlanTable(result.final_plan, result.topology,
                 BuildGroups(result.topology),
                 options.flops ? "flops" : "ms");
  return kExitOk;
}

int RunGenLut(const CommonOptions& options, int cliff_period,
              double full_cost, int image_size) {
  Topology topology = LoadTopology(options.topology, image_size);
  topology.ResolvePermitted(options.multiple, options.allow_layer_pruning);
  topology.Validate();
  SynthLutOptions synth;
  synth.seed = options.seed;
  synth.cliff_period = cliff_period;
  synth.full_cost_ms = full_cost;
  const Json json = LutToJson(SynthLut(topology, synth), &topology);
  if (options.out.empty()) {
    std::cout << json.dump(2) << '\n';
  } else {
    WriteJsonFile(options.out, json);
  }
  return kExitOk;
}

int RunVerifySuite(const std::string& suite, std::uint64_t seed,
                   const std::string& out) {
  const VerifyReport report = RunVerify(suite, seed);
  const Json json = report.ToJson();
  if (!out.empty()) WriteJsonFile(out, json);
  std::cout << json.dump(2) << '\n';
  for (const CheckOutcome& check : report.checks) {
    std::fprintf(stderr, "%-28s %s  %s\n", check.name.c_str(),
                 check.passed ? "ok  " : "FAIL", check.detail.c_str());
  }
  return report.passed() ? kExitOk : kExitInternal;
}

int ExitCodeFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInfeasible:
    case ErrorCode::kEmptyFront:
      return kExitInfeasible;
    case ErrorCode::kConfig:
    case ErrorCode::kLutMiss:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kMissingImportance:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kTooLarge:
    case ErrorCode::kCapacityOverflow:
      return kExitConfig;
    default:
      return kExitInternal;
  }
}

void AddTargetFlags(CLI::App* app, CommonOptions& options) {
  app->add_option("--target-cost", options.target,
                  "Cost target: milliseconds (e.g. 12.5) or a percentage of "
                  "the unpruned cost (e.g. 30%)");
  app->add_option("--multiple", options.multiple,
                  "Permitted kept counts are multiples of this")
      ->check(CLI::PositiveNumber);
  app->add_flag("--allow-layer-pruning", options.allow_layer_pruning,
                "Permit keeping zero channels");
}

void AddCostFlags(CLI::App* app, CommonOptions& options) {
  auto* lut = app->add_option("--lut", options.lut, "Latency table JSON");
  app->add_flag("--flops", options.flops, "Use the FLOPs cost model")
      ->excludes(lut);
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"Cost-constrained channel pruning planner"};
  app.require_subcommand(1);
  CommonOptions options;

  auto* solve = app.add_subcommand("solve", "Solve a raw knapsack instance");
  std::string instance_path;
  std::string solver = "mim";
  std::int64_t scale = 1000;
  solve->add_option("instance", instance_path, "Instance JSON")->required();
  solve->add_option("--solver", solver, "mim, dp or brute")
      ->check(CLI::IsMember({"mim", "dp", "brute"}));
  solve->add_option("--scale", scale, "Cost scale for the dp solver")
      ->check(CLI::PositiveNumber);
  solve->add_option("--out", options.out, "Also write the solution here");

  auto* plan = app.add_subcommand("plan", "One-shot plan from exported files");
  plan->add_option("--topology", options.topology, "Topology JSON")
      ->required();
  plan->add_option("--importance", options.importance, "Importance JSON")
      ->required();
  AddCostFlags(plan, options);
  AddTargetFlags(plan, options);
  plan->add_option("--out", options.out, "Directory for plan.json");

  SimConfig sim;
  auto* simulate =
      app.add_subcommand("simulate", "Train and prune a toy chain end to end");
  simulate->add_option("--seed", options.seed, "Random seed");
  simulate->add_option("--topology", options.topology,
                       "Chain topology JSON (default: toy-chain)");
  AddCostFlags(simulate, options);
  AddTargetFlags(simulate, options);
  simulate->add_option("--epochs", sim.schedule.epochs)
      ->check(CLI::PositiveNumber);
  simulate->add_option("--warmup", sim.schedule.warmup)
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--ramp", sim.schedule.ramp)
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--cooldown", sim.schedule.cooldown)
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--rewire-every", sim.schedule.rewire_every,
                       "Optimizer steps between re-plans")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--momentum", sim.importance_momentum,
                       "Importance averaging momentum in [0, 1)");
  simulate->add_option("--classes", sim.data.classes);
  simulate->add_option("--samples", sim.data.samples);
  simulate->add_option("--image-size", sim.data.image_size);
  simulate->add_option("--batch", sim.batch);
  simulate->add_option("--lr", sim.learning_rate);
  simulate->add_option("--out", options.out,
                       "Directory for trace.jsonl, timings.jsonl, plan.json");

  auto* gen_lut = app.add_subcommand("gen-lut", "Write a synthetic LUT");
  int cliff_period = 8;
  double full_cost = 100.0;
  int image_size = 8;
  gen_lut->add_option("--topology", options.topology,
                      "Topology JSON, resnet50 or toy-chain")
      ->required();
  gen_lut->add_option("--seed", options.seed, "Random seed");
  gen_lut->add_option("--cliff-period", cliff_period)
      ->check(CLI::PositiveNumber);
  gen_lut->add_option("--full-cost", full_cost,
                      "Unpruned network latency in ms")
      ->check(CLI::PositiveNumber);
  gen_lut->add_option("--image-size", image_size, "Input size for toy-chain")
      ->check(CLI::PositiveNumber);
  gen_lut->add_option("--multiple", options.multiple)
      ->check(CLI::PositiveNumber);
  gen_lut->add_flag("--allow-layer-pruning", options.allow_layer_pruning);
  gen_lut->add_option("--out", options.out, "Output file (default stdout)");

  auto* verify = app.add_subcommand("verify", "Run property suites");
  std::string suite = "all";
  verify->add_option("suite", suite,
                     "all, mck, micrograd, schedule or allocation");
  verify->add_option("--seed", options.seed, "Random seed");
  verify->add_option("--out", options.out, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve) return RunSolve(instance_path, solver, scale, options.out);
    if (*plan) return RunPlan(options);
    if (*simulate) {
      sim.data.channels = 3;
      return RunSimulate(options, sim);
    }
    if (*gen_lut) {
      return RunGenLut(options, cliff_period, full_cost, image_size);
    }
    if (*verify) return RunVerifySuite(suite, options.seed, options.out);
  } catch (const Error& e) {
    std::fprintf(stderr, "chprune: %s\n", e.what());
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "chprune: internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace chprune

int main(int argc, char** argv) { return chprune::Main(argc, argv); }
