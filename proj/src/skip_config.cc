// Copyright 2026 The cascadesim Authors
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

#include "cascadesim/skip_config.h"

#include <fmt/format.h>

#include <cmath>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

double EnergyBenefit(int i, const std::vector<double>& reach, const std::vector<double>& energy) {
  const int n = static_cast<int>(reach.size());
  Require(static_cast<int>(energy.size()) == n, ErrorCode::kInvalidArgument,
          "reach and energy must align");
  Require(i >= 0 && i < n - 1, ErrorCode::kInvalidArgument,
          fmt::format("energy benefit is undefined for position {} of {}", i, n));
  return (reach[i] - reach[i + 1]) * energy[i + 1] - reach[i] * energy[i];
}

std::vector<SkipBand> AssignSkipBands(double threshold, int successors, int first_successor) {
  Require(threshold > 0, ErrorCode::kInvalidArgument, "skip bands need a positive threshold");
  Require(successors >= 1, ErrorCode::kInvalidArgument, "skip bands need a successor");
  std::vector<SkipBand> bands;
  for (int j = 0; j < successors; ++j) {
    const double lower = j + 1 == successors ? 0.0 : threshold * std::pow(10.0, -(j + 1));
    bands.push_back({lower, first_successor + j});
  }
  return bands;
}

namespace {

CascadeCosts SelectCosts(const CascadeCosts& costs, const std::vector<int>& keep) {
  CascadeCosts out = costs;
  out.energy.clear();
  out.latency.clear();
  for (int k : keep) {
    out.energy.push_back(costs.energy[k]);
    out.latency.push_back(costs.latency[k]);
  }
  return out;
}

}  // namespace

SkipPlan PruneAndRewire(const ScoredTrace& scored, const CascadeCosts& costs,
                        const SkipParams& params) {
  const int n = scored.num_models();
  Require(n >= 2, ErrorCode::kInvalidArgument, "pruning needs at least two models");

  SkipPlan plan;
  plan.mode = params.mode;
  const double largest = scored.StandaloneAccuracy(n - 1);
  plan.target_accuracy =
      params.mode == Mode::kAccuracyPreserving ? largest : scored.StandaloneAccuracy(n - 2);

  std::vector<int> keep(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) keep[i] = i;

  ScoredTrace sub;
  CascadeCosts sub_costs;
  while (true) {
    std::vector<std::string> ids;
    for (int k : keep) ids.push_back(scored.model_ids()[k]);
    sub = scored.Select(ids);
    sub_costs = SelectCosts(costs, keep);

    if (keep.size() == 1) {
      plan.config = SequentialConfig(ids, {});
      plan.sequential = Evaluate(sub, plan.config, sub_costs);
      plan.selection = {{{}, plan.sequential.accuracy, plan.sequential.energy}, false};
      plan.benefits.clear();
      break;
    }

    const PerfGraph graph = SearchThresholds(sub, sub_costs, params.search);
    plan.selection = params.mode == Mode::kAccuracyPreserving
                         ? SelectAccuracyPreserving(graph, plan.target_accuracy)
                         : SelectEnergyOptimized(graph, plan.target_accuracy, largest);
    plan.config = SequentialConfig(ids, plan.selection.point.thresholds);
    plan.sequential = Evaluate(sub, plan.config, sub_costs);

    plan.benefits.clear();
    int victim = -1;
    for (int i = 0; i + 1 < static_cast<int>(keep.size()); ++i) {
      plan.benefits.push_back(EnergyBenefit(i, plan.sequential.reach, sub_costs.energy));
      if (victim < 0 && plan.benefits.back() <= 0) victim = i;
    }
    if (victim < 0) break;
    plan.removed.push_back(ids[victim]);
    keep.erase(keep.begin() + victim);
  }

  const int m = plan.config.size();
  plan.config.skip_bands.assign(static_cast<std::size_t>(m), {});
  for (int i = 0; i + 1 < m; ++i) {
    const double t = plan.config.thresholds[i];
    if (t > 0) plan.config.skip_bands[i] = AssignSkipBands(t, m - 1 - i, i + 1);
  }
  plan.config.Validate();
  plan.with_skips = Evaluate(sub, plan.config, sub_costs);
  return plan;
}

json SkipPlanToJson(const SkipPlan& plan) {
  return json{{"schema_version", kSchemaVersion},
              {"kind", "skip_plan"},
              {"mode", ModeName(plan.mode)},
              {"target_accuracy", plan.target_accuracy},
              {"cascade", CascadeConfigToJson(plan.config)},
              {"energy_benefits", plan.benefits},
              {"removed", plan.removed},
              {"selection", SelectionToJson(plan.selection)},
              {"sequential_metrics", MetricsToJson(plan.sequential, plan.config)},
              {"skip_metrics", MetricsToJson(plan.with_skips, plan.config)}};
}

SkipPlan SkipPlanFromJson(const json& j) {
  Require(j.value("schema_version", -1) == kSchemaVersion, ErrorCode::kParse,
          "skip plan: unsupported schema_version");
  try {
    SkipPlan plan;
    plan.mode = ParseMode(j.at("mode").get<std::string>());
    plan.target_accuracy = j.at("target_accuracy").get<double>();
    plan.config = CascadeConfigFromJson(j.at("cascade"));
    plan.benefits = j.at("energy_benefits").get<std::vector<double>>();
    plan.removed = j.at("removed").get<std::vector<std::string>>();
    plan.selection = SelectionFromJson(j.at("selection"));
    return plan;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed skip plan: {}", e.what()));
  }
}

SkipPlan LoadSkipPlan(const std::filesystem::path& path) {
  return SkipPlanFromJson(ReadJsonFile(path));
}

void SaveSkipPlan(const SkipPlan& plan, const std::filesystem::path& path) {
  WriteJsonFile(SkipPlanToJson(plan), path);
}

}  // namespace cascadesim
