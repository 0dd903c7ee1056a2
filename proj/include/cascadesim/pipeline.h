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

// File-based pipeline stages. Every stage reads its inputs from files and
// writes its artifacts plus a `<artifact>.manifest.json` next to each.

#ifndef CASCADESIM_PIPELINE_H_
#define CASCADESIM_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascadesim/error.h"
#include "cascadesim/planner.h"
#include "cascadesim/simulator.h"
#include "cascadesim/skip_config.h"
#include "cascadesim/threshold_search.h"

namespace cascadesim {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };
// From CASCADESIM_LOG (error, warn, info, debug); default warn.
LogLevel CurrentLogLevel();
void Log(LogLevel level, std::string_view message);

struct RunConfig {
  // Unset paths default to files inside `out`.
  std::optional<std::filesystem::path> joint_spec, trace, profiles, cluster, calibration,
      skip_plan, plan;
  std::filesystem::path out = "out";
  Mode mode = Mode::kAccuracyPreserving;
  std::uint64_t seed = 1;
  int records = 10000;
  double hop_overhead = 1e-3;
  SearchParams search;
  PlanParams planner;
  Workload workload;
  // When set, the Poisson rate is this fraction of the plan's capacity.
  std::optional<double> load;
  SimParams sim;
};

// Relative paths resolve against the config file's directory.
RunConfig RunConfigFromJson(const nlohmann::json& j, const std::filesystem::path& base = {});
nlohmann::json RunConfigToJson(const RunConfig& c);
RunConfig LoadRunConfig(const std::filesystem::path& path);

std::string Sha256Hex(std::string_view bytes);
std::string FileSha256(const std::filesystem::path& path);

// Artifact locations used by the stages.
struct StagePaths {
  std::filesystem::path joint_spec, trace, profiles, cluster, calibration, skip_plan, plan;
  std::filesystem::path graph_csv, selection, sim_report, utilization_csv, latency_csv,
      frontier_csv, latency_cdf_csv, baseline_plan, baseline_report, comparison_csv,
      comparison_json;
};
StagePaths ResolvePaths(const RunConfig& c);

void StageGenTrace(const RunConfig& c);
void StageCalibrate(const RunConfig& c);
PerfGraph StageSearch(const RunConfig& c);
SkipPlan StageSkip(const RunConfig& c);
Plan StagePlan(const RunConfig& c);
SimReport StageSimulate(const RunConfig& c);
void StageReport(const RunConfig& c);

struct PipelineResult {
  SkipPlan skip;
  Plan plan;
  SimReport cascade;
  Plan baseline_plan;
  SimReport baseline;
  Comparison comparison;
};
// All stages in order, then a largest-model-only baseline on the same
// workload and cluster.
PipelineResult RunPipeline(const RunConfig& c);

// Process exit status for an error class.
int ExitCodeFor(ErrorCode code);

}  // namespace cascadesim

#endif  // CASCADESIM_PIPELINE_H_
