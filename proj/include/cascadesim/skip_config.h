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

#ifndef CASCADESIM_SKIP_CONFIG_H_
#define CASCADESIM_SKIP_CONFIG_H_

#include <filesystem>
#include <string>
#include <vector>

#include "cascadesim/cascade_eval.h"
#include "cascadesim/threshold_search.h"

namespace cascadesim {

// Joules per request saved downstream by model `i` minus the joules it
// spends: (reach_i - reach_{i+1}) * e_{i+1} - reach_i * e_i.
double EnergyBenefit(int i, const std::vector<double>& reach, const std::vector<double>& energy);

// Log-spaced bands below `threshold` for `successors` models following
// position `first_successor - 1`. Boundaries sit at threshold * 10^-j.
std::vector<SkipBand> AssignSkipBands(double threshold, int successors, int first_successor);

struct SkipPlan {
  CascadeConfig config;           // retained models, thresholds and bands
  std::vector<double> benefits;   // one per retained non-final model
  std::vector<std::string> removed;  // in removal order
  Mode mode = Mode::kAccuracyPreserving;
  double target_accuracy = 0.0;   // AP target or EO floor
  Selection selection;            // operating point of the final search
  CascadeMetrics sequential;      // retained cascade without skips
  CascadeMetrics with_skips;
};

struct SkipParams {
  SearchParams search;
  Mode mode = Mode::kAccuracyPreserving;
};

// Removes the smallest model with non-positive energy benefit, re-searches
// thresholds, and repeats until every retained non-final model pays for
// itself; then assigns skip bands.
SkipPlan PruneAndRewire(const ScoredTrace& scored, const CascadeCosts& costs,
                        const SkipParams& params);

nlohmann::json SkipPlanToJson(const SkipPlan& plan);
SkipPlan SkipPlanFromJson(const nlohmann::json& j);
SkipPlan LoadSkipPlan(const std::filesystem::path& path);
void SaveSkipPlan(const SkipPlan& plan, const std::filesystem::path& path);

}  // namespace cascadesim

#endif  // CASCADESIM_SKIP_CONFIG_H_
