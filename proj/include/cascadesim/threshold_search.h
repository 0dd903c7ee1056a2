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

// Sampling search over cascade thresholds.
//
// Each round draws K uniform threshold vectors; samples whose accuracy falls
// between the two largest models' standalone accuracies seed K more samples
// in an epsilon box around them. Search stops when a round adds no point to a
// previously empty (accuracy, energy) cell. The corner configurations where a
// single model answers everything are always evaluated first, so a point at
// the largest model's accuracy exists by construction.

#ifndef CASCADESIM_THRESHOLD_SEARCH_H_
#define CASCADESIM_THRESHOLD_SEARCH_H_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "cascadesim/cascade_eval.h"

namespace cascadesim {

struct PerfPoint {
  std::vector<double> thresholds;  // n-1 free thresholds
  double accuracy = 0.0;
  double energy = 0.0;
  bool operator==(const PerfPoint&) const = default;
};

struct PerfGraph {
  std::vector<PerfPoint> points;
  std::vector<bool> pareto;  // aligned with points
  int rounds = 0;

  std::vector<PerfPoint> ParetoPoints() const;  // sorted by accuracy
};

struct SearchParams {
  int samples_per_round = 256;
  double epsilon = 0.05;
  double accuracy_cell = 0.001;
  // Energy cell width as a fraction of the largest model's energy.
  double energy_cell_fraction = 0.005;
  int max_rounds = 50;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Marks non-dominated points (higher accuracy, lower energy).
std::vector<bool> ParetoFlags(const std::vector<PerfPoint>& points);

// `costs` must align with scored.model_ids().
PerfGraph SearchThresholds(const ScoredTrace& scored, const CascadeCosts& costs,
                           const SearchParams& params);

struct Selection {
  PerfPoint point;
  // Set when no point met the requested accuracy and a fallback was taken.
  bool warning = false;
};

// Minimum-energy point with accuracy >= target.
Selection SelectAccuracyPreserving(const PerfGraph& graph, double target_accuracy);
// Maximum-curvature point of the interpolated energy(accuracy) frontier
// between the accuracy floor and ceiling.
Selection SelectEnergyOptimized(
    const PerfGraph& graph, double accuracy_floor,
    double accuracy_ceiling = std::numeric_limits<double>::infinity());

enum class Mode { kAccuracyPreserving, kEnergyOptimized };
Mode ParseMode(std::string_view name);
std::string_view ModeName(Mode mode);

void WriteGraphCsv(const PerfGraph& graph, std::ostream& out);
nlohmann::json SelectionToJson(const Selection& s);
Selection SelectionFromJson(const nlohmann::json& j);

}  // namespace cascadesim

#endif  // CASCADESIM_THRESHOLD_SEARCH_H_
