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

#include "cascadesim/threshold_search.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <utility>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

void SearchParams::Validate() const {
  Require(samples_per_round >= 1, ErrorCode::kInvalidArgument, "samples_per_round must be >= 1");
  Require(epsilon > 0 && epsilon < 0.5, ErrorCode::kInvalidArgument, "epsilon must be in (0, 0.5)");
  Require(accuracy_cell > 0 && energy_cell_fraction > 0, ErrorCode::kInvalidArgument,
          "quantization cells must be positive");
  Require(max_rounds >= 1, ErrorCode::kInvalidArgument, "max_rounds must be >= 1");
}

std::vector<bool> ParetoFlags(const std::vector<PerfPoint>& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (points[x].accuracy != points[y].accuracy) return points[x].accuracy > points[y].accuracy;
    return points[x].energy < points[y].energy;
  });
  std::vector<bool> flags(points.size(), false);
  double best_higher = std::numeric_limits<double>::infinity();  // min e at strictly higher a
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t end = k;
    const double a = points[order[k]].accuracy;
    while (end < order.size() && points[order[end]].accuracy == a) ++end;
    const double group_min = points[order[k]].energy;
    for (std::size_t q = k; q < end; ++q) {
      const double e = points[order[q]].energy;
      flags[order[q]] = e == group_min && e < best_higher;
    }
    best_higher = std::min(best_higher, group_min);
    k = end;
  }
  return flags;
}

std::vector<PerfPoint> PerfGraph::ParetoPoints() const {
  std::vector<PerfPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (pareto[i]) out.push_back(points[i]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PerfPoint& x, const PerfPoint& y) { return x.accuracy < y.accuracy; });
  return out;
}

namespace {

class Sampler {
 public:
  Sampler(const ScoredTrace& scored, const CascadeCosts& costs, const SearchParams& params)
      : scored_(scored), costs_(costs), params_(params) {
    const double e_last = costs.energy.back();
    energy_cell_ = params.energy_cell_fraction * e_last;
  }

  PerfPoint Evaluate(std::vector<double> free) const {
    const CascadeConfig config = SequentialConfig(scored_.model_ids(), free);
    const CascadeMetrics m = cascadesim::Evaluate(scored_, config, costs_);
    return {std::move(free), m.accuracy, m.energy};
  }

  std::pair<long long, long long> Cell(const PerfPoint& p) const {
    return {static_cast<long long>(std::floor(p.accuracy / params_.accuracy_cell)),
            static_cast<long long>(std::floor(p.energy / energy_cell_))};
  }

 private:
  const ScoredTrace& scored_;
  const CascadeCosts& costs_;
  const SearchParams& params_;
  double energy_cell_ = 1.0;
};

}  // namespace

PerfGraph SearchThresholds(const ScoredTrace& scored, const CascadeCosts& costs,
                           const SearchParams& params) {
  params.Validate();
  const int n = scored.num_models();
  Require(n >= 2, ErrorCode::kInvalidArgument, "threshold search needs at least two models");
  Require(static_cast<int>(costs.energy.size()) == n, ErrorCode::kInvalidArgument,
          "costs must align with the scored trace");
  const int dims = n - 1;
  const double acc_a = scored.StandaloneAccuracy(n - 2);
  const double acc_b = scored.StandaloneAccuracy(n - 1);
  const double band_lo = std::min(acc_a, acc_b);
  const double band_hi = std::max(acc_a, acc_b);

  Sampler sampler(scored, costs, params);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PerfGraph graph;
  std::set<std::pair<long long, long long>> occupied;
  // Corner j: models before j never answer, model j answers everything.
  for (int j = 0; j < n; ++j) {
    std::vector<double> t(static_cast<std::size_t>(dims), 0.0);
    for (int i = 0; i < j && i < dims; ++i) t[i] = 1.0;
    graph.points.push_back(sampler.Evaluate(std::move(t)));
    occupied.insert(sampler.Cell(graph.points.back()));
  }

  const auto in_band = [&](const PerfPoint& p) {
    return p.accuracy >= band_lo && p.accuracy <= band_hi;
  };

  for (int round = 0; round < params.max_rounds; ++round) {
    std::vector<PerfPoint> fresh;
    fresh.reserve(static_cast<std::size_t>(2 * params.samples_per_round));
    for (int k = 0; k < params.samples_per_round; ++k) {
      std::vector<double> t(static_cast<std::size_t>(dims));
      for (auto& v : t) v = unit(rng);
      fresh.push_back(sampler.Evaluate(std::move(t)));
    }
    std::vector<std::size_t> centers;
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      if (in_band(fresh[k])) centers.push_back(k);
    }
    if (!centers.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
      for (int k = 0; k < params.samples_per_round; ++k) {
        const auto& center = fresh[centers[pick(rng)]].thresholds;
        std::vector<double> t(static_cast<std::size_t>(dims));
        for (int d = 0; d < dims; ++d) {
          const double lo = std::max(0.0, center[d] - params.epsilon);
          const double hi = std::min(1.0, center[d] + params.epsilon);
          t[d] = lo + (hi - lo) * unit(rng);
        }
        fresh.push_back(sampler.Evaluate(std::move(t)));
      }
    }
    bool novel = false;
    std::vector<std::pair<long long, long long>> cells;
    for (const auto& p : fresh) {
      const auto cell = sampler.Cell(p);
      if (!occupied.count(cell)) novel = true;
      cells.push_back(cell);
    }
    occupied.insert(cells.begin(), cells.end());
    for (auto& p : fresh) graph.points.push_back(std::move(p));
    graph.rounds = round + 1;
    if (!novel) break;
  }
  graph.pareto = ParetoFlags(graph.points);
  return graph;
}

Selection SelectAccuracyPreserving(const PerfGraph& graph, double target) {
  Require(!graph.points.empty(), ErrorCode::kInvalidArgument, "performance graph is empty");
  const PerfPoint* best = nullptr;
  for (const auto& p : graph.points) {
    if (p.accuracy < target) continue;
    if (!best || p.energy < best->energy ||
        (p.energy == best->energy && p.accuracy > best->accuracy)) {
      best = &p;
    }
  }
  if (best) return {*best, false};
  for (const auto& p : graph.points) {
    if (!best || p.accuracy > best->accuracy ||
        (p.accuracy == best->accuracy && p.energy < best->energy)) {
      best = &p;
    }
  }
  return {*best, true};
}

Selection SelectEnergyOptimized(const PerfGraph& graph, double floor, double ceiling) {
  Require(!graph.points.empty(), ErrorCode::kInvalidArgument, "performance graph is empty");
  std::vector<PerfPoint> frontier;
  for (const auto& p : graph.ParetoPoints()) {
    if (p.accuracy < floor || p.accuracy > ceiling) continue;
    if (!frontier.empty() && frontier.back().accuracy == p.accuracy) continue;
    frontier.push_back(p);
  }

  constexpr double kStep = 0.001;
  const double a0 = frontier.empty() ? 0.0 : frontier.front().accuracy;
  const int grid = frontier.size() < 3
                       ? 0
                       : static_cast<int>(std::floor((frontier.back().accuracy - a0) / kStep + 1e-9)) + 1;
  if (grid < 3) {
    Selection s = SelectAccuracyPreserving(graph, floor);
    s.warning = true;
    return s;
  }

  // Piecewise-linear e(a) on the uniform accuracy grid.
  std::vector<double> e(static_cast<std::size_t>(grid));
  std::size_t seg = 0;
  for (int k = 0; k < grid; ++k) {
    const double a = a0 + kStep * k;
    while (seg + 2 < frontier.size() && frontier[seg + 1].accuracy < a) ++seg;
    const auto& lo = frontier[seg];
    const auto& hi = frontier[seg + 1];
    const double w = std::clamp((a - lo.accuracy) / (hi.accuracy - lo.accuracy), 0.0, 1.0);
    e[k] = lo.energy + w * (hi.energy - lo.energy);
  }
  const double span = frontier.back().energy - frontier.front().energy;
  const double tie = 1e-9 * std::max(span, std::numeric_limits<double>::min());
  int knee = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 1; k + 1 < grid; ++k) {
    const double d2 = e[k + 1] - 2.0 * e[k] + e[k - 1];
    if (d2 > best + tie) {
      best = d2;
      knee = k;
    }
  }
  const double a_knee = a0 + kStep * knee;
  const PerfPoint* pick = &frontier.front();
  for (const auto& p : frontier) {
    const double dp = std::abs(p.accuracy - a_knee);
    const double dbest = std::abs(pick->accuracy - a_knee);
    if (dp < dbest || (dp == dbest && p.energy < pick->energy)) pick = &p;
  }
  return {*pick, false};
}

Mode ParseMode(std::string_view name) {
  if (name == "AP" || name == "ap") return Mode::kAccuracyPreserving;
  if (name == "EO" || name == "eo") return Mode::kEnergyOptimized;
  Fail(ErrorCode::kInvalidArgument, fmt::format("unknown mode '{}', expected AP or EO", name));
}

std::string_view ModeName(Mode mode) {
  return mode == Mode::kAccuracyPreserving ? "AP" : "EO";
}

void WriteGraphCsv(const PerfGraph& graph, std::ostream& out) {
  const std::size_t dims = graph.points.empty() ? 0 : graph.points.front().thresholds.size();
  for (std::size_t d = 0; d < dims; ++d) out << 't' << (d + 1) << ',';
  out << "accuracy,energy,pareto\n";
  for (std::size_t i = 0; i < graph.points.size(); ++i) {
    const auto& p = graph.points[i];
    for (double t : p.thresholds) out << fmt::format("{:.17g},", t);
    out << fmt::format("{:.17g},{:.17g},{}\n", p.accuracy, p.energy, graph.pareto[i] ? 1 : 0);
  }
}

json SelectionToJson(const Selection& s) {
  return json{{"thresholds", s.point.thresholds},
              {"accuracy", s.point.accuracy},
              {"energy", s.point.energy},
              {"warning", s.warning}};
}

Selection SelectionFromJson(const json& j) {
  try {
    Selection s;
    s.point.thresholds = j.at("thresholds").get<std::vector<double>>();
    s.point.accuracy = j.at("accuracy").get<double>();
    s.point.energy = j.at("energy").get<double>();
    s.warning = j.value("warning", false);
    return s;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed selection: {}", e.what()));
  }
}

}  // namespace cascadesim
