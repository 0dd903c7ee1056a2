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

#ifndef CASCADESIM_CASCADE_EVAL_H_
#define CASCADESIM_CASCADE_EVAL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "cascadesim/calibration.h"
#include "cascadesim/trace.h"

namespace cascadesim {

// Requests scoring in [lower, upper) jump to `destination`, an index into
// CascadeConfig::models. Upper is the previous band's lower bound, or the
// model's threshold for the first band.
struct SkipBand {
  double lower = 0.0;
  int destination = 0;
  bool operator==(const SkipBand&) const = default;
};

struct CascadeConfig {
  std::vector<std::string> models;  // small to large
  // One per model; the last is always 0. A threshold of 1 or more means the
  // model never answers.
  std::vector<double> thresholds;
  // Empty, or one list per model ordered from the threshold toward 0.
  std::vector<std::vector<SkipBand>> skip_bands;

  int size() const { return static_cast<int>(models.size()); }
  bool HasSkips() const;
  void Validate() const;
  bool operator==(const CascadeConfig&) const = default;
};

// Builds a sequential cascade from the n-1 free thresholds.
CascadeConfig SequentialConfig(std::vector<std::string> models,
                               const std::vector<double>& free_thresholds);

nlohmann::json CascadeConfigToJson(const CascadeConfig& config);
CascadeConfig CascadeConfigFromJson(const nlohmann::json& j);

// Confidence and correctness of every (record, model) pair, computed once so
// that threshold sweeps never touch raw logits.
class ScoredTrace {
 public:
  ScoredTrace() = default;
  ScoredTrace(std::vector<std::string> model_ids, std::size_t records);

  const std::vector<std::string>& model_ids() const { return model_ids_; }
  int num_models() const { return static_cast<int>(model_ids_.size()); }
  std::size_t num_records() const { return records_; }

  double score(std::size_t record, int model) const { return scores_[Index(record, model)]; }
  bool correct(std::size_t record, int model) const { return correct_[Index(record, model)] != 0; }
  void Set(std::size_t record, int model, double score, bool correct);

  double StandaloneAccuracy(int model) const;
  // Fraction of records some model answers correctly.
  double OracleAccuracy() const;
  int ModelIndex(const std::string& model_id) const;

  // Columns for `model_ids`, in that order.
  ScoredTrace Select(const std::vector<std::string>& model_ids) const;

 private:
  std::size_t Index(std::size_t record, int model) const {
    return record * model_ids_.size() + static_cast<std::size_t>(model);
  }

  std::vector<std::string> model_ids_;
  std::size_t records_ = 0;
  std::vector<double> scores_;
  std::vector<std::uint8_t> correct_;
};

ScoredTrace ScoreTrace(const TraceBundle& trace, const Calibration& calib);

enum class EnergyBasis { kReach, kHandled };

// Per-model costs aligned with a cascade's model order.
struct CascadeCosts {
  std::vector<double> energy;   // joules per request
  std::vector<double> latency;  // seconds
  double hop_overhead = 1e-3;   // router seconds per visited model
  EnergyBasis basis = EnergyBasis::kReach;
};

CascadeCosts CostsFor(const std::vector<std::string>& models,
                      const std::vector<ModelProfile>& profiles, double hop_overhead = 1e-3);

struct RouteResult {
  int answering = 0;
  bool correct = false;
  std::vector<int> path;  // visited cascade positions
};

// Position the request moves to after scoring `score` at position `at`, or
// -1 when it answers there.
int NextHop(const CascadeConfig& config, int at, double score);

RouteResult RouteRequest(const PredictionRecord& record, const TraceBundle& family,
                         const CascadeConfig& config, const Calibration& calib);
// Same decision procedure on pre-scored columns; `columns` maps cascade
// positions to ScoredTrace model indices.
RouteResult RouteScored(const ScoredTrace& scored, std::size_t record,
                        const CascadeConfig& config, const std::vector<int>& columns);

struct CascadeMetrics {
  double accuracy = 0.0;
  std::vector<double> handled;  // fraction answered at each position
  std::vector<double> reach;    // fraction visiting each position
  double energy = 0.0;          // joules per request
  double expected_latency = 0.0;
  // flows[i * n + j]: fraction of requests forwarded from position i to j.
  std::vector<double> flows;
  std::size_t records = 0;
};

CascadeMetrics Evaluate(const ScoredTrace& scored, const CascadeConfig& config,
                        const CascadeCosts& costs);
CascadeMetrics Evaluate(const TraceBundle& trace, const CascadeConfig& config,
                        const Calibration& calib, const std::vector<ModelProfile>& profiles,
                        double hop_overhead = 1e-3);

nlohmann::json MetricsToJson(const CascadeMetrics& m, const CascadeConfig& config);

}  // namespace cascadesim

#endif  // CASCADESIM_CASCADE_EVAL_H_
