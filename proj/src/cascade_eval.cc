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

#include "cascadesim/cascade_eval.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

bool CascadeConfig::HasSkips() const {
  return std::any_of(skip_bands.begin(), skip_bands.end(),
                     [](const auto& bands) { return !bands.empty(); });
}

void CascadeConfig::Validate() const {
  const int n = size();
  Require(n >= 1, ErrorCode::kInvariant, "cascade has no models");
  Require(static_cast<int>(thresholds.size()) == n, ErrorCode::kInvariant,
          "cascade needs one threshold per model");
  for (double t : thresholds) {
    Require(t >= 0 && t <= 1, ErrorCode::kInvariant, fmt::format("threshold {} outside [0,1]", t));
  }
  Require(thresholds.back() == 0.0, ErrorCode::kInvariant, "last model threshold must be 0");
  if (skip_bands.empty()) return;
  Require(static_cast<int>(skip_bands.size()) == n, ErrorCode::kInvariant,
          "skip bands must be given for every model or none");
  for (int i = 0; i < n; ++i) {
    const auto& bands = skip_bands[i];
    if (bands.empty()) continue;
    Require(i < n - 1 && thresholds[i] > 0, ErrorCode::kInvariant,
            fmt::format("model {} cannot carry skip bands", i));
    double upper = thresholds[i];
    int last_dest = i;
    for (const auto& band : bands) {
      Require(band.lower < upper && band.lower >= 0, ErrorCode::kInvariant,
              fmt::format("model {}: band bounds must decrease from the threshold to 0", i));
      Require(band.destination > last_dest && band.destination < n, ErrorCode::kInvariant,
              fmt::format("model {}: band destinations must increase past the model", i));
      upper = band.lower;
      last_dest = band.destination;
    }
    Require(bands.back().lower == 0.0, ErrorCode::kInvariant,
            fmt::format("model {}: bands must reach 0", i));
  }
}

CascadeConfig SequentialConfig(std::vector<std::string> models,
                               const std::vector<double>& free_thresholds) {
  Require(free_thresholds.size() + 1 == models.size(), ErrorCode::kInvalidArgument,
          "need n-1 free thresholds");
  CascadeConfig c;
  c.models = std::move(models);
  c.thresholds = free_thresholds;
  c.thresholds.push_back(0.0);
  return c;
}

json CascadeConfigToJson(const CascadeConfig& c) {
  json bands = json::array();
  for (const auto& list : c.skip_bands) {
    json l = json::array();
    for (const auto& b : list) l.push_back({{"lower", b.lower}, {"destination", b.destination}});
    bands.push_back(std::move(l));
  }
  return json{{"models", c.models}, {"thresholds", c.thresholds}, {"skip_bands", bands}};
}

CascadeConfig CascadeConfigFromJson(const json& j) {
  try {
    CascadeConfig c;
    c.models = j.at("models").get<std::vector<std::string>>();
    c.thresholds = j.at("thresholds").get<std::vector<double>>();
    if (j.contains("skip_bands")) {
      for (const auto& list : j.at("skip_bands")) {
        std::vector<SkipBand> bands;
        for (const auto& b : list) {
          bands.push_back({b.at("lower").get<double>(), b.at("destination").get<int>()});
        }
        c.skip_bands.push_back(std::move(bands));
      }
    }
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed cascade config: {}", e.what()));
  }
}

// --- ScoredTrace --------------------------------------------------------------

ScoredTrace::ScoredTrace(std::vector<std::string> model_ids, std::size_t records)
    : model_ids_(std::move(model_ids)),
      records_(records),
      scores_(records * model_ids_.size(), 0.0),
      correct_(records * model_ids_.size(), 0) {}

void ScoredTrace::Set(std::size_t record, int model, double score, bool correct) {
  scores_[Index(record, model)] = score;
  correct_[Index(record, model)] = correct ? 1 : 0;
}

double ScoredTrace::StandaloneAccuracy(int model) const {
  if (records_ == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < records_; ++r) hits += correct_[Index(r, model)];
  return static_cast<double>(hits) / static_cast<double>(records_);
}

double ScoredTrace::OracleAccuracy() const {
  if (records_ == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < records_; ++r) {
    for (int m = 0; m < num_models(); ++m) {
      if (correct_[Index(r, m)]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(records_);
}

int ScoredTrace::ModelIndex(const std::string& model_id) const {
  auto it = std::find(model_ids_.begin(), model_ids_.end(), model_id);
  if (it == model_ids_.end()) {
    Fail(ErrorCode::kMissingModel, fmt::format("scored trace has no model '{}'", model_id));
  }
  return static_cast<int>(it - model_ids_.begin());
}

ScoredTrace ScoredTrace::Select(const std::vector<std::string>& model_ids) const {
  ScoredTrace out(model_ids, records_);
  std::vector<int> columns;
  for (const auto& id : model_ids) columns.push_back(ModelIndex(id));
  for (std::size_t r = 0; r < records_; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      out.Set(r, static_cast<int>(k), score(r, columns[k]), correct(r, columns[k]));
    }
  }
  return out;
}

ScoredTrace ScoreTrace(const TraceBundle& trace, const Calibration& calib) {
  ScoredTrace out(trace.model_ids, trace.records.size());
  for (int m = 0; m < static_cast<int>(trace.model_ids.size()); ++m) {
    const Temperature theta = calib.For(trace.model_ids[m]);
    for (std::size_t r = 0; r < trace.records.size(); ++r) {
      const auto& rec = trace.records[r];
      out.Set(r, m, Score(rec.outputs[m], trace.task, theta),
              IsCorrect(rec.outputs[m], rec.label, trace.task.type));
    }
  }
  return out;
}

CascadeCosts CostsFor(const std::vector<std::string>& models,
                      const std::vector<ModelProfile>& profiles, double hop_overhead) {
  CascadeCosts costs;
  costs.hop_overhead = hop_overhead;
  for (const auto& id : models) {
    const auto& p = FindProfile(profiles, id);
    costs.energy.push_back(p.energy_per_request);
    costs.latency.push_back(p.service_latency);
  }
  return costs;
}

// --- routing -------------------------------------------------------------------

int NextHop(const CascadeConfig& config, int at, double score) {
  const int last = config.size() - 1;
  if (at == last) return -1;
  const double t = config.thresholds[at];
  if (t < 1.0 && score >= t) return -1;
  if (!config.skip_bands.empty() && !config.skip_bands[at].empty()) {
    for (const auto& band : config.skip_bands[at]) {
      if (score >= band.lower) return band.destination;
    }
    return config.skip_bands[at].back().destination;
  }
  return at + 1;
}

RouteResult RouteScored(const ScoredTrace& scored, std::size_t record,
                        const CascadeConfig& config, const std::vector<int>& columns) {
  RouteResult result;
  int at = 0;
  while (true) {
    result.path.push_back(at);
    const int next = NextHop(config, at, scored.score(record, columns[at]));
    if (next < 0) break;
    at = next;
  }
  result.answering = at;
  result.correct = scored.correct(record, columns[at]);
  return result;
}

RouteResult RouteRequest(const PredictionRecord& record, const TraceBundle& family,
                         const CascadeConfig& config, const Calibration& calib) {
  RouteResult result;
  int at = 0;
  while (true) {
    result.path.push_back(at);
    const int column = family.ModelIndex(config.models[at]);
    if (column < 0 || static_cast<std::size_t>(column) >= record.outputs.size()) {
      Fail(ErrorCode::kMissingModel,
           fmt::format("record '{}' has no output for '{}'", record.request_id, config.models[at]));
    }
    const auto& out = record.outputs[column];
    const int next = NextHop(config, at, Score(out, family.task, calib.For(config.models[at])));
    if (next < 0) {
      result.answering = at;
      result.correct = IsCorrect(out, record.label, family.task.type);
      return result;
    }
    at = next;
  }
}

// --- evaluation -------------------------------------------------------------

CascadeMetrics Evaluate(const ScoredTrace& scored, const CascadeConfig& config,
                        const CascadeCosts& costs) {
  config.Validate();
  Require(scored.num_records() > 0, ErrorCode::kInvalidArgument, "cannot evaluate an empty trace");
  const int n = config.size();
  Require(static_cast<int>(costs.energy.size()) == n && static_cast<int>(costs.latency.size()) == n,
          ErrorCode::kInvalidArgument, "costs must align with the cascade");
  std::vector<int> columns;
  for (const auto& id : config.models) columns.push_back(scored.ModelIndex(id));

  std::vector<std::size_t> handled(n, 0), reach(n, 0), flows(static_cast<std::size_t>(n * n), 0);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < scored.num_records(); ++r) {
    int at = 0;
    while (true) {
      ++reach[at];
      const int next = NextHop(config, at, scored.score(r, columns[at]));
      if (next < 0) break;
      ++flows[static_cast<std::size_t>(at * n + next)];
      at = next;
    }
    ++handled[at];
    hits += scored.correct(r, columns[at]) ? 1 : 0;
  }

  const double total = static_cast<double>(scored.num_records());
  CascadeMetrics m;
  m.records = scored.num_records();
  m.accuracy = static_cast<double>(hits) / total;
  for (int i = 0; i < n; ++i) {
    m.handled.push_back(static_cast<double>(handled[i]) / total);
    m.reach.push_back(static_cast<double>(reach[i]) / total);
    const double weight = costs.basis == EnergyBasis::kReach ? m.reach[i] : m.handled[i];
    m.energy += weight * costs.energy[i];
    m.expected_latency += m.reach[i] * (costs.latency[i] + costs.hop_overhead);
  }
  for (std::size_t k = 0; k < flows.size(); ++k) {
    m.flows.push_back(static_cast<double>(flows[k]) / total);
  }
  return m;
}

CascadeMetrics Evaluate(const TraceBundle& trace, const CascadeConfig& config,
                        const Calibration& calib, const std::vector<ModelProfile>& profiles,
                        double hop_overhead) {
  Require(!trace.records.empty(), ErrorCode::kInvalidArgument, "cannot evaluate an empty trace");
  for (const auto& id : config.models) {
    Require(trace.ModelIndex(id) >= 0, ErrorCode::kMissingModel,
            fmt::format("trace has no outputs for '{}'", id));
  }
  return Evaluate(ScoreTrace(trace, calib), config, CostsFor(config.models, profiles, hop_overhead));
}

json MetricsToJson(const CascadeMetrics& m, const CascadeConfig& config) {
  json per_model = json::array();
  for (int i = 0; i < config.size(); ++i) {
    per_model.push_back({{"model_id", config.models[i]},
                         {"threshold", config.thresholds[i]},
                         {"handled", m.handled[i]},
                         {"reach", m.reach[i]}});
  }
  return json{{"accuracy", m.accuracy},
              {"energy", m.energy},
              {"expected_latency", m.expected_latency},
              {"records", m.records},
              {"models", per_model}};
}

}  // namespace cascadesim
