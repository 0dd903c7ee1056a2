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

#include "cascadesim/calibration.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

Temperature::Temperature(double value) : value_(value) {
  Require(std::isfinite(value) && value > 0, ErrorCode::kInvalidArgument,
          fmt::format("temperature must be positive and finite, got {}", value));
}

namespace {

void CheckLogits(std::span<const double> logits) {
  Require(logits.size() >= 2, ErrorCode::kShape, "need at least two logits");
  for (double v : logits) {
    Require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite logit");
  }
}

// Probability of the top class under softmax(logits / theta).
double MaxSoftmax(std::span<const double> logits, double theta) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp((v - top) / theta);
  return 1.0 / sum;
}

// -log softmax(logits / theta)[label]
// log1p keeps the loss distinguishable from 0 for near one-hot inputs.
double CrossEntropy(std::span<const double> logits, int label, double theta) {
  const auto top = std::max_element(logits.begin(), logits.end());
  double rest = 0.0;
  for (auto it = logits.begin(); it != logits.end(); ++it) {
    if (it != top) rest += std::exp((*it - *top) / theta);
  }
  return std::log1p(rest) - (logits[static_cast<std::size_t>(label)] - *top) / theta;
}

}  // namespace

std::vector<double> ScaledSoftmax(std::span<const double> logits, Temperature theta) {
  CheckLogits(logits);
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p;
  p.reserve(logits.size());
  double sum = 0.0;
  for (double v : logits) sum += p.emplace_back(std::exp((v - top) / theta.value()));
  for (double& v : p) v /= sum;
  return p;
}

double ScoreClassification(std::span<const double> logits, Temperature theta, ScoreInput input) {
  CheckLogits(logits);
  if (input == ScoreInput::kProbabilities) {
    const double top = *std::max_element(logits.begin(), logits.end());
    Require(top >= 0 && top <= 1, ErrorCode::kInvalidArgument, "probabilities must lie in [0, 1]");
    return std::pow(top * top, 1.0 / theta.value());
  }
  const double p = MaxSoftmax(logits, theta.value());
  return p * p;
}

double ScoreGeneration(const std::vector<std::vector<double>>& step_logits, Temperature theta,
                       int top_k) {
  Require(!step_logits.empty(), ErrorCode::kShape, "generation output has no steps");
  Require(top_k >= 2, ErrorCode::kInvalidArgument, "top_k must be >= 2");
  double score = 1.0;
  std::vector<double> top;
  for (const auto& step : step_logits) {
    Require(static_cast<int>(step.size()) >= top_k, ErrorCode::kShape,
            fmt::format("top_k {} exceeds vocabulary size {}", top_k, step.size()));
    top.assign(step.begin(), step.end());
    std::nth_element(top.begin(), top.begin() + (top_k - 1), top.end(), std::greater<>());
    top.resize(static_cast<std::size_t>(top_k));
    score = std::min(score, ScoreClassification(top, theta));
  }
  return score;
}

double ScoreQuestionAnswering(std::span<const double> start_logits,
                              std::span<const double> end_logits, Temperature theta) {
  Require(start_logits.size() == end_logits.size(), ErrorCode::kShape,
          "start and end logits differ in length");
  return std::min(ScoreClassification(start_logits, theta),
                  ScoreClassification(end_logits, theta));
}

double Score(const RawOutput& output, const TaskKind& task, Temperature theta) {
  switch (task.type) {
    case TaskType::kClassification:
      Require(output.rows.size() == 1, ErrorCode::kShape, "classification expects one row");
      return ScoreClassification(output.rows[0], theta);
    case TaskType::kGeneration:
      return ScoreGeneration(output.rows, theta, task.top_k);
    case TaskType::kQuestionAnswering:
      Require(output.rows.size() == 2, ErrorCode::kShape, "qa expects start and end rows");
      return ScoreQuestionAnswering(output.rows[0], output.rows[1], theta);
  }
  return 0.0;
}

double CalibrationLoss(const std::vector<PredictionRecord>& records, int model_index,
                       TaskType task, double theta) {
  double total = 0.0;
  for (const auto& rec : records) {
    const auto& rows = rec.outputs.at(static_cast<std::size_t>(model_index)).rows;
    double loss = 0.0;
    for (std::size_t s = 0; s < rows.size(); ++s) {
      const int label = task == TaskType::kClassification ? rec.label[0] : rec.label[s];
      loss += CrossEntropy(rows[s], label, theta);
    }
    total += loss / static_cast<double>(rows.size());
  }
  return total / static_cast<double>(records.size());
}

TemperatureFit FitTemperature(const std::vector<PredictionRecord>& records, int model_index,
                              const TaskKind& task) {
  Require(!records.empty(), ErrorCode::kInvalidArgument, "cannot fit a temperature on no records");
  for (const auto& rec : records) {
    for (const auto& row : rec.outputs.at(static_cast<std::size_t>(model_index)).rows) {
      CheckLogits(row);
    }
  }
  const auto loss_at_log = [&](double log_theta) {
    return CalibrationLoss(records, model_index, task.type, std::exp(log_theta));
  };

  constexpr int kGrid = 50;
  constexpr double kLo = -4.0;
  constexpr double kHi = 4.0;
  constexpr double kStep = (kHi - kLo) / (kGrid - 1);
  std::vector<double> grid(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = loss_at_log(kLo + kStep * i);
    if (grid[i] < grid[best]) best = i;
  }
  const double grid_max = *std::max_element(grid.begin(), grid.end());
  if (grid_max - grid[best] <= 1e-12 * std::max(1.0, std::abs(grid[best]))) {
    return {Temperature(1.0), loss_at_log(0.0), true};
  }

  // Golden-section on log(theta) inside the bracketing grid cells.
  double a = kLo + kStep * std::max(0, best - 1);
  double b = kLo + kStep * std::min(kGrid - 1, best + 1);
  const double bracket_lo = a;
  const double bracket_hi = b;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = loss_at_log(c);
  double fd = loss_at_log(d);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = loss_at_log(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = loss_at_log(d);
    }
  }

  // The bracket ends cover minima sitting on the clamp; log(theta) = 0 keeps
  // the fit no worse than the uncalibrated scores.
  double best_log = 0.5 * (a + b);
  double best_loss = loss_at_log(best_log);
  for (double candidate : {bracket_lo, bracket_hi, 0.0}) {
    const double l = loss_at_log(candidate);
    if (l < best_loss) {
      best_loss = l;
      best_log = candidate;
    }
  }
  const double theta = std::clamp(std::exp(best_log), kMinTemperature, kMaxTemperature);
  return {Temperature(theta), best_loss, false};
}

Temperature Calibration::For(const std::string& model_id) const {
  auto it = fits.find(model_id);
  if (it == fits.end()) {
    Fail(ErrorCode::kMissingModel, fmt::format("no calibration for model '{}'", model_id));
  }
  return it->second.theta;
}

Calibration CalibrateTrace(const TraceBundle& trace) {
  Calibration c;
  c.task = trace.task;
  for (std::size_t m = 0; m < trace.model_ids.size(); ++m) {
    c.fits[trace.model_ids[m]] = FitTemperature(trace.records, static_cast<int>(m), trace.task);
  }
  return c;
}

json CalibrationToJson(const Calibration& c) {
  json models = json::array();
  for (const auto& [id, fit] : c.fits) {
    models.push_back({{"model_id", id},
                      {"theta", fit.theta.value()},
                      {"loss", fit.loss},
                      {"degenerate", fit.degenerate}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"kind", "calibration"},
              {"task", {{"type", TaskTypeName(c.task.type)}, {"top_k", c.task.top_k}}},
              {"models", models}};
}

Calibration CalibrationFromJson(const json& j) {
  Require(j.value("schema_version", -1) == kSchemaVersion, ErrorCode::kParse,
          "calibration: unsupported schema_version");
  try {
    Calibration c;
    c.task.type = ParseTaskType(j.at("task").at("type").get<std::string>());
    c.task.top_k = j.at("task").value("top_k", 0);
    for (const auto& m : j.at("models")) {
      TemperatureFit fit;
      fit.theta = Temperature(m.at("theta").get<double>());
      fit.loss = m.value("loss", 0.0);
      fit.degenerate = m.value("degenerate", false);
      c.fits[m.at("model_id").get<std::string>()] = fit;
    }
    return c;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed calibration: {}", e.what()));
  }
}

Calibration LoadCalibration(const std::filesystem::path& path) {
  return CalibrationFromJson(ReadJsonFile(path));
}

void SaveCalibration(const Calibration& c, const std::filesystem::path& path) {
  WriteJsonFile(CalibrationToJson(c), path);
}

}  // namespace cascadesim
