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

// Temperature-scaled confidence scores.
//
// Scores are the squared maximum of a temperature-scaled softmax. Generation
// restricts each step to its top-k logits and keeps the least confident step;
// question answering keeps the less confident of the start/end heads.

#ifndef CASCADESIM_CALIBRATION_H_
#define CASCADESIM_CALIBRATION_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cascadesim/trace.h"

namespace cascadesim {

inline constexpr double kMinTemperature = 0.018315638888734179;  // e^-4
inline constexpr double kMaxTemperature = 54.598150033144236;    // e^4

class Temperature {
 public:
  Temperature() = default;
  explicit Temperature(double value);
  double value() const { return value_; }
  bool operator==(const Temperature&) const = default;

 private:
  double value_ = 1.0;
};

enum class ScoreInput { kLogits, kProbabilities };

// softmax(logits / theta), computed stably.
std::vector<double> ScaledSoftmax(std::span<const double> logits, Temperature theta);

double ScoreClassification(std::span<const double> logits, Temperature theta,
                           ScoreInput input = ScoreInput::kLogits);
double ScoreGeneration(const std::vector<std::vector<double>>& step_logits, Temperature theta,
                       int top_k);
double ScoreQuestionAnswering(std::span<const double> start_logits,
                              std::span<const double> end_logits, Temperature theta);
double Score(const RawOutput& output, const TaskKind& task, Temperature theta);

// Mean cross-entropy of the temperature-scaled softmax against the labels.
// `model_index` selects the model column of each record.
double CalibrationLoss(const std::vector<PredictionRecord>& records, int model_index,
                       TaskType task, double theta);

struct TemperatureFit {
  Temperature theta;
  double loss = 0.0;
  // Set when the loss is flat in theta; theta is then 1.
  bool degenerate = false;
};

TemperatureFit FitTemperature(const std::vector<PredictionRecord>& records, int model_index,
                              const TaskKind& task);

// One fitted temperature per model of a trace family.
struct Calibration {
  TaskKind task;
  std::map<std::string, TemperatureFit> fits;

  Temperature For(const std::string& model_id) const;
};

Calibration CalibrateTrace(const TraceBundle& trace);

nlohmann::json CalibrationToJson(const Calibration& c);
Calibration CalibrationFromJson(const nlohmann::json& j);
Calibration LoadCalibration(const std::filesystem::path& path);
void SaveCalibration(const Calibration& c, const std::filesystem::path& path);

}  // namespace cascadesim

#endif  // CASCADESIM_CALIBRATION_H_
