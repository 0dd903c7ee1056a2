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

// Prediction traces, model profiles and cluster descriptions.
//
// A trace holds, for every validation request, the raw outputs of each model
// in a family plus the ground-truth label. All other modules consume traces
// through TraceBundle; nothing here runs a real network.

#ifndef CASCADESIM_TRACE_H_
#define CASCADESIM_TRACE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cascadesim {

inline constexpr int kSchemaVersion = 1;

enum class TaskType { kClassification, kGeneration, kQuestionAnswering };

struct TaskKind {
  TaskType type = TaskType::kClassification;
  // Only meaningful for generation; must be >= 2 there.
  int top_k = 0;

  static TaskKind Classification() { return {TaskType::kClassification, 0}; }
  static TaskKind Generation(int top_k) { return {TaskType::kGeneration, top_k}; }
  static TaskKind QuestionAnswering() { return {TaskType::kQuestionAnswering, 0}; }

  void Validate() const;
  bool operator==(const TaskKind&) const = default;
};

std::string_view TaskTypeName(TaskType type);
TaskType ParseTaskType(std::string_view name);

// Raw model output. Rows are logits vectors:
//   classification: one row (class count)
//   generation:     one row per decoding step (vocabulary size)
//   qa:             two rows, start logits then end logits (context length)
struct RawOutput {
  std::vector<std::vector<double>> rows;
  bool operator==(const RawOutput&) const = default;
};

// Labels share one encoding: class index (size 1), token ids (one per step),
// or {start, end} token indices.
struct PredictionRecord {
  std::string request_id;
  std::vector<int> label;
  // Aligned with TraceBundle::model_ids.
  std::vector<RawOutput> outputs;
  bool operator==(const PredictionRecord&) const = default;
};

struct TraceBundle {
  TaskKind task;
  // Class count, vocabulary size, or context length depending on the task.
  int output_dim = 0;
  std::vector<std::string> model_ids;
  std::vector<PredictionRecord> records;

  int ModelIndex(std::string_view model_id) const;  // -1 when absent
  bool operator==(const TraceBundle&) const = default;
};

// Throws kShape / kMissingModel / kInvariant on any inconsistency.
void ValidateTrace(const TraceBundle& bundle);

// True when the model's argmax prediction matches the label.
bool IsCorrect(const RawOutput& output, const std::vector<int>& label, TaskType type);

// Fraction of records where any model in the bundle is correct.
double OracleJointAccuracy(const TraceBundle& bundle);
double StandaloneAccuracy(const TraceBundle& bundle, int model_index);

nlohmann::json TraceToJson(const TraceBundle& bundle);
TraceBundle TraceFromJson(const nlohmann::json& j);
TraceBundle LoadTrace(const std::filesystem::path& path,
                      std::optional<TaskKind> expected_task = std::nullopt);
void SaveTrace(const TraceBundle& bundle, const std::filesystem::path& path);

// --- model profiles --------------------------------------------------------

struct LinearCoeffs {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double batch) const { return slope * batch + intercept; }
  bool operator==(const LinearCoeffs&) const = default;
};

struct ProfileSample {
  double batch = 0.0;
  double utilization = 0.0;
  double transmission = 0.0;  // seconds
  double memory = 0.0;        // bytes
  double latency = 0.0;       // seconds
  bool operator==(const ProfileSample&) const = default;
};

struct ModelProfile {
  std::string model_id;
  std::int64_t param_count = 0;
  double standalone_accuracy = 0.0;
  double energy_per_request = 0.0;  // joules
  double service_latency = 0.0;     // seconds, batch of one
  double memory_bytes = 0.0;
  LinearCoeffs utilization;   // kernel utilization fraction per batch size
  LinearCoeffs transmission;  // seconds per batch size
  // Batch service time; defaults to the constant service_latency.
  std::optional<LinearCoeffs> latency;
  double output_bytes = 0.0;
  // Hidden-state bytes per request crossing a partition boundary; defaults
  // to output_bytes.
  std::optional<double> hidden_bytes;
  // Raw profiling samples; when present the planner fits maps from them.
  std::vector<ProfileSample> samples;

  double HiddenBytes() const { return hidden_bytes.value_or(output_bytes); }
  bool operator==(const ModelProfile&) const = default;
};

void ValidateProfiles(const std::vector<ModelProfile>& profiles);
nlohmann::json ProfilesToJson(const std::vector<ModelProfile>& profiles);
std::vector<ModelProfile> ProfilesFromJson(const nlohmann::json& j);
std::vector<ModelProfile> LoadProfiles(const std::filesystem::path& path);
void SaveProfiles(const std::vector<ModelProfile>& profiles,
                  const std::filesystem::path& path);
const ModelProfile& FindProfile(const std::vector<ModelProfile>& profiles,
                                std::string_view model_id);

// --- cluster ---------------------------------------------------------------

struct Gpu {
  std::string gpu_id;
  double memory_bytes = 0.0;
  double idle_power = 0.0;    // watts
  double active_power = 0.0;  // watts
  bool operator==(const Gpu&) const = default;
};

struct ClusterSpec {
  std::vector<Gpu> gpus;
  // Seconds per byte between GPU pairs, row-major gpus.size()^2.
  std::vector<double> transmission_cost;

  int size() const { return static_cast<int>(gpus.size()); }
  double Cost(int from, int to) const {
    return transmission_cost[static_cast<std::size_t>(from) * gpus.size() +
                             static_cast<std::size_t>(to)];
  }
  double TotalMemory() const;
  bool operator==(const ClusterSpec&) const = default;
};

void ValidateCluster(const ClusterSpec& cluster);
nlohmann::json ClusterToJson(const ClusterSpec& cluster);
ClusterSpec ClusterFromJson(const nlohmann::json& j);
ClusterSpec LoadCluster(const std::filesystem::path& path);
void SaveCluster(const ClusterSpec& cluster, const std::filesystem::path& path);

// --- synthetic traces ------------------------------------------------------

struct FamilyMember {
  std::string model_id;
  double marginal_accuracy = 0.0;
  // Fraction of requests this model gets right while every smaller model
  // gets them wrong.
  double contribution = 0.0;
  // Multiplies the logit gap; small values give a model that is rarely
  // confident.
  double margin_scale = 1.0;
};

struct JointAccuracySpec {
  TaskKind task;
  int output_dim = 2;      // classes / vocabulary / context tokens
  int sequence_length = 1; // generation steps
  // Probability that a prediction draws its logit gap from the distribution
  // of the opposite correctness class.
  double overlap = 0.2;
  std::vector<FamilyMember> models;  // small to large

  double JointAccuracy() const;
  void Validate() const;
};

nlohmann::json JointSpecToJson(const JointAccuracySpec& spec);
JointAccuracySpec JointSpecFromJson(const nlohmann::json& j);
JointAccuracySpec LoadJointSpec(const std::filesystem::path& path);

TraceBundle GenerateSyntheticTrace(const JointAccuracySpec& spec, int n,
                                   std::uint64_t seed);

// Reads and parses a JSON document; kMissingInput / kParse on failure.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);
// Writes `j` pretty-printed with a trailing newline.
void WriteJsonFile(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace cascadesim

#endif  // CASCADESIM_TRACE_H_
