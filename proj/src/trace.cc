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

#include "cascadesim/trace.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kMissingModel: return "missing model";
    case ErrorCode::kMissingInput: return "missing input";
    case ErrorCode::kInvariant: return "invariant violation";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kInvalidArgument: return "invalid argument";
  }
  return "error";
}

void Fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

void TaskKind::Validate() const {
  if (type == TaskType::kGeneration && top_k < 2) {
    Fail(ErrorCode::kInvalidArgument, "generation task requires top_k >= 2");
  }
}

std::string_view TaskTypeName(TaskType type) {
  switch (type) {
    case TaskType::kClassification: return "classification";
    case TaskType::kGeneration: return "generation";
    case TaskType::kQuestionAnswering: return "question_answering";
  }
  return "classification";
}

TaskType ParseTaskType(std::string_view name) {
  if (name == "classification") return TaskType::kClassification;
  if (name == "generation") return TaskType::kGeneration;
  if (name == "question_answering" || name == "qa") return TaskType::kQuestionAnswering;
  Fail(ErrorCode::kParse, fmt::format("unknown task type '{}'", name));
}

int TraceBundle::ModelIndex(std::string_view model_id) const {
  auto it = std::find(model_ids.begin(), model_ids.end(), model_id);
  return it == model_ids.end() ? -1 : static_cast<int>(it - model_ids.begin());
}

namespace {

int ArgMax(const std::vector<double>& row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

void ValidateOutput(const RawOutput& out, const PredictionRecord& rec, const TraceBundle& b,
                    const std::string& model_id) {
  const auto where = [&] { return fmt::format("record '{}', model '{}'", rec.request_id, model_id); };
  switch (b.task.type) {
    case TaskType::kClassification:
      Require(out.rows.size() == 1, ErrorCode::kShape,
              where() + ": classification output must have one logits row");
      break;
    case TaskType::kGeneration:
      Require(!out.rows.empty(), ErrorCode::kShape, where() + ": generation needs >= 1 step");
      Require(out.rows.size() == rec.label.size(), ErrorCode::kShape,
              where() + ": step count differs from label length");
      break;
    case TaskType::kQuestionAnswering:
      Require(out.rows.size() == 2, ErrorCode::kShape,
              where() + ": qa output must have start and end rows");
      break;
  }
  for (const auto& row : out.rows) {
    Require(static_cast<int>(row.size()) == b.output_dim, ErrorCode::kShape,
            fmt::format("{}: logits length {} != {}", where(), row.size(), b.output_dim));
    for (double v : row) {
      Require(std::isfinite(v), ErrorCode::kInvariant, where() + ": non-finite logit");
    }
  }
}

}  // namespace

void ValidateTrace(const TraceBundle& b) {
  b.task.Validate();
  Require(!b.model_ids.empty(), ErrorCode::kInvariant, "trace declares no models");
  if (b.task.type == TaskType::kGeneration) {
    Require(b.output_dim >= b.task.top_k, ErrorCode::kShape, "top_k exceeds vocabulary size");
  }
  Require(b.output_dim >= 2, ErrorCode::kShape, "output dimension must be >= 2");
  for (const auto& rec : b.records) {
    Require(rec.outputs.size() == b.model_ids.size(), ErrorCode::kMissingModel,
            fmt::format("record '{}' has {} outputs for {} models", rec.request_id,
                        rec.outputs.size(), b.model_ids.size()));
    switch (b.task.type) {
      case TaskType::kClassification:
        Require(rec.label.size() == 1, ErrorCode::kShape, "classification label must be one index");
        break;
      case TaskType::kGeneration:
        Require(!rec.label.empty(), ErrorCode::kShape, "generation label must be non-empty");
        break;
      case TaskType::kQuestionAnswering:
        Require(rec.label.size() == 2, ErrorCode::kShape, "qa label must be {start, end}");
        break;
    }
    for (int v : rec.label) {
      Require(v >= 0 && v < b.output_dim, ErrorCode::kShape,
              fmt::format("record '{}': label {} out of range", rec.request_id, v));
    }
    for (std::size_t m = 0; m < rec.outputs.size(); ++m) {
      ValidateOutput(rec.outputs[m], rec, b, b.model_ids[m]);
    }
  }
}

bool IsCorrect(const RawOutput& output, const std::vector<int>& label, TaskType type) {
  if (type == TaskType::kClassification) return ArgMax(output.rows.front()) == label.front();
  if (output.rows.size() != label.size()) return false;
  for (std::size_t s = 0; s < label.size(); ++s) {
    if (ArgMax(output.rows[s]) != label[s]) return false;
  }
  return true;
}

double OracleJointAccuracy(const TraceBundle& b) {
  if (b.records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& rec : b.records) {
    for (const auto& out : rec.outputs) {
      if (IsCorrect(out, rec.label, b.task.type)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(b.records.size());
}

double StandaloneAccuracy(const TraceBundle& b, int model_index) {
  if (b.records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& rec : b.records) {
    hits += IsCorrect(rec.outputs.at(model_index), rec.label, b.task.type) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(b.records.size());
}

// --- JSON helpers -----------------------------------------------------------

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kMissingInput, fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void WriteJsonFile(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kMissingInput, fmt::format("cannot write '{}'", path.string()));
  out << j.dump(1) << '\n';
}

namespace {

// Wraps nlohmann's type errors so malformed documents surface as kParse.
template <typename F>
auto Parsing(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed {}: {}", what, e.what()));
  }
}

void CheckSchemaVersion(const json& j, std::string_view what) {
  const int v = j.value("schema_version", -1);
  Require(v == kSchemaVersion, ErrorCode::kParse,
          fmt::format("{}: unsupported schema_version {}", what, v));
}

json TaskToJson(const TaskKind& t) {
  return json{{"type", TaskTypeName(t.type)}, {"top_k", t.top_k}};
}

TaskKind TaskFromJson(const json& j) {
  TaskKind t;
  t.type = ParseTaskType(j.at("type").get<std::string>());
  t.top_k = j.value("top_k", 0);
  return t;
}

json CoeffsToJson(const LinearCoeffs& c) { return json::array({c.slope, c.intercept}); }
LinearCoeffs CoeffsFromJson(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

json TraceToJson(const TraceBundle& b) {
  json records = json::array();
  for (const auto& rec : b.records) {
    json outputs = json::object();
    for (std::size_t m = 0; m < rec.outputs.size() && m < b.model_ids.size(); ++m) {
      outputs[b.model_ids[m]] = rec.outputs[m].rows;
    }
    records.push_back({{"id", rec.request_id}, {"label", rec.label}, {"outputs", outputs}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"kind", "trace"},
              {"task", TaskToJson(b.task)},
              {"output_dim", b.output_dim},
              {"model_ids", b.model_ids},
              {"records", std::move(records)}};
}

TraceBundle TraceFromJson(const json& j) {
  CheckSchemaVersion(j, "trace");
  TraceBundle b = Parsing("trace", [&] {
    TraceBundle out;
    out.task = TaskFromJson(j.at("task"));
    out.output_dim = j.at("output_dim").get<int>();
    out.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    for (const auto& r : j.at("records")) {
      PredictionRecord rec;
      rec.request_id = r.at("id").get<std::string>();
      rec.label = r.at("label").get<std::vector<int>>();
      const auto& outputs = r.at("outputs");
      for (const auto& id : out.model_ids) {
        if (!outputs.contains(id)) {
          Fail(ErrorCode::kMissingModel,
               fmt::format("record '{}' has no output for model '{}'", rec.request_id, id));
        }
        rec.outputs.push_back(
            RawOutput{outputs.at(id).get<std::vector<std::vector<double>>>()});
      }
      Require(outputs.size() == out.model_ids.size(), ErrorCode::kMissingModel,
              fmt::format("record '{}' has outputs for undeclared models", rec.request_id));
      out.records.push_back(std::move(rec));
    }
    return out;
  });
  ValidateTrace(b);
  return b;
}

TraceBundle LoadTrace(const std::filesystem::path& path, std::optional<TaskKind> expected) {
  TraceBundle b = TraceFromJson(ReadJsonFile(path));
  if (expected && expected->type != b.task.type) {
    Fail(ErrorCode::kShape, fmt::format("'{}' holds a {} trace, expected {}", path.string(),
                                        TaskTypeName(b.task.type), TaskTypeName(expected->type)));
  }
  if (expected && expected->type == TaskType::kGeneration) b.task.top_k = expected->top_k;
  ValidateTrace(b);
  return b;
}

void SaveTrace(const TraceBundle& b, const std::filesystem::path& path) {
  WriteJsonFile(TraceToJson(b), path);
}

// --- profiles ---------------------------------------------------------------

void ValidateProfiles(const std::vector<ModelProfile>& profiles) {
  Require(!profiles.empty(), ErrorCode::kInvariant, "profile list is empty");
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    const auto bad = [&](std::string_view what) {
      Fail(ErrorCode::kInvariant, fmt::format("profile '{}': {}", p.model_id, what));
    };
    if (!(p.energy_per_request > 0)) bad("energy_per_request must be > 0");
    if (!(p.service_latency > 0)) bad("service_latency must be > 0");
    if (!(p.memory_bytes > 0)) bad("memory_bytes must be > 0");
    if (!(p.standalone_accuracy >= 0 && p.standalone_accuracy <= 1)) {
      bad("standalone_accuracy outside [0, 1]");
    }
    if (p.output_bytes < 0 || p.HiddenBytes() < 0) bad("negative byte counts");
    if (i > 0 && p.param_count < profiles[i - 1].param_count) {
      bad("family must be ordered by nondecreasing param_count");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (profiles[k].model_id == p.model_id) bad("duplicate model_id");
    }
  }
}

json ProfilesToJson(const std::vector<ModelProfile>& profiles) {
  json arr = json::array();
  for (const auto& p : profiles) {
    json m{{"model_id", p.model_id},
           {"param_count", p.param_count},
           {"standalone_accuracy", p.standalone_accuracy},
           {"energy_per_request", p.energy_per_request},
           {"service_latency", p.service_latency},
           {"memory_bytes", p.memory_bytes},
           {"utilization_coeffs", CoeffsToJson(p.utilization)},
           {"transmission_coeffs", CoeffsToJson(p.transmission)},
           {"output_bytes", p.output_bytes}};
    if (p.latency) m["latency_coeffs"] = CoeffsToJson(*p.latency);
    if (p.hidden_bytes) m["hidden_bytes"] = *p.hidden_bytes;
    if (!p.samples.empty()) {
      json s = json::array();
      for (const auto& x : p.samples) {
        s.push_back({{"batch", x.batch},
                     {"utilization", x.utilization},
                     {"transmission", x.transmission},
                     {"memory", x.memory},
                     {"latency", x.latency}});
      }
      m["samples"] = std::move(s);
    }
    arr.push_back(std::move(m));
  }
  return json{{"schema_version", kSchemaVersion}, {"kind", "profiles"}, {"models", arr}};
}

std::vector<ModelProfile> ProfilesFromJson(const json& j) {
  CheckSchemaVersion(j, "profiles");
  auto profiles = Parsing("profiles", [&] {
    std::vector<ModelProfile> out;
    for (const auto& m : j.at("models")) {
      ModelProfile p;
      p.model_id = m.at("model_id").get<std::string>();
      p.param_count = m.at("param_count").get<std::int64_t>();
      p.standalone_accuracy = m.at("standalone_accuracy").get<double>();
      p.energy_per_request = m.at("energy_per_request").get<double>();
      p.service_latency = m.at("service_latency").get<double>();
      p.memory_bytes = m.at("memory_bytes").get<double>();
      p.utilization = CoeffsFromJson(m.at("utilization_coeffs"));
      p.transmission = CoeffsFromJson(m.at("transmission_coeffs"));
      p.output_bytes = m.at("output_bytes").get<double>();
      if (m.contains("latency_coeffs")) p.latency = CoeffsFromJson(m.at("latency_coeffs"));
      if (m.contains("hidden_bytes")) p.hidden_bytes = m.at("hidden_bytes").get<double>();
      if (m.contains("samples")) {
        for (const auto& s : m.at("samples")) {
          p.samples.push_back({s.at("batch").get<double>(), s.at("utilization").get<double>(),
                               s.at("transmission").get<double>(), s.at("memory").get<double>(),
                               s.at("latency").get<double>()});
        }
      }
      out.push_back(std::move(p));
    }
    return out;
  });
  ValidateProfiles(profiles);
  return profiles;
}

std::vector<ModelProfile> LoadProfiles(const std::filesystem::path& path) {
  return ProfilesFromJson(ReadJsonFile(path));
}

void SaveProfiles(const std::vector<ModelProfile>& profiles, const std::filesystem::path& path) {
  WriteJsonFile(ProfilesToJson(profiles), path);
}

const ModelProfile& FindProfile(const std::vector<ModelProfile>& profiles,
                                std::string_view model_id) {
  for (const auto& p : profiles) {
    if (p.model_id == model_id) return p;
  }
  Fail(ErrorCode::kMissingModel, fmt::format("no profile for model '{}'", model_id));
}

// --- cluster ----------------------------------------------------------------

double ClusterSpec::TotalMemory() const {
  double total = 0.0;
  for (const auto& g : gpus) total += g.memory_bytes;
  return total;
}

void ValidateCluster(const ClusterSpec& c) {
  const std::size_t n = c.gpus.size();
  Require(n > 0, ErrorCode::kInvariant, "cluster has no GPUs");
  Require(c.transmission_cost.size() == n * n, ErrorCode::kShape,
          "transmission_cost must be a square matrix over all GPUs");
  for (const auto& g : c.gpus) {
    Require(g.memory_bytes > 0, ErrorCode::kInvariant, "GPU memory must be > 0");
    Require(g.idle_power >= 0 && g.active_power >= g.idle_power, ErrorCode::kInvariant,
            fmt::format("GPU '{}': need 0 <= idle_power <= active_power", g.gpu_id));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double v = c.Cost(static_cast<int>(a), static_cast<int>(b));
      Require(std::isfinite(v) && v >= 0, ErrorCode::kInvariant,
              "transmission cost must be finite and nonnegative");
      Require(v == c.Cost(static_cast<int>(b), static_cast<int>(a)), ErrorCode::kInvariant,
              fmt::format("transmission cost is asymmetric at ({}, {})", a, b));
      Require(c.Cost(static_cast<int>(a), static_cast<int>(a)) <= v, ErrorCode::kInvariant,
              fmt::format("intra-GPU cost of GPU {} exceeds a cross-GPU cost", a));
    }
  }
}

json ClusterToJson(const ClusterSpec& c) {
  json gpus = json::array();
  for (const auto& g : c.gpus) {
    gpus.push_back({{"gpu_id", g.gpu_id},
                    {"memory_bytes", g.memory_bytes},
                    {"idle_power", g.idle_power},
                    {"active_power", g.active_power}});
  }
  json matrix = json::array();
  for (int a = 0; a < c.size(); ++a) {
    json row = json::array();
    for (int b = 0; b < c.size(); ++b) row.push_back(c.Cost(a, b));
    matrix.push_back(std::move(row));
  }
  return json{{"schema_version", kSchemaVersion},
              {"kind", "cluster"},
              {"gpus", gpus},
              {"transmission_cost", matrix}};
}

ClusterSpec ClusterFromJson(const json& j) {
  CheckSchemaVersion(j, "cluster");
  ClusterSpec c = Parsing("cluster", [&] {
    ClusterSpec out;
    for (const auto& g : j.at("gpus")) {
      out.gpus.push_back({g.at("gpu_id").get<std::string>(), g.at("memory_bytes").get<double>(),
                          g.at("idle_power").get<double>(), g.at("active_power").get<double>()});
    }
    const auto rows = j.at("transmission_cost").get<std::vector<std::vector<double>>>();
    Require(rows.size() == out.gpus.size(), ErrorCode::kShape,
            "transmission_cost row count differs from GPU count");
    for (const auto& r : rows) {
      Require(r.size() == out.gpus.size(), ErrorCode::kShape, "transmission_cost is not square");
      out.transmission_cost.insert(out.transmission_cost.end(), r.begin(), r.end());
    }
    return out;
  });
  ValidateCluster(c);
  return c;
}

ClusterSpec LoadCluster(const std::filesystem::path& path) {
  return ClusterFromJson(ReadJsonFile(path));
}

void SaveCluster(const ClusterSpec& c, const std::filesystem::path& path) {
  WriteJsonFile(ClusterToJson(c), path);
}

// --- joint accuracy spec ----------------------------------------------------

double JointAccuracySpec::JointAccuracy() const {
  double total = 0.0;
  for (const auto& m : models) total += m.contribution;
  return total;
}

void JointAccuracySpec::Validate() const {
  task.Validate();
  Require(!models.empty(), ErrorCode::kInvalidArgument, "joint spec has no models");
  Require(output_dim >= 2, ErrorCode::kInvalidArgument, "output_dim must be >= 2");
  Require(sequence_length >= 1, ErrorCode::kInvalidArgument, "sequence_length must be >= 1");
  Require(overlap >= 0 && overlap <= 0.5, ErrorCode::kInvalidArgument,
          "overlap must lie in [0, 0.5]");
  if (task.type == TaskType::kGeneration) {
    Require(output_dim >= task.top_k, ErrorCode::kInvalidArgument, "top_k exceeds vocabulary");
  }
  constexpr double kSlack = 1e-12;
  double earlier = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    Require(m.contribution >= 0 && m.marginal_accuracy >= 0 && m.marginal_accuracy <= 1,
            ErrorCode::kInvalidArgument,
            fmt::format("model '{}': accuracy fractions out of range", m.model_id));
    Require(m.margin_scale > 0, ErrorCode::kInvalidArgument, "margin_scale must be > 0");
    // The model's accuracy on requests some smaller model already solves must
    // fit inside the mass those smaller models cover.
    const double shared = m.marginal_accuracy - m.contribution;
    Require(shared >= -kSlack && shared <= earlier + kSlack, ErrorCode::kInvalidArgument,
            fmt::format("model '{}': marginal {} incompatible with contributions", m.model_id,
                        m.marginal_accuracy));
    earlier += m.contribution;
  }
  Require(earlier <= 1.0 + kSlack, ErrorCode::kInvalidArgument,
          fmt::format("infeasible spec: contributions sum to {} > 1", earlier));
}

json JointSpecToJson(const JointAccuracySpec& s) {
  json models = json::array();
  for (const auto& m : s.models) {
    models.push_back({{"model_id", m.model_id},
                      {"marginal_accuracy", m.marginal_accuracy},
                      {"contribution", m.contribution},
                      {"margin_scale", m.margin_scale}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"kind", "joint_accuracy_spec"},
              {"task", TaskToJson(s.task)},
              {"output_dim", s.output_dim},
              {"sequence_length", s.sequence_length},
              {"overlap", s.overlap},
              {"models", models}};
}

JointAccuracySpec JointSpecFromJson(const json& j) {
  CheckSchemaVersion(j, "joint accuracy spec");
  JointAccuracySpec s = Parsing("joint accuracy spec", [&] {
    JointAccuracySpec out;
    out.task = TaskFromJson(j.at("task"));
    out.output_dim = j.at("output_dim").get<int>();
    out.sequence_length = j.value("sequence_length", 1);
    out.overlap = j.value("overlap", 0.2);
    for (const auto& m : j.at("models")) {
      out.models.push_back({m.at("model_id").get<std::string>(),
                            m.at("marginal_accuracy").get<double>(),
                            m.at("contribution").get<double>(), m.value("margin_scale", 1.0)});
    }
    return out;
  });
  s.Validate();
  return s;
}

JointAccuracySpec LoadJointSpec(const std::filesystem::path& path) {
  return JointSpecFromJson(ReadJsonFile(path));
}

// --- generator --------------------------------------------------------------

namespace {

class LogitSampler {
 public:
  LogitSampler(std::uint64_t seed, double overlap) : rng_(seed), overlap_(overlap) {}

  double Uniform() { return unit_(rng_); }
  int Index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  // Gap between the predicted logit and the runner-up.
  double Gap(bool correct, double scale) {
    // An overlapping draw crosses into the other class's range: correct
    // predictions fall to the low range, incorrect ones rise to a moderate
    // range whose tail is thinner than the confident one.
    const bool crossed = Uniform() < overlap_;
    double gap;
    if (correct) {
      gap = crossed ? low_(rng_) : 1.0 + high_(rng_);
    } else {
      gap = crossed ? 1.0 + moderate_(rng_) : low_(rng_);
    }
    return gap * scale;
  }

  // Logits of length `dim` whose argmax is `predicted`, with the given gap
  // over the best competitor.
  std::vector<double> Row(int dim, int predicted, double gap) {
    std::vector<double> row(static_cast<std::size_t>(dim));
    double best_other = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < dim; ++c) {
      row[c] = noise_(rng_);
      if (c != predicted) best_other = std::max(best_other, row[c]);
    }
    row[predicted] = best_other + gap;
    return row;
  }

  int OtherThan(int dim, int value) {
    const int k = Index(dim - 1);
    return k >= value ? k + 1 : k;
  }

 private:
  std::mt19937_64 rng_;
  double overlap_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> noise_{0.0, 1.0};
  std::exponential_distribution<double> high_{1.0 / 2.5};
  std::exponential_distribution<double> low_{1.0 / 0.6};
  std::exponential_distribution<double> moderate_{1.0 / 0.8};
};

// Correctness of every model for one latent difficulty value. Requests are
// bucketed by the first model that solves them; within a bucket, the offset
// of the difficulty decides which larger models also solve it.
std::vector<bool> CorrectnessPattern(const JointAccuracySpec& spec, double difficulty) {
  const std::size_t n = spec.models.size();
  std::vector<bool> correct(n, false);
  double start = 0.0;
  for (std::size_t first = 0; first < n; ++first) {
    const double width = spec.models[first].contribution;
    if (width > 0 && difficulty < start + width) {
      const double offset = (difficulty - start) / width;
      correct[first] = true;
      double covered = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k > first) {
          const double shared = spec.models[k].marginal_accuracy - spec.models[k].contribution;
          correct[k] = covered > 0 && offset < shared / covered;
        }
        covered += spec.models[k].contribution;
      }
      return correct;
    }
    start += width;
  }
  return correct;
}

RawOutput SampleOutput(const JointAccuracySpec& spec, const std::vector<int>& label,
                       bool correct, double scale, LogitSampler& s) {
  RawOutput out;
  const int dim = spec.output_dim;
  switch (spec.task.type) {
    case TaskType::kClassification: {
      const int predicted = correct ? label[0] : s.OtherThan(dim, label[0]);
      out.rows.push_back(s.Row(dim, predicted, s.Gap(correct, scale)));
      break;
    }
    case TaskType::kGeneration: {
      const int steps = static_cast<int>(label.size());
      const int wrong_step = correct ? -1 : s.Index(steps);
      for (int t = 0; t < steps; ++t) {
        const bool ok = t != wrong_step;
        const int predicted = ok ? label[t] : s.OtherThan(dim, label[t]);
        out.rows.push_back(s.Row(dim, predicted, s.Gap(ok, scale)));
      }
      break;
    }
    case TaskType::kQuestionAnswering: {
      // 0: start wrong, 1: end wrong, 2: both wrong.
      const int failure = correct ? -1 : s.Index(3);
      for (int side = 0; side < 2; ++side) {
        const bool ok = correct || !(failure == side || failure == 2);
        const int predicted = ok ? label[side] : s.OtherThan(dim, label[side]);
        out.rows.push_back(s.Row(dim, predicted, s.Gap(ok, scale)));
      }
      break;
    }
  }
  return out;
}

}  // namespace

TraceBundle GenerateSyntheticTrace(const JointAccuracySpec& spec, int n, std::uint64_t seed) {
  spec.Validate();
  Require(n >= 0, ErrorCode::kInvalidArgument, "record count must be >= 0");
  TraceBundle b;
  b.task = spec.task;
  b.output_dim = spec.output_dim;
  for (const auto& m : spec.models) b.model_ids.push_back(m.model_id);
  LogitSampler sampler(seed, spec.overlap);
  const int width = std::max(6, static_cast<int>(std::to_string(std::max(n, 1)).size()));
  b.records.reserve(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    PredictionRecord rec;
    rec.request_id = fmt::format("r{:0{}d}", r, width);
    switch (spec.task.type) {
      case TaskType::kClassification:
        rec.label = {sampler.Index(spec.output_dim)};
        break;
      case TaskType::kGeneration:
        for (int t = 0; t < spec.sequence_length; ++t) rec.label.push_back(sampler.Index(spec.output_dim));
        break;
      case TaskType::kQuestionAnswering: {
        const int a = sampler.Index(spec.output_dim);
        const int c = sampler.Index(spec.output_dim);
        rec.label = {std::min(a, c), std::max(a, c)};
        break;
      }
    }
    const auto pattern = CorrectnessPattern(spec, sampler.Uniform());
    for (std::size_t m = 0; m < spec.models.size(); ++m) {
      rec.outputs.push_back(
          SampleOutput(spec, rec.label, pattern[m], spec.models[m].margin_scale, sampler));
    }
    b.records.push_back(std::move(rec));
  }
  return b;
}

}  // namespace cascadesim
