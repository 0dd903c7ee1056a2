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

// Discrete-event simulation of a placed cascade.
//
// Requests arrive at the first model's replicas (round robin), are batched,
// pass through each partition of the replica in pipeline fashion, and are
// answered or forwarded according to the replayed confidence scores. A GPU
// runs several kernel windows at once as long as their utilization demands
// sum to at most 1; otherwise windows wait in a per-GPU FIFO. Energy is
// metered per GPU with a two-level power model.

#ifndef CASCADESIM_SIMULATOR_H_
#define CASCADESIM_SIMULATOR_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cascadesim/cascade_eval.h"
#include "cascadesim/planner.h"

namespace cascadesim {

struct Workload {
  enum class Kind { kPoisson, kReplay };
  Kind kind = Kind::kPoisson;
  double rate = 1.0;                // requests per second, Poisson only
  std::vector<double> timestamps;   // replay only, seconds
  double duration = 10.0;           // seconds
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json WorkloadToJson(const Workload& w);
Workload WorkloadFromJson(const nlohmann::json& j);

struct SimParams {
  int max_batch = 8;
  double max_wait = 0.010;        // seconds
  double router_overhead = 1e-3;  // seconds per visited model
  double meter_period = 0.1;      // seconds
};

struct SimReport {
  double duration = 0.0;
  long long arrived = 0;
  long long completed = 0;
  long long in_flight = 0;
  long long correct = 0;

  double throughput = 0.0;    // completed per second
  double mean_latency = 0.0;  // seconds, completed requests
  double p999_latency = 0.0;
  std::optional<double> joules_per_request;  // empty without arrivals
  double joules_total = 0.0;
  std::vector<double> gpu_joules;
  std::vector<double> gpu_busy_fraction;  // over the whole run

  std::vector<std::string> models;
  std::vector<long long> visits;   // per cascade position
  std::vector<double> reach;       // visits / arrived
  // Per position, per visit. Queue delay is contention only: waiting for a
  // busy partition or GPU after the batch could have been dispatched. The
  // time spent filling a batch (at most max_wait) is batching delay.
  std::vector<double> mean_queue_delay;
  std::vector<double> mean_service_time;
  std::vector<double> mean_batching_delay;
  // Same quantities over the positions fed by other models.
  double intermediate_queue_delay = 0.0;
  double intermediate_service_time = 0.0;
  double intermediate_batching_delay = 0.0;

  double mean_in_system = 0.0;  // time average
  double arrival_rate = 0.0;    // arrived / duration

  std::vector<double> tick_times;               // end of each meter tick
  std::vector<std::vector<double>> gpu_series;  // [gpu][tick] busy fraction
  std::vector<long long> latency_histogram;     // 1 ms bins
  long long events = 0;
};

// Simulates `plan` serving `config` with decisions replayed from `scored`
// (columns matched by model id). Records are cycled in arrival order.
SimReport Simulate(const Plan& plan, const CascadeConfig& config, const ScoredTrace& scored,
                   const ProfileMap& maps, const std::vector<ModelProfile>& profiles,
                   const ClusterSpec& cluster, const Workload& workload,
                   const SimParams& params = {});

// Requests per second the plan sustains with full batches: the smaller of
// R_i * S_i * max_batch / (reach_i * l_i(max_batch)) over models and, per GPU,
// the inverse of the window seconds per request of the nodes placed there
// (windows counted as if serialized).
double PlanCapacity(const Plan& plan, const std::vector<double>& reach, const ProfileMap& maps,
                    int max_batch);

nlohmann::json SimReportToJson(const SimReport& r);
void WriteUtilizationCsv(const SimReport& r, const ClusterSpec& cluster, std::ostream& out);
void WriteLatencyHistogramCsv(const SimReport& r, std::ostream& out);

struct ComparisonRow {
  std::string metric;
  std::vector<double> values;
  std::vector<double> ratios;  // value / first value
};

struct Comparison {
  std::vector<std::string> labels;
  std::vector<ComparisonRow> rows;
};

Comparison ComparePlans(const std::vector<std::string>& labels,
                        const std::vector<SimReport>& reports);
void WriteComparisonCsv(const Comparison& c, std::ostream& out);
nlohmann::json ComparisonToJson(const Comparison& c);

}  // namespace cascadesim

#endif  // CASCADESIM_SIMULATOR_H_
