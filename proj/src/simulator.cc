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

#include "cascadesim/simulator.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <queue>
#include <random>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

void Workload::Validate() const {
  Require(duration > 0 && std::isfinite(duration), ErrorCode::kInvalidArgument,
          "workload duration must be > 0");
  if (kind == Kind::kPoisson) {
    Require(rate > 0 && std::isfinite(rate), ErrorCode::kInvalidArgument,
            "Poisson rate must be > 0");
  } else {
    for (std::size_t k = 0; k < timestamps.size(); ++k) {
      Require(timestamps[k] >= 0 && (k == 0 || timestamps[k] >= timestamps[k - 1]),
              ErrorCode::kInvalidArgument, "replay timestamps must be nonnegative and sorted");
    }
  }
}

json WorkloadToJson(const Workload& w) {
  json j{{"duration", w.duration}, {"seed", w.seed}};
  if (w.kind == Workload::Kind::kPoisson) {
    j["arrival"] = "poisson";
    j["rate"] = w.rate;
  } else {
    j["arrival"] = "replay";
    j["timestamps"] = w.timestamps;
  }
  return j;
}

Workload WorkloadFromJson(const json& j) {
  try {
    Workload w;
    const std::string arrival = j.value("arrival", std::string("poisson"));
    if (arrival == "poisson") {
      w.rate = j.at("rate").get<double>();
    } else if (arrival == "replay") {
      w.kind = Workload::Kind::kReplay;
      w.timestamps = j.at("timestamps").get<std::vector<double>>();
    } else {
      Fail(ErrorCode::kParse, fmt::format("unknown arrival process '{}'", arrival));
    }
    w.duration = j.at("duration").get<double>();
    w.seed = j.value("seed", std::uint64_t{0});
    w.Validate();
    return w;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed workload: {}", e.what()));
  }
}

namespace {

constexpr double kFitTol = 1e-9;

enum class EventKind { kArrival, kBatchTimer, kWindowDone, kPartitionArrive, kDecision,
                       kForwardArrive, kMeterTick };

struct Event {
  double time = 0.0;
  long long seq = 0;
  EventKind kind = EventKind::kArrival;
  int a = 0;  // batch, group, or cascade position
  int b = 0;  // replica
};

struct Later {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.seq > y.seq;
  }
};

struct Request {
  std::size_t record = 0;
  double arrival = 0.0;
  int pos = 0;
  double enqueued = 0.0;
  double delay = 0.0;     // contention wait at the current model
  double batching = 0.0;  // wait for the batch to fill or time out
  double service = 0.0;  // at the current model
};

struct Batch {
  std::vector<int> requests;
  int pos = 0;
  int replica = 0;
  int partition = 0;
  double ready = 0.0;      // arrival at the partition
  double requested = 0.0;  // GPU window requested
  double u = 0.0;
  double service = 0.0;
};

struct Server {
  int gpu = 0;
  bool busy = false;
  std::deque<int> waiting;
};

struct ReplicaState {
  std::deque<int> queue;
  std::vector<Server> parts;
};

struct GpuState {
  double demand = 0.0;
  std::deque<int> fifo;  // batches waiting for kernel capacity
  double last = 0.0;
  double tick_integral = 0.0;
  double total_integral = 0.0;
};

struct ForwardGroup {
  std::vector<int> requests;
  int pos = 0;
  int replica = 0;
};

class Simulation {
 public:
  Simulation(const Plan& plan, const CascadeConfig& config, const ScoredTrace& scored,
             const ProfileMap& maps, const std::vector<ModelProfile>& profiles,
             const ClusterSpec& cluster, const Workload& workload, const SimParams& params)
      : plan_(plan), config_(config), scored_(scored), maps_(maps), cluster_(cluster),
        workload_(workload), params_(params), rng_(workload.seed) {
    const int n = config.size();
    for (int i = 0; i < n; ++i) {
      columns_.push_back(scored.ModelIndex(config.models[i]));
      const auto& p = FindProfile(profiles, config.models[i]);
      output_bytes_.push_back(p.output_bytes);
      hidden_bytes_.push_back(p.HiddenBytes());
      std::vector<ReplicaState> reps(static_cast<std::size_t>(plan.replicas[i]));
      for (int r = 0; r < plan.replicas[i]; ++r) {
        for (int s = 0; s < plan.partitions[i]; ++s) {
          Server server;
          server.gpu = plan.GpuOf(i, r, s);
          Require(server.gpu >= 0 && server.gpu < cluster.size(), ErrorCode::kInvariant,
                  "plan places a node on an unknown GPU");
          reps[r].parts.push_back(server);
        }
      }
      replicas_.push_back(std::move(reps));
    }
    round_robin_.assign(static_cast<std::size_t>(n), 0);
    gpus_.assign(static_cast<std::size_t>(cluster.size()), {});
    report_.models = config.models;
    report_.visits.assign(static_cast<std::size_t>(n), 0);
    delay_sum_.assign(static_cast<std::size_t>(n), 0.0);
    service_sum_.assign(static_cast<std::size_t>(n), 0.0);
    batching_sum_.assign(static_cast<std::size_t>(n), 0.0);
    done_visits_.assign(static_cast<std::size_t>(n), 0);
    report_.gpu_joules.assign(static_cast<std::size_t>(cluster.size()), 0.0);
    report_.gpu_series.assign(static_cast<std::size_t>(cluster.size()), {});
  }

  SimReport Run() {
    const double end = workload_.duration;
    if (workload_.kind == Workload::Kind::kPoisson) {
      ScheduleNextPoisson(0.0);
    } else {
      for (double t : workload_.timestamps) {
        if (t < end) Push(t, EventKind::kArrival);
      }
    }
    Push(std::min(params_.meter_period, end), EventKind::kMeterTick);

    while (!events_.empty() && events_.top().time <= end) {
      const Event e = events_.top();
      events_.pop();
      Require(e.time >= now_, ErrorCode::kInvariant, "event scheduled in the past");
      Advance(e.time);
      ++report_.events;
      switch (e.kind) {
        case EventKind::kArrival: OnArrival(); break;
        case EventKind::kBatchTimer: TryDispatch(e.a, e.b); break;
        case EventKind::kWindowDone: OnWindowDone(e.a); break;
        case EventKind::kPartitionArrive: OnPartitionArrive(e.a); break;
        case EventKind::kDecision: OnDecision(e.a); break;
        case EventKind::kForwardArrive: OnForwardArrive(e.a); break;
        case EventKind::kMeterTick: OnTick(); break;
      }
    }
    Advance(end);
    if (end - last_tick_ > 1e-12) Meter(end);
    return Finish();
  }

 private:
  void Push(double time, EventKind kind, int a = 0, int b = 0) {
    events_.push({time, seq_++, kind, a, b});
  }

  void ScheduleNextPoisson(double from) {
    std::exponential_distribution<double> gap(workload_.rate);
    const double t = from + gap(rng_);
    if (t < workload_.duration) Push(t, EventKind::kArrival);
  }

  void Advance(double t) {
    in_system_integral_ += static_cast<double>(in_system_) * (t - now_);
    now_ = t;
  }

  void Integrate(int g) {
    auto& gpu = gpus_[g];
    const double area = gpu.demand * (now_ - gpu.last);
    gpu.tick_integral += area;
    gpu.total_integral += area;
    gpu.last = now_;
  }

  void Enqueue(int id, int pos, int replica) {
    auto& req = requests_[id];
    req.pos = pos;
    req.enqueued = now_;
    req.delay = 0.0;
    req.batching = 0.0;
    req.service = 0.0;
    ++report_.visits[pos];
    replicas_[pos][replica].queue.push_back(id);
    Push(now_ + params_.max_wait, EventKind::kBatchTimer, pos, replica);
    TryDispatch(pos, replica);
  }

  void OnArrival() {
    const int id = static_cast<int>(requests_.size());
    requests_.push_back({static_cast<std::size_t>(id) % scored_.num_records(), now_, 0, now_});
    ++report_.arrived;
    ++in_system_;
    const int replica = round_robin_[0]++ % plan_.replicas[0];
    Enqueue(id, 0, replica);
    if (workload_.kind == Workload::Kind::kPoisson) ScheduleNextPoisson(now_);
  }

  void TryDispatch(int pos, int replica) {
    auto& rep = replicas_[pos][replica];
    auto& head = rep.parts[0];
    if (rep.queue.empty() || head.busy || !head.waiting.empty()) return;
    const double oldest = requests_[rep.queue.front()].enqueued;
    const bool full = static_cast<int>(rep.queue.size()) >= params_.max_batch;
    if (!full && now_ < oldest + params_.max_wait - 1e-12) return;
    Batch batch;
    batch.pos = pos;
    batch.replica = replica;
    batch.partition = 0;
    batch.ready = now_;
    // The batch became dispatchable when it filled or its oldest member timed
    // out; anything after that is contention for the replica.
    double formed = oldest + params_.max_wait;
    if (full) {
      formed = std::min(formed,
                        requests_[rep.queue[static_cast<std::size_t>(params_.max_batch) - 1]].enqueued);
    }
    while (!rep.queue.empty() && static_cast<int>(batch.requests.size()) < params_.max_batch) {
      const int id = rep.queue.front();
      rep.queue.pop_front();
      auto& req = requests_[id];
      const double start = std::max(formed, req.enqueued);
      req.batching += start - req.enqueued;
      req.delay += now_ - start;
      batch.requests.push_back(id);
    }
    batches_.push_back(std::move(batch));
    StartPartition(static_cast<int>(batches_.size()) - 1);
  }

  void StartPartition(int b) {
    auto& batch = batches_[b];
    auto& server = replicas_[batch.pos][batch.replica].parts[batch.partition];
    server.busy = true;
    for (int id : batch.requests) requests_[id].delay += now_ - batch.ready;
    const auto& model = config_.models[batch.pos];
    const double k = static_cast<double>(batch.requests.size());
    batch.service = maps_.Latency(model, k) / plan_.partitions[batch.pos];
    batch.u = maps_.Utilization(model, k);
    batch.requested = now_;
    auto& gpu = gpus_[server.gpu];
    if (gpu.fifo.empty() && gpu.demand + batch.u <= 1.0 + kFitTol) {
      BeginWindow(b);
    } else {
      gpu.fifo.push_back(b);
    }
  }

  void BeginWindow(int b) {
    auto& batch = batches_[b];
    const int g = GpuOfBatch(batch);
    Integrate(g);
    gpus_[g].demand += batch.u;
    for (int id : batch.requests) {
      requests_[id].delay += now_ - batch.requested;
      requests_[id].service += batch.service;
    }
    Push(now_ + batch.service, EventKind::kWindowDone, b);
  }

  int GpuOfBatch(const Batch& batch) const {
    return replicas_[batch.pos][batch.replica].parts[batch.partition].gpu;
  }

  void OnWindowDone(int b) {
    const Batch batch = batches_[b];
    const int g = GpuOfBatch(batch);
    Integrate(g);
    auto& gpu = gpus_[g];
    gpu.demand = std::max(0.0, gpu.demand - batch.u);
    if (gpu.demand < 1e-12) gpu.demand = 0.0;
    while (!gpu.fifo.empty() && gpu.demand + batches_[gpu.fifo.front()].u <= 1.0 + kFitTol) {
      const int next = gpu.fifo.front();
      gpu.fifo.pop_front();
      BeginWindow(next);
    }

    auto& rep = replicas_[batch.pos][batch.replica];
    auto& server = rep.parts[batch.partition];
    server.busy = false;
    const int stages = plan_.partitions[batch.pos];
    if (batch.partition + 1 < stages) {
      Batch onward = batch;
      onward.partition += 1;
      const int h = rep.parts[onward.partition].gpu;
      const double bytes = hidden_bytes_[batch.pos] * static_cast<double>(batch.requests.size());
      onward.ready = now_ + cluster_.Cost(g, h) * bytes;
      batches_.push_back(std::move(onward));
      Push(batches_.back().ready, EventKind::kPartitionArrive,
           static_cast<int>(batches_.size()) - 1);
    } else {
      Push(now_ + params_.router_overhead, EventKind::kDecision, b);
    }
    if (!server.waiting.empty()) {
      const int next = server.waiting.front();
      server.waiting.pop_front();
      StartPartition(next);
    } else if (batch.partition == 0) {
      TryDispatch(batch.pos, batch.replica);
    }
  }

  void OnPartitionArrive(int b) {
    const auto& batch = batches_[b];
    auto& server = replicas_[batch.pos][batch.replica].parts[batch.partition];
    if (server.busy) {
      server.waiting.push_back(b);
    } else {
      StartPartition(b);
    }
  }

  void OnDecision(int b) {
    const Batch batch = batches_[b];
    const int pos = batch.pos;
    // Escalated requests travel as one sub-batch per destination model; each
    // sub-batch goes to the next replica of that model in round-robin order.
    std::map<int, std::vector<int>> groups;
    for (int id : batch.requests) {
      auto& req = requests_[id];
      delay_sum_[pos] += req.delay;
      batching_sum_[pos] += req.batching;
      service_sum_[pos] += req.service;
      ++done_visits_[pos];
      const double score = scored_.score(req.record, columns_[pos]);
      const int next = NextHop(config_, pos, score);
      if (next < 0) {
        const double latency = now_ - req.arrival;
        latencies_.push_back(latency);
        ++report_.completed;
        if (scored_.correct(req.record, columns_[pos])) ++report_.correct;
        --in_system_;
        continue;
      }
      groups[next].push_back(id);
    }
    const int src = replicas_[pos][batch.replica].parts.back().gpu;
    for (auto& [next, ids] : groups) {
      const int replica = round_robin_[next]++ % plan_.replicas[next];
      const std::pair<int, int> key{next, replica};
      const int dst = replicas_[next][replica].parts.front().gpu;
      const double k = static_cast<double>(ids.size());
      double delay = cluster_.Cost(src, dst) * k * output_bytes_[pos];
      if (src != dst) delay += maps_.Transmission(config_.models[pos], k);
      groups_.push_back({std::move(ids), key.first, key.second});
      Push(now_ + delay, EventKind::kForwardArrive, static_cast<int>(groups_.size()) - 1);
    }
  }

  void OnForwardArrive(int gi) {
    const ForwardGroup group = groups_[gi];
    for (int id : group.requests) Enqueue(id, group.pos, group.replica);
  }

  void Meter(double tick_end) {
    const double period = tick_end - last_tick_;
    report_.tick_times.push_back(tick_end);
    for (int g = 0; g < cluster_.size(); ++g) {
      Integrate(g);
      auto& gpu = gpus_[g];
      const double busy = std::min(1.0, gpu.tick_integral / period);
      const auto& spec = cluster_.gpus[g];
      report_.gpu_joules[g] +=
          spec.idle_power * period + (spec.active_power - spec.idle_power) * busy * period;
      report_.gpu_series[g].push_back(busy);
      gpu.tick_integral = 0.0;
    }
    last_tick_ = tick_end;
  }

  void OnTick() {
    Meter(now_);
    const double next = now_ + params_.meter_period;
    if (next <= workload_.duration + 1e-12) {
      Push(std::min(next, workload_.duration), EventKind::kMeterTick);
    }
  }

  SimReport Finish() {
    SimReport& r = report_;
    const double d = workload_.duration;
    r.duration = d;
    r.in_flight = r.arrived - r.completed;
    r.throughput = static_cast<double>(r.completed) / d;
    r.arrival_rate = static_cast<double>(r.arrived) / d;
    r.mean_in_system = in_system_integral_ / d;
    for (double j : r.gpu_joules) r.joules_total += j;
    if (r.arrived > 0) r.joules_per_request = r.joules_total / static_cast<double>(r.arrived);
    for (const auto& gpu : gpus_) r.gpu_busy_fraction.push_back(gpu.total_integral / d);

    if (!latencies_.empty()) {
      double sum = 0.0;
      for (double l : latencies_) sum += l;
      r.mean_latency = sum / static_cast<double>(latencies_.size());
      std::vector<double> sorted = latencies_;
      std::sort(sorted.begin(), sorted.end());
      const auto rank = static_cast<std::size_t>(
          std::ceil(0.999 * static_cast<double>(sorted.size())));
      r.p999_latency = sorted[std::max<std::size_t>(rank, 1) - 1];
      r.latency_histogram.assign(static_cast<std::size_t>(sorted.back() / 1e-3) + 1, 0);
      for (double l : latencies_) ++r.latency_histogram[static_cast<std::size_t>(l / 1e-3)];
    }

    const int n = config_.size();
    double inter_delay = 0.0, inter_service = 0.0, inter_batching = 0.0;
    long long inter_visits = 0;
    for (int i = 0; i < n; ++i) {
      r.reach.push_back(r.arrived > 0 ? static_cast<double>(r.visits[i]) / r.arrived : 0.0);
      const double v = static_cast<double>(done_visits_[i]);
      r.mean_queue_delay.push_back(v > 0 ? delay_sum_[i] / v : 0.0);
      r.mean_service_time.push_back(v > 0 ? service_sum_[i] / v : 0.0);
      r.mean_batching_delay.push_back(v > 0 ? batching_sum_[i] / v : 0.0);
      if (i > 0) {
        inter_delay += delay_sum_[i];
        inter_batching += batching_sum_[i];
        inter_service += service_sum_[i];
        inter_visits += done_visits_[i];
      }
    }
    if (inter_visits > 0) {
      r.intermediate_queue_delay = inter_delay / static_cast<double>(inter_visits);
      r.intermediate_service_time = inter_service / static_cast<double>(inter_visits);
      r.intermediate_batching_delay = inter_batching / static_cast<double>(inter_visits);
    }
    return r;
  }

  const Plan& plan_;
  const CascadeConfig& config_;
  const ScoredTrace& scored_;
  const ProfileMap& maps_;
  const ClusterSpec& cluster_;
  const Workload& workload_;
  const SimParams& params_;
  std::mt19937_64 rng_;

  std::vector<int> columns_;
  std::vector<double> output_bytes_, hidden_bytes_;
  std::vector<std::vector<ReplicaState>> replicas_;
  std::vector<int> round_robin_;
  std::vector<GpuState> gpus_;
  std::vector<Request> requests_;
  std::vector<Batch> batches_;
  std::vector<ForwardGroup> groups_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  long long seq_ = 0;
  double now_ = 0.0;
  double last_tick_ = 0.0;
  long long in_system_ = 0;
  double in_system_integral_ = 0.0;
  std::vector<double> latencies_;
  std::vector<double> delay_sum_, service_sum_, batching_sum_;
  std::vector<long long> done_visits_;
  SimReport report_;
};

}  // namespace

SimReport Simulate(const Plan& plan, const CascadeConfig& config, const ScoredTrace& scored,
                   const ProfileMap& maps, const std::vector<ModelProfile>& profiles,
                   const ClusterSpec& cluster, const Workload& workload,
                   const SimParams& params) {
  workload.Validate();
  config.Validate();
  ValidateCluster(cluster);
  Require(params.max_batch >= 1 && params.max_wait >= 0 && params.router_overhead >= 0 &&
              params.meter_period > 0,
          ErrorCode::kInvalidArgument, "invalid simulator parameters");
  if (plan.models != config.models) {
    Fail(ErrorCode::kMissingModel, "plan and cascade disagree on the model list");
  }
  Require(plan.feasibility.feasible, ErrorCode::kInfeasible, "plan is not feasible");
  Require(scored.num_records() > 0, ErrorCode::kInvalidArgument, "scored trace is empty");
  return Simulation(plan, config, scored, maps, profiles, cluster, workload, params).Run();
}

double PlanCapacity(const Plan& plan, const std::vector<double>& reach, const ProfileMap& maps,
                    int max_batch) {
  Require(reach.size() == plan.models.size(), ErrorCode::kInvalidArgument,
          "reach must align with the plan");
  double capacity = std::numeric_limits<double>::infinity();
  const double b = static_cast<double>(max_batch);
  for (std::size_t i = 0; i < reach.size(); ++i) {
    if (reach[i] <= 0) continue;
    const double l = maps.Latency(plan.models[i], b);
    if (l <= 0) continue;
    capacity = std::min(capacity, plan.replicas[i] * plan.partitions[i] * b / (reach[i] * l));
  }
  // Windows sharing a GPU may not overlap (their demands can exceed 1), so
  // each GPU must also fit the summed window time of everything placed on it.
  std::map<int, double> seconds_per_request;
  for (const auto& node : plan.placements) {
    const auto i = static_cast<std::size_t>(node.model);
    if (reach[i] <= 0) continue;
    const double window = maps.Latency(plan.models[i], b) / plan.partitions[i];
    seconds_per_request[node.gpu] += reach[i] / (plan.replicas[i] * b) * window;
  }
  for (const auto& [gpu, t] : seconds_per_request) {
    if (t > 0) capacity = std::min(capacity, 1.0 / t);
  }
  return capacity;
}

json SimReportToJson(const SimReport& r) {
  json j{{"schema_version", kSchemaVersion},
         {"kind", "sim_report"},
         {"duration", r.duration},
         {"arrived", r.arrived},
         {"completed", r.completed},
         {"in_flight", r.in_flight},
         {"correct", r.correct},
         {"throughput", r.throughput},
         {"mean_latency", r.mean_latency},
         {"p999_latency", r.p999_latency},
         {"joules_total", r.joules_total},
         {"gpu_joules", r.gpu_joules},
         {"gpu_busy_fraction", r.gpu_busy_fraction},
         {"models", r.models},
         {"visits", r.visits},
         {"reach", r.reach},
         {"mean_queue_delay", r.mean_queue_delay},
         {"mean_service_time", r.mean_service_time},
         {"mean_batching_delay", r.mean_batching_delay},
         {"intermediate_queue_delay", r.intermediate_queue_delay},
         {"intermediate_service_time", r.intermediate_service_time},
         {"intermediate_batching_delay", r.intermediate_batching_delay},
         {"mean_in_system", r.mean_in_system},
         {"arrival_rate", r.arrival_rate},
         {"events", r.events}};
  j["joules_per_request"] = r.joules_per_request ? json(*r.joules_per_request) : json(nullptr);
  return j;
}

void WriteUtilizationCsv(const SimReport& r, const ClusterSpec& cluster, std::ostream& out) {
  out << "time";
  for (const auto& gpu : cluster.gpus) out << ',' << gpu.gpu_id;
  out << '\n';
  for (std::size_t t = 0; t < r.tick_times.size(); ++t) {
    out << fmt::format("{:.17g}", r.tick_times[t]);
    for (const auto& series : r.gpu_series) out << fmt::format(",{:.17g}", series[t]);
    out << '\n';
  }
}

void WriteLatencyHistogramCsv(const SimReport& r, std::ostream& out) {
  out << "bin_start_ms,bin_end_ms,count\n";
  for (std::size_t k = 0; k < r.latency_histogram.size(); ++k) {
    out << k << ',' << k + 1 << ',' << r.latency_histogram[k] << '\n';
  }
}

Comparison ComparePlans(const std::vector<std::string>& labels,
                        const std::vector<SimReport>& reports) {
  Require(reports.size() >= 2, ErrorCode::kInvalidArgument, "comparison needs two reports");
  Require(labels.size() == reports.size(), ErrorCode::kInvalidArgument,
          "one label per report");
  Comparison c;
  c.labels = labels;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto add = [&](std::string name, auto get) {
    ComparisonRow row;
    row.metric = std::move(name);
    for (const auto& r : reports) row.values.push_back(get(r));
    for (double v : row.values) {
      const double base = row.values.front();
      if (std::isnan(base) || std::isnan(v)) {
        row.ratios.push_back(nan);
      } else if (base == 0.0) {
        row.ratios.push_back(v == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
      } else {
        row.ratios.push_back(v / base);
      }
    }
    c.rows.push_back(std::move(row));
  };
  add("joules_per_request", [&](const SimReport& r) { return r.joules_per_request.value_or(nan); });
  add("joules_total", [](const SimReport& r) { return r.joules_total; });
  add("throughput", [](const SimReport& r) { return r.throughput; });
  add("mean_latency", [](const SimReport& r) { return r.mean_latency; });
  add("p999_latency", [](const SimReport& r) { return r.p999_latency; });
  add("accuracy", [&](const SimReport& r) {
    return r.completed > 0 ? static_cast<double>(r.correct) / r.completed : nan;
  });
  add("arrived", [](const SimReport& r) { return static_cast<double>(r.arrived); });
  add("completed", [](const SimReport& r) { return static_cast<double>(r.completed); });
  return c;
}

void WriteComparisonCsv(const Comparison& c, std::ostream& out) {
  out << "metric";
  for (const auto& l : c.labels) out << ',' << l;
  for (std::size_t k = 1; k < c.labels.size(); ++k) out << ',' << c.labels[k] << "_ratio";
  out << '\n';
  for (const auto& row : c.rows) {
    out << row.metric;
    for (double v : row.values) out << fmt::format(",{:.17g}", v);
    for (std::size_t k = 1; k < row.ratios.size(); ++k) out << fmt::format(",{:.17g}", row.ratios[k]);
    out << '\n';
  }
}

json ComparisonToJson(const Comparison& c) {
  json rows = json::array();
  for (const auto& row : c.rows) {
    rows.push_back({{"metric", row.metric}, {"values", row.values}, {"ratios", row.ratios}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"kind", "comparison"},
              {"labels", c.labels},
              {"rows", rows}};
}

}  // namespace cascadesim
