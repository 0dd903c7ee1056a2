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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cascadesim/error.h"
#include "test_support.h"

namespace cascadesim {
namespace {

using testing::ManualPlan;
using testing::TestProfile;
using testing::UniformCluster;

// Two-model family: m0 is confident on `easy` of the records (and right
// there), m1 always answers.
ScoredTrace TwoModelScores(double easy, int records = 1000) {
  std::vector<std::vector<double>> scores(2, std::vector<double>(records));
  std::vector<std::vector<bool>> correct(2, std::vector<bool>(records));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < records; ++r) {
    const bool e = u(rng) < easy;
    scores[0][r] = e ? 0.95 : 0.3;
    correct[0][r] = e;
    scores[1][r] = 0.9;
    correct[1][r] = u(rng) < 0.9;
  }
  return testing::MakeScored(scores, correct);
}

struct Family {
  std::vector<ModelProfile> profiles;
  ProfileMap maps;
};

Family TwoModels() {
  Family f;
  f.profiles = {TestProfile("m0", 1e9, {0.05, 0.1}, {0.0005, 0.002}, 1, 0.05),
                TestProfile("m1", 4e9, {0.08, 0.3}, {0.004, 0.02}, 2, 1.0)};
  f.maps = FitProfiles(f.profiles);
  return f;
}

Workload Poisson(double rate, double duration, std::uint64_t seed = 3) {
  Workload w;
  w.rate = rate;
  w.duration = duration;
  w.seed = seed;
  return w;
}

TEST(Simulate, MD1BusyFraction) {
  const auto profiles = std::vector<ModelProfile>{TestProfile("m0", 1e9, {0.0, 1.0}, {0.0, 0.005})};
  const auto maps = FitProfiles(profiles);
  const auto scored = testing::MakeScored({std::vector<double>(100, 1.0)},
                                          {std::vector<bool>(100, true)});
  SimParams params;
  params.max_batch = 1;
  params.max_wait = 0.0;
  // lambda * l = 100 * 0.005 = 0.5 over 10^4 expected arrivals.
  const auto r = Simulate(ManualPlan({"m0"}, {{0}}), SequentialConfig({"m0"}, {}), scored, maps,
                          profiles, UniformCluster(1, 8e9), Poisson(100.0, 100.0), params);
  EXPECT_GT(r.arrived, 9500);
  EXPECT_NEAR(r.gpu_busy_fraction[0], 0.5, 0.02);
  EXPECT_NEAR(r.mean_service_time[0], 0.005, 1e-12);
  // M/D/1 mean wait: rho * D / (2 (1 - rho)) = 2.5 ms.
  EXPECT_NEAR(r.mean_queue_delay[0], 0.0025, 0.0005);
}

TEST(Simulate, ConservationAndLittlesLaw) {
  const auto f = TwoModels();
  const auto scored = TwoModelScores(0.7);
  const auto plan = ManualPlan({"m0", "m1"}, {{0}, {1}});
  const auto cfg = SequentialConfig({"m0", "m1"}, {0.9});
  for (double rate : {50.0, 200.0, 400.0}) {
    const auto r = Simulate(plan, cfg, scored, f.maps, f.profiles, UniformCluster(2, 8e9),
                            Poisson(rate, 200.0));
    EXPECT_EQ(r.arrived, r.completed + r.in_flight);
    EXPECT_EQ(r.visits[0], r.arrived);
    EXPECT_NEAR(r.mean_in_system, r.arrival_rate * r.mean_latency,
                0.05 * r.arrival_rate * r.mean_latency)
        << rate;
    EXPECT_GE(r.p999_latency, r.mean_latency);
    EXPECT_NEAR(r.reach[1], 0.3, 0.03);
  }
}

TEST(Simulate, EnergyMeterAccounting) {
  const auto f = TwoModels();
  auto cluster = UniformCluster(3, 8e9);
  cluster.gpus[2].idle_power = 40.0;
  const auto r = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}), SequentialConfig({"m0", "m1"}, {0.9}),
                          TwoModelScores(0.6), f.maps, f.profiles, cluster, Poisson(150, 10.05));
  double total = 0.0;
  for (int g = 0; g < 3; ++g) {
    const auto& spec = cluster.gpus[g];
    EXPECT_GE(r.gpu_joules[g], spec.idle_power * r.duration * (1 - 1e-12));
    double metered = 0.0, prev = 0.0;
    ASSERT_EQ(r.gpu_series[g].size(), r.tick_times.size());
    for (std::size_t k = 0; k < r.tick_times.size(); ++k) {
      const double period = r.tick_times[k] - prev;
      metered += spec.idle_power * period +
                 (spec.active_power - spec.idle_power) * r.gpu_series[g][k] * period;
      prev = r.tick_times[k];
    }
    EXPECT_NEAR(r.gpu_joules[g], metered, 1e-9 * metered);
    total += r.gpu_joules[g];
  }
  EXPECT_NEAR(r.tick_times.back(), 10.05, 1e-12);
  EXPECT_NEAR(r.joules_total, total, 1e-9 * total);
  ASSERT_TRUE(r.joules_per_request.has_value());
  EXPECT_NEAR(*r.joules_per_request, total / r.arrived, 1e-12 * total);
  // The idle GPU draws exactly its idle power.
  EXPECT_NEAR(r.gpu_joules[2], 40.0 * 10.05, 1e-9);
}

TEST(Simulate, ZeroArrivalsLeaveJoulesUndefined) {
  const auto f = TwoModels();
  Workload w;
  w.kind = Workload::Kind::kReplay;
  w.duration = 2.0;
  const auto r = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}), SequentialConfig({"m0", "m1"}, {0.9}),
                          TwoModelScores(0.6), f.maps, f.profiles, UniformCluster(2, 8e9), w);
  EXPECT_EQ(r.arrived, 0);
  EXPECT_FALSE(r.joules_per_request.has_value());
  EXPECT_NEAR(r.joules_total, 2 * 25.0 * 2.0, 1e-9);
  EXPECT_TRUE(SimReportToJson(r)["joules_per_request"].is_null());
}

TEST(Simulate, ReplayTimestampsAreServedInOrder) {
  const auto f = TwoModels();
  Workload w;
  w.kind = Workload::Kind::kReplay;
  w.duration = 1.0;
  w.timestamps = {0.1, 0.1, 0.2, 0.5, 0.99};
  const auto r = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}), SequentialConfig({"m0", "m1"}, {0.9}),
                          TwoModelScores(1.0), f.maps, f.profiles, UniformCluster(2, 8e9), w);
  EXPECT_EQ(r.arrived, 5);
  EXPECT_EQ(r.completed, 4);  // the last one is still batching at the end
  EXPECT_EQ(r.in_flight, 1);
}

TEST(Simulate, DeterministicUnderSeed) {
  const auto f = TwoModels();
  const auto plan = ManualPlan({"m0", "m1"}, {{0, 1}, {1}});
  const auto cfg = SequentialConfig({"m0", "m1"}, {0.9});
  const auto scored = TwoModelScores(0.5);
  const auto cluster = UniformCluster(2, 8e9);
  const auto a = Simulate(plan, cfg, scored, f.maps, f.profiles, cluster, Poisson(300, 5, 9));
  const auto b = Simulate(plan, cfg, scored, f.maps, f.profiles, cluster, Poisson(300, 5, 9));
  const auto c = Simulate(plan, cfg, scored, f.maps, f.profiles, cluster, Poisson(300, 5, 10));
  EXPECT_EQ(SimReportToJson(a).dump(), SimReportToJson(b).dump());
  EXPECT_NE(SimReportToJson(a).dump(), SimReportToJson(c).dump());
}

TEST(Simulate, BatchingDelayBoundedByMaxWait) {
  const auto f = TwoModels();
  SimParams params;
  params.max_wait = 0.004;
  const auto r = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}), SequentialConfig({"m0", "m1"}, {0.9}),
                          TwoModelScores(0.5), f.maps, f.profiles, UniformCluster(2, 8e9),
                          Poisson(20, 50), params);
  for (double d : r.mean_batching_delay) {
    EXPECT_GT(d, 0.0);
    EXPECT_LE(d, 0.004 + 1e-12);
  }
  // At 20 req/s nothing waits for a busy server.
  EXPECT_LT(r.mean_queue_delay[0], 1e-4);
}

TEST(Simulate, RejectsInfeasiblePlansAndUnknownModels) {
  const auto f = TwoModels();
  auto plan = ManualPlan({"m0", "m1"}, {{0}, {1}});
  plan.feasibility.feasible = false;
  const auto cfg = SequentialConfig({"m0", "m1"}, {0.9});
  try {
    Simulate(plan, cfg, TwoModelScores(0.5), f.maps, f.profiles, UniformCluster(2, 8e9),
             Poisson(10, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
  EXPECT_THROW(Simulate(ManualPlan({"m0", "m1"}, {{0}, {5}}), cfg, TwoModelScores(0.5), f.maps,
                        f.profiles, UniformCluster(2, 8e9), Poisson(10, 1)),
               Error);
  EXPECT_THROW(Simulate(ManualPlan({"m0", "x"}, {{0}, {1}}), SequentialConfig({"m0", "x"}, {0.9}),
                        TwoModelScores(0.5), f.maps, f.profiles, UniformCluster(2, 8e9),
                        Poisson(10, 1)),
               Error);
}

TEST(ComparePlans, EnergyDominanceOnConstructedInstance) {
  const auto f = TwoModels();
  const auto cluster = UniformCluster(2, 8e9);
  const auto scored = TwoModelScores(0.8);
  const auto w = Poisson(100, 30);
  const auto cascade = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}),
                                SequentialConfig({"m0", "m1"}, {0.9}), scored, f.maps,
                                f.profiles, cluster, w);
  const auto giant = Simulate(ManualPlan({"m1"}, {{1}}), SequentialConfig({"m1"}, {}), scored,
                              f.maps, f.profiles, cluster, w);
  ASSERT_LT(cascade.reach[1], 1.0);
  EXPECT_LT(*cascade.joules_per_request, *giant.joules_per_request);

  const auto cmp = ComparePlans({"giant", "cascade"}, {giant, cascade});
  bool found = false;
  for (const auto& row : cmp.rows) {
    if (row.metric != "joules_per_request") continue;
    found = true;
    EXPECT_DOUBLE_EQ(row.ratios[0], 1.0);
    EXPECT_LT(row.ratios[1], 1.0);
  }
  EXPECT_TRUE(found);
}

TEST(ComparePlans, IdenticalReportsGiveUnitRatios) {
  const auto f = TwoModels();
  const auto r = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}), SequentialConfig({"m0", "m1"}, {0.9}),
                          TwoModelScores(0.5), f.maps, f.profiles, UniformCluster(2, 8e9),
                          Poisson(100, 5));
  const auto cmp = ComparePlans({"a", "b"}, {r, r});
  for (const auto& row : cmp.rows) {
    if (std::isfinite(row.values[0]) && row.values[0] != 0.0) {
      EXPECT_DOUBLE_EQ(row.ratios[1], 1.0) << row.metric;
    }
  }
  std::ostringstream csv;
  WriteComparisonCsv(cmp, csv);
  EXPECT_NE(csv.str().find("joules_per_request"), std::string::npos);
  EXPECT_THROW(ComparePlans({"a"}, {r}), Error);
}

TEST(ComparePlans, CascadeTailIsNoShorterThanGiantOnly) {
  const auto f = TwoModels();
  const auto cluster = UniformCluster(2, 8e9);
  const auto scored = TwoModelScores(0.6);
  // Light load: no queueing on either side, so the extra hop shows.
  const auto w = Poisson(5, 200);
  const auto cascade = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}),
                                SequentialConfig({"m0", "m1"}, {0.9}), scored, f.maps,
                                f.profiles, cluster, w);
  const auto giant = Simulate(ManualPlan({"m1"}, {{1}}), SequentialConfig({"m1"}, {}), scored,
                              f.maps, f.profiles, cluster, w);
  EXPECT_GE(cascade.p999_latency, giant.p999_latency);
}

TEST(PlanCapacity, PerModelAndPerGpuBounds) {
  const auto profiles =
      std::vector<ModelProfile>{TestProfile("m0", 1e9, {0.05, 0.1}, {0.0, 0.08})};
  const auto maps = FitProfiles(profiles);
  // Two replicas, 8 per batch, 80 ms per batch: 200 req/s on separate GPUs.
  EXPECT_NEAR(PlanCapacity(ManualPlan({"m0"}, {{0, 1}}), {1.0}, maps, 8), 200.0, 1e-9);
  // Sharing one GPU serializes the windows: 100 req/s.
  EXPECT_NEAR(PlanCapacity(ManualPlan({"m0"}, {{0, 0}}), {1.0}, maps, 8), 100.0, 1e-9);
  EXPECT_THROW(PlanCapacity(ManualPlan({"m0"}, {{0}}), {1.0, 0.5}, maps, 8), Error);
}

TEST(Reports, CsvOutputs) {
  const auto f = TwoModels();
  const auto cluster = UniformCluster(2, 8e9);
  const auto r = Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}), SequentialConfig({"m0", "m1"}, {0.9}),
                          TwoModelScores(0.5), f.maps, f.profiles, cluster, Poisson(100, 1));
  std::ostringstream util, hist;
  WriteUtilizationCsv(r, cluster, util);
  WriteLatencyHistogramCsv(r, hist);
  long long lines = 0;
  for (char c : util.str()) lines += c == '\n';
  EXPECT_EQ(lines, 1 + static_cast<long long>(r.tick_times.size()));
  long long counted = 0;
  for (long long c : r.latency_histogram) counted += c;
  EXPECT_EQ(counted, r.completed);
  EXPECT_FALSE(hist.str().empty());
}

TEST(Workload, JsonAndValidation) {
  Workload w = Poisson(12.5, 3.0, 4);
  const auto back = WorkloadFromJson(WorkloadToJson(w));
  EXPECT_EQ(back.rate, 12.5);
  EXPECT_EQ(back.duration, 3.0);
  EXPECT_EQ(back.seed, 4u);
  w.rate = 0;
  EXPECT_THROW(w.Validate(), Error);
  Workload replay;
  replay.kind = Workload::Kind::kReplay;
  replay.timestamps = {0.5, 0.2};
  EXPECT_THROW(replay.Validate(), Error);
}

}  // namespace
}  // namespace cascadesim
