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

// Acceptance checks. Each criterion prints one PASS/FAIL line; the process
// exits nonzero when any of them fails.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cascadesim/calibration.h"
#include "cascadesim/cascade_eval.h"
#include "cascadesim/error.h"
#include "cascadesim/pipeline.h"
#include "cascadesim/planner.h"
#include "cascadesim/simulator.h"
#include "cascadesim/skip_config.h"
#include "cascadesim/threshold_search.h"
#include "cascadesim/trace.h"
#include "test_support.h"

namespace cs = cascadesim;
namespace fs = std::filesystem;
using cs::testing::ManualPlan;
using cs::testing::TestProfile;
using cs::testing::UniformCluster;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Run(int id, const std::string& title, double budget_seconds,
         const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > budget_seconds) {
    o.pass = false;
    o.detail += fmt::format("; over the {:.0f} s budget", budget_seconds);
  }
  if (!o.pass) ++failures;
  fmt::print("[{}] criterion {:>2}: {} | {} ({:.2f} s)\n", o.pass ? "PASS" : "FAIL", id, title,
             o.detail, secs);
  std::fflush(stdout);
}

std::size_t Argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> Energies(const std::vector<cs::ModelProfile>& profiles) {
  std::vector<double> e;
  for (const auto& p : profiles) e.push_back(p.energy_per_request);
  return e;
}

cs::CascadeCosts LadderCosts(const std::vector<double>& energy) {
  cs::CascadeCosts costs;
  costs.energy = energy;
  for (double e : energy) costs.latency.push_back(0.01 * e);
  return costs;
}

// Trace, calibration and scores for a random family.
cs::ScoredTrace ScoredFamily(const cs::JointAccuracySpec& spec, int n, std::uint64_t seed) {
  const auto trace = cs::GenerateSyntheticTrace(spec, n, seed);
  return cs::ScoreTrace(trace, cs::CalibrateTrace(trace));
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files[e.path().filename().string()] = Slurp(e.path());
  }
  return files;
}

// --- 1 ----------------------------------------------------------------------

Outcome ArgmaxInvariance() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> logit(0.0, 4.0);
  std::uniform_real_distribution<double> log_theta(std::log(cs::kMinTemperature),
                                                   std::log(cs::kMaxTemperature));
  std::uniform_int_distribution<int> dim(2, 64);
  std::vector<cs::Temperature> temps;
  for (int k = 0; k < 50; ++k) temps.emplace_back(std::exp(log_theta(rng)));
  long long checked = 0, mismatched = 0;
  for (int v = 0; v < 10000; ++v) {
    std::vector<double> x(static_cast<std::size_t>(dim(rng)));
    for (double& value : x) value = logit(rng);
    const std::size_t before = Argmax(x);
    for (const auto& t : temps) {
      ++checked;
      if (Argmax(cs::ScaledSoftmax(x, t)) != before) ++mismatched;
    }
  }
  return {mismatched == 0, fmt::format("{} of {} (vector, temperature) pairs changed argmax",
                                       mismatched, checked)};
}

// --- 2 ----------------------------------------------------------------------

Outcome JointAccuracyStructure() {
  const auto spec = cs::LoadJointSpec(cs::testing::FixtureDir() / "cola" / "joint_spec.json");
  const auto trace = cs::GenerateSyntheticTrace(spec, 10000, 7);
  const double joint = cs::OracleJointAccuracy(trace);
  bool ok = std::abs(joint - 0.88) <= 0.02;
  std::string marg;
  for (int i = 0; i < static_cast<int>(spec.models.size()); ++i) {
    const double a = cs::StandaloneAccuracy(trace, i);
    ok = ok && std::abs(a - spec.models[i].marginal_accuracy) <= 0.02;
    marg += fmt::format(" {:.3f}/{:.2f}", a, spec.models[i].marginal_accuracy);
  }
  return {ok, fmt::format("joint {:.4f} (want 0.88 +- 0.02); marginals measured/spec:{}", joint,
                          marg)};
}

// --- 3 ----------------------------------------------------------------------

Outcome AccuracyPreservingGuarantee() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"cola", "gpt", "t5", "vit"}) {
    const auto c = cs::LoadRunConfig(cs::testing::FixtureDir() / name / "run.json");
    const auto trace = cs::GenerateSyntheticTrace(cs::LoadJointSpec(*c.joint_spec), c.records,
                                                  c.seed);
    const auto scored = cs::ScoreTrace(trace, cs::CalibrateTrace(trace));
    const auto profiles = cs::LoadProfiles(*c.profiles);
    const auto costs = cs::CostsFor(trace.model_ids, profiles, c.hop_overhead);
    auto params = c.search;
    params.seed = c.seed;
    const auto graph = cs::SearchThresholds(scored, costs, params);
    const int n = scored.num_models();
    const double target = scored.StandaloneAccuracy(n - 1);
    const auto sel = cs::SelectAccuracyPreserving(graph, target);
    const auto cfg = cs::SequentialConfig(trace.model_ids, sel.point.thresholds);
    const auto m = cs::Evaluate(scored, cfg, costs);
    // Does any smaller model ever clear a mid-range score?
    bool smaller_confident = false;
    for (int i = 0; i + 1 < n && !smaller_confident; ++i) {
      for (std::size_t r = 0; r < scored.num_records(); ++r) {
        if (scored.score(r, i) >= 0.5) {
          smaller_confident = true;
          break;
        }
      }
    }
    const double giant = costs.energy.back();
    const bool this_ok = !sel.warning && m.accuracy >= target &&
                         (!smaller_confident || m.energy < giant);
    ok = ok && this_ok;
    detail += fmt::format("{} acc {:.4f}>={:.4f} e {:.4g}<{:.4g}; ", name, m.accuracy, target,
                          m.energy, giant);
  }
  return {ok, detail};
}

// --- 4 ----------------------------------------------------------------------

Outcome EnergyOptimizedFloor() {
  std::mt19937_64 rng(404);
  int passed = 0;
  double worst = 1.0;
  for (int f = 0; f < 20; ++f) {
    const int models = 3 + f % 3;
    const auto spec = cs::testing::RandomFamily(rng, models, false);
    const auto scored = ScoredFamily(spec, 3000, 1000 + f);
    const auto costs = LadderCosts(cs::testing::LadderEnergies(rng, models));
    cs::SearchParams params;
    params.seed = static_cast<std::uint64_t>(f);
    const auto graph = cs::SearchThresholds(scored, costs, params);
    const double floor = scored.StandaloneAccuracy(models - 2);
    const auto sel =
        cs::SelectEnergyOptimized(graph, floor, scored.StandaloneAccuracy(models - 1));
    const auto m = cs::Evaluate(scored, cs::SequentialConfig(scored.model_ids(),
                                                             sel.point.thresholds),
                                costs);
    worst = std::min(worst, m.accuracy - floor);
    if (m.accuracy >= floor) ++passed;
  }
  return {passed == 20,
          fmt::format("{}/20 families at or above the floor; smallest margin {:+.4f}", passed,
                      worst)};
}

// --- 5 ----------------------------------------------------------------------

Outcome SearchVersusGrid() {
  std::mt19937_64 rng(505);
  const auto spec = cs::testing::RandomFamily(rng, 2, false);
  const auto scored = ScoredFamily(spec, 200, 55);
  const auto costs = LadderCosts({0.1, 1.0});
  const double target = scored.StandaloneAccuracy(1);
  const auto graph = cs::SearchThresholds(scored, costs, cs::SearchParams{});
  const auto sel = cs::SelectAccuracyPreserving(graph, target);
  // Exhaustive grid, replayed with the test-side reference router.
  double grid = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 100; ++k) {
    const auto r = cs::testing::ReplaySequential(scored, {k / 100.0}, costs.energy);
    if (r.accuracy >= target) grid = std::min(grid, r.energy);
  }
  const bool ok = !sel.warning && sel.point.accuracy >= target && sel.point.energy <= 1.02 * grid;
  return {ok, fmt::format("search {:.5f} J vs grid {:.5f} J (ratio {:.4f}, limit 1.02)",
                          sel.point.energy, grid, sel.point.energy / grid)};
}

// --- 6 ----------------------------------------------------------------------

Outcome SkipPlanSoundness() {
  std::mt19937_64 rng(606);
  int sound = 0, pruned = 0;
  for (int f = 0; f < 20; ++f) {
    const int models = 4 + f % 2;
    int weak = -1;
    const auto spec = cs::testing::RandomFamily(rng, models, true, &weak);
    // The weak member is never confident: its score is 0 on every record,
    // so it only answers where its threshold is exactly 0.
    auto scored = ScoredFamily(spec, 2000, 2000 + f);
    for (std::size_t r = 0; r < scored.num_records(); ++r) {
      scored.Set(r, weak, 0.0, scored.correct(r, weak));
    }
    const auto energy = cs::testing::LadderEnergies(rng, models);
    cs::SkipParams params;
    params.mode = f % 2 == 0 ? cs::Mode::kAccuracyPreserving : cs::Mode::kEnergyOptimized;
    params.search.seed = static_cast<std::uint64_t>(f);
    const auto plan = cs::PruneAndRewire(scored, LadderCosts(energy), params);
    // Recompute benefits from the retained cascade's own reach.
    std::vector<double> e;
    for (const auto& id : plan.config.models) e.push_back(energy[scored.ModelIndex(id)]);
    const auto& reach = plan.sequential.reach;
    bool ok = plan.config.models.back() == spec.models.back().model_id;
    for (int i = 0; i + 1 < plan.config.size(); ++i) {
      const double b = (reach[i] - reach[i + 1]) * e[i + 1] - reach[i] * e[i];
      ok = ok && b > 0.0;
    }
    if (ok) ++sound;
    const auto& weak_id = spec.models[weak].model_id;
    if (std::find(plan.config.models.begin(), plan.config.models.end(), weak_id) ==
        plan.config.models.end()) {
      ++pruned;
    }
  }
  return {sound == 20 && pruned == 20,
          fmt::format("{}/20 plans with every benefit > 0; never-answering model pruned in "
                      "{}/20",
                      sound, pruned)};
}

// --- 7 ----------------------------------------------------------------------

// Constraint check that shares no code with the library.
bool SatisfiesPlacement(const cs::PlacementProblem& p, const std::vector<int>& a) {
  if (a.size() != p.nodes.size()) return false;
  std::vector<double> mem(static_cast<std::size_t>(p.num_gpus()), 0.0);
  std::vector<double> util(mem.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= p.num_gpus()) return false;
    mem[a[i]] += p.nodes[i].memory;
    util[a[i]] += p.nodes[i].utilization;
  }
  for (int g = 0; g < p.num_gpus(); ++g) {
    if (mem[g] > p.cluster.gpus[g].memory_bytes * (1 + 1e-9) || util[g] > 1 + 1e-9) return false;
  }
  return true;
}

Outcome PlannerOptimality() {
  std::mt19937_64 rng(707);
  int exact = 0, solved = 0;
  for (int k = 0; k < 50; ++k) {
    const auto p = cs::testing::RandomPlacementProblem(rng, 1 + k % 5, 1 + k % 3, k % 6 == 0);
    const double oracle = cs::testing::BruteForcePlacement(p);
    try {
      const auto r = cs::Solve(p);
      ++solved;
      if (r.objective == oracle && SatisfiesPlacement(p, r.assignment)) ++exact;
    } catch (const cs::Error& e) {
      if (e.code() == cs::ErrorCode::kInfeasible && !std::isfinite(oracle)) ++exact;
    }
  }
  int violations = 0, fuzzed = 0;
  for (int k = 0; k < 100; ++k) {
    const auto p = cs::testing::RandomPlacementProblem(rng, 2 + k % 12, 1 + k % 5, k % 9 == 0);
    try {
      const auto r = cs::Solve(p);
      ++fuzzed;
      if (!SatisfiesPlacement(p, r.assignment)) ++violations;
    } catch (const cs::Error& e) {
      if (e.code() != cs::ErrorCode::kInfeasible) ++violations;
    }
  }
  return {exact == 50 && violations == 0,
          fmt::format("{}/50 match brute force exactly ({} solvable); {} violations over {} "
                      "fuzzed plans",
                      exact, solved, violations, fuzzed)};
}

// --- 8 ----------------------------------------------------------------------

Outcome ReplicationProportionality() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad_pairs = 0;
  for (int v = 0; v < 100; ++v) {
    const int n = 2 + v % 5;
    std::vector<double> reach{1.0}, lat, mem(static_cast<std::size_t>(n), 1.0);
    std::vector<int> s;
    for (int i = 1; i < n; ++i) reach.push_back(reach.back() * (0.2 + 0.8 * u(rng)));
    for (int i = 0; i < n; ++i) {
      lat.push_back(0.001 + 0.2 * u(rng));
      s.push_back(1 + static_cast<int>(u(rng) * 2));
    }
    const auto r = cs::SizeReplication(reach, lat, s, mem, 1e9, std::ldexp(1.0, v % 4));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double ratio = reach[i] * lat[i] / (reach[j] * lat[j]);
        const double lo = (r[i] * s[i] - s[i]) / static_cast<double>(r[j] * s[j] + s[j]);
        const double den = r[j] * s[j] - s[j];
        if (ratio < lo - 1e-12 || (den > 0 && ratio > (r[i] * s[i] + s[i]) / den + 1e-12)) {
          ++bad_pairs;
        }
      }
    }
  }

  // Zero-queueing check: a proportional plan on a cluster with room for one
  // node per GPU, at 80% of the plan's full-batch capacity.
  const std::vector<cs::ModelProfile> profiles{
      TestProfile("m0", 1e9, {0.01, 0.02}, {0.002, 0.0002}, 1),
      TestProfile("m1", 2e9, {0.01, 0.02}, {0.006, 0.0005}, 2),
      TestProfile("m2", 3e9, {0.01, 0.02}, {0.02, 0.001}, 3)};
  const auto maps = cs::FitProfiles(profiles);
  const auto cluster = UniformCluster(16, 8e9);
  // Scores: m0 answers 60%, m1 answers 60% of the rest.
  const int records = 5000;
  std::vector<std::vector<double>> sc(3, std::vector<double>(records, 0.9));
  std::vector<std::vector<bool>> cor(3, std::vector<bool>(records, true));
  for (int r = 0; r < records; ++r) {
    const double x = u(rng);
    sc[0][r] = x < 0.6 ? 0.95 : 0.2;
    sc[1][r] = x < 0.84 ? 0.95 : 0.2;
  }
  const auto scored = cs::testing::MakeScored(sc, cor);
  std::vector<std::string> ids{"m0", "m1", "m2"};
  std::vector<cs::ModelProfile> named = profiles;
  const auto cfg = cs::SequentialConfig(ids, {0.9, 0.9});
  cs::CascadeCosts costs = cs::CostsFor(ids, profiles);
  const auto m = cs::Evaluate(scored.Select({"m0", "m1", "m2"}), cfg, costs);
  cs::DataflowStats flow{ids, m.reach, m.flows};
  cs::PlanParams params;
  const auto plan = cs::PlanSearch(flow, maps, profiles, cluster, params);
  const double capacity = cs::PlanCapacity(plan, m.reach, maps, 8);
  cs::Workload w;
  w.rate = 0.8 * capacity;
  w.duration = 120.0;
  w.seed = 8;
  const auto rep = cs::Simulate(plan, cfg, scored, maps, profiles, cluster, w);
  const double ratio = rep.intermediate_queue_delay / rep.intermediate_service_time;
  std::string rs;
  for (std::size_t i = 0; i < plan.replicas.size(); ++i) {
    rs += fmt::format("{}{}x{}", i ? "," : "", plan.replicas[i], plan.partitions[i]);
  }
  return {bad_pairs == 0 && ratio < 0.1,
          fmt::format("{} pairs outside one rounding unit; R x S = {} at {:.0f} req/s: "
                      "intermediate queue {:.3f} ms vs service {:.3f} ms (ratio {:.3f}, limit "
                      "0.1)",
                      bad_pairs, rs, w.rate, 1e3 * rep.intermediate_queue_delay,
                      1e3 * rep.intermediate_service_time, ratio)};
}

// --- 9 ----------------------------------------------------------------------

Outcome SimulatorCalibration() {
  const std::vector<cs::ModelProfile> one{TestProfile("m0", 1e9, {0.0, 1.0}, {0.0, 0.005})};
  const auto scored = cs::testing::MakeScored({std::vector<double>(100, 1.0)},
                                              {std::vector<bool>(100, true)});
  cs::SimParams sp;
  sp.max_batch = 1;
  sp.max_wait = 0.0;
  cs::Workload w;
  w.rate = 100.0;
  w.duration = 100.0;
  w.seed = 9;
  const auto md1 = cs::Simulate(ManualPlan({"m0"}, {{0}}), cs::SequentialConfig({"m0"}, {}),
                                scored, cs::FitProfiles(one), one, UniformCluster(1, 8e9), w, sp);
  const double busy = md1.gpu_busy_fraction[0];

  // Little's law on a batched two-model cascade.
  const std::vector<cs::ModelProfile> two{
      TestProfile("m0", 1e9, {0.05, 0.1}, {0.0005, 0.002}),
      TestProfile("m1", 4e9, {0.08, 0.3}, {0.004, 0.02})};
  std::vector<std::vector<double>> sc(2, std::vector<double>(1000, 0.9));
  std::vector<std::vector<bool>> cor(2, std::vector<bool>(1000, true));
  for (int r = 0; r < 1000; ++r) sc[0][r] = r % 10 < 7 ? 0.95 : 0.3;
  w.rate = 300.0;
  w.duration = 200.0;
  const auto lit = cs::Simulate(ManualPlan({"m0", "m1"}, {{0}, {1}}),
                                cs::SequentialConfig({"m0", "m1"}, {0.9}),
                                cs::testing::MakeScored(sc, cor), cs::FitProfiles(two), two,
                                UniformCluster(2, 8e9), w);
  const double l = lit.arrival_rate * lit.mean_latency;
  const double little = std::abs(lit.mean_in_system - l) / l;
  const bool conserved = md1.arrived == md1.completed + md1.in_flight &&
                         lit.arrived == lit.completed + lit.in_flight;
  return {std::abs(busy - 0.5) <= 0.02 && little <= 0.05 && conserved,
          fmt::format("M/D/1 busy {:.4f} over {} requests (want 0.5 +- 0.02); Little L={:.3f} vs "
                      "lambda*W={:.3f} ({:.2f}%); conservation {}",
                      busy, md1.arrived, lit.mean_in_system, l, 100 * little,
                      conserved ? "exact" : "broken")};
}

// --- 10 / 11 ----------------------------------------------------------------

struct T5Runs {
  cs::PipelineResult ap, eo;
  cs::RunConfig ap_config;
};

T5Runs& T5() {
  static T5Runs runs = [] {
    T5Runs r;
    auto c = cs::LoadRunConfig(cs::testing::FixtureDir() / "t5" / "run.json");
    c.out = cs::testing::ScratchDir("acceptance_t5_ap");
    r.ap_config = c;
    r.ap = cs::RunPipeline(c);
    c.mode = cs::Mode::kEnergyOptimized;
    c.out = cs::testing::ScratchDir("acceptance_t5_eo");
    r.eo = cs::RunPipeline(c);
    return r;
  }();
  return runs;
}

Outcome EndToEndEnergy() {
  const auto& t = T5();
  const double ap = *t.ap.cascade.joules_per_request;
  const double eo = *t.eo.cascade.joules_per_request;
  const double giant = *t.ap.baseline.joules_per_request;
  const double ratio = giant / ap;
  const double q = t.ap.cascade.intermediate_queue_delay / t.ap.cascade.intermediate_service_time;
  return {ratio >= 2.0 && eo <= ap,
          fmt::format("largest-only {:.3f} J, AP {:.3f} J ({:.2f}x lower, need 2x), EO {:.3f} J "
                      "(<= AP); AP intermediate queue/service {:.2f} at the fixture rate",
                      giant, ap, ratio, eo, q)};
}

Outcome Determinism() {
  const auto& t = T5();
  const auto c = t.ap_config;
  cs::StageReport(c);
  const auto first = Snapshot(c.out);
  cs::RunPipeline(c);
  cs::StageReport(c);
  const auto second = Snapshot(c.out);
  int differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) ++differing;
  }
  if (second.size() != first.size()) ++differing;
  return {differing == 0 && !first.empty(),
          fmt::format("{} artifacts compared across two runs, {} differ", first.size(),
                      differing)};
}

}  // namespace

int main() {
  Run(1, "calibration preserves argmax", 5, ArgmaxInvariance);
  Run(2, "CoLA-like joint accuracy structure", 10, JointAccuracyStructure);
  Run(3, "AP guarantee on every fixture", 60, AccuracyPreservingGuarantee);
  Run(4, "EO above the second-largest model", 300, EnergyOptimizedFloor);
  Run(5, "threshold search vs 101-point grid", 30, SearchVersusGrid);
  Run(6, "skip-plan soundness", 300, SkipPlanSoundness);
  Run(7, "placement optimality and feasibility", 300, PlannerOptimality);
  Run(8, "replication proportionality and queueing", 300, ReplicationProportionality);
  Run(9, "simulator calibration", 300, SimulatorCalibration);
  Run(10, "end-to-end energy on the T5-like fixture", 600, EndToEndEnergy);
  Run(11, "byte-identical reruns", 600, Determinism);
  fmt::print("{} of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
