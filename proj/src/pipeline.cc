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

#include "cascadesim/pipeline.h"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cascadesim/error.h"

namespace cascadesim {

namespace fs = std::filesystem;
using nlohmann::json;

LogLevel CurrentLogLevel() {
  const char* env = std::getenv("CASCADESIM_LOG");
  if (env == nullptr) return LogLevel::kWarn;
  const std::string_view v(env);
  if (v == "error") return LogLevel::kError;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

void Log(LogLevel level, std::string_view message) {
  if (level > CurrentLogLevel()) return;
  static constexpr std::string_view kNames[] = {"error", "warn", "info", "debug"};
  fmt::print(stderr, "[{}] {}\n", kNames[static_cast<int>(level)], message);
}

// --- config -----------------------------------------------------------------

namespace {

std::optional<fs::path> OptPath(const json& paths, const char* key, const fs::path& base) {
  if (!paths.contains(key) || paths.at(key).is_null()) return std::nullopt;
  fs::path p = paths.at(key).get<std::string>();
  if (p.empty()) return std::nullopt;
  return p.is_relative() && !base.empty() ? base / p : p;
}

json PathString(const std::optional<fs::path>& p) {
  return p ? json(p->generic_string()) : json(nullptr);
}

}  // namespace

RunConfig RunConfigFromJson(const json& j, const fs::path& base) {
  Require(j.value("schema_version", -1) == kSchemaVersion, ErrorCode::kParse,
          "run config: unsupported schema_version");
  try {
    RunConfig c;
    const json paths = j.value("paths", json::object());
    c.joint_spec = OptPath(paths, "joint_spec", base);
    c.trace = OptPath(paths, "trace", base);
    c.profiles = OptPath(paths, "profiles", base);
    c.cluster = OptPath(paths, "cluster", base);
    c.calibration = OptPath(paths, "calibration", base);
    c.skip_plan = OptPath(paths, "skip_plan", base);
    c.plan = OptPath(paths, "plan", base);
    if (auto out = OptPath(paths, "out", base)) c.out = *out;
    c.mode = ParseMode(j.value("mode", std::string("AP")));
    c.seed = j.value("seed", std::uint64_t{1});
    c.records = j.value("records", 10000);
    c.hop_overhead = j.value("hop_overhead", 1e-3);

    const json s = j.value("search", json::object());
    c.search.samples_per_round = s.value("samples_per_round", c.search.samples_per_round);
    c.search.epsilon = s.value("epsilon", c.search.epsilon);
    c.search.accuracy_cell = s.value("accuracy_cell", c.search.accuracy_cell);
    c.search.energy_cell_fraction = s.value("energy_cell_fraction", c.search.energy_cell_fraction);
    c.search.max_rounds = s.value("max_rounds", c.search.max_rounds);

    const json p = j.value("planner", json::object());
    c.planner.batch = p.value("batch", c.planner.batch);
    c.planner.intra_discount = p.value("intra_discount", c.planner.intra_discount);
    const std::string sense = p.value("objective", std::string("min"));
    Require(sense == "min" || sense == "max", ErrorCode::kParse, "planner objective is min or max");
    c.planner.sense = sense == "min" ? ObjectiveSense::kMinimize : ObjectiveSense::kMaximize;
    const std::string rs = p.value("replica_search", std::string("proportional"));
    Require(rs == "proportional" || rs == "exhaustive", ErrorCode::kParse,
            "replica_search is proportional or exhaustive");
    c.planner.replica_search =
        rs == "proportional" ? ReplicaSearch::kProportional : ReplicaSearch::kExhaustive;
    c.planner.scale_steps = p.value("scale_steps", c.planner.scale_steps);
    c.planner.max_replicas = p.value("max_replicas", c.planner.max_replicas);
    c.planner.max_partitions = p.value("max_partitions", c.planner.max_partitions);

    const json sim = j.value("simulator", json::object());
    c.sim.max_batch = sim.value("max_batch", c.sim.max_batch);
    c.sim.max_wait = sim.value("max_wait", c.sim.max_wait);
    c.sim.router_overhead = sim.value("router_overhead", c.hop_overhead);
    c.sim.meter_period = sim.value("meter_period", c.sim.meter_period);
    if (sim.contains("load")) c.load = sim.at("load").get<double>();
    json w = sim.value("workload", json::object());
    if (!w.contains("rate")) w["rate"] = 1.0;
    if (!w.contains("duration")) w["duration"] = 60.0;
    if (!w.contains("seed")) w["seed"] = c.seed;
    c.workload = WorkloadFromJson(w);
    if (c.load) {
      Require(*c.load > 0, ErrorCode::kInvalidArgument, "simulator load must be > 0");
    }
    return c;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed run config: {}", e.what()));
  }
}

json RunConfigToJson(const RunConfig& c) {
  json sim{{"max_batch", c.sim.max_batch},
           {"max_wait", c.sim.max_wait},
           {"router_overhead", c.sim.router_overhead},
           {"meter_period", c.sim.meter_period},
           {"workload", WorkloadToJson(c.workload)}};
  if (c.load) sim["load"] = *c.load;
  return json{
      {"schema_version", kSchemaVersion},
      {"kind", "run_config"},
      {"paths",
       {{"joint_spec", PathString(c.joint_spec)},
        {"trace", PathString(c.trace)},
        {"profiles", PathString(c.profiles)},
        {"cluster", PathString(c.cluster)},
        {"calibration", PathString(c.calibration)},
        {"skip_plan", PathString(c.skip_plan)},
        {"plan", PathString(c.plan)},
        {"out", c.out.generic_string()}}},
      {"mode", ModeName(c.mode)},
      {"seed", c.seed},
      {"records", c.records},
      {"hop_overhead", c.hop_overhead},
      {"search",
       {{"samples_per_round", c.search.samples_per_round},
        {"epsilon", c.search.epsilon},
        {"accuracy_cell", c.search.accuracy_cell},
        {"energy_cell_fraction", c.search.energy_cell_fraction},
        {"max_rounds", c.search.max_rounds}}},
      {"planner",
       {{"batch", c.planner.batch},
        {"intra_discount", c.planner.intra_discount},
        {"objective", c.planner.sense == ObjectiveSense::kMinimize ? "min" : "max"},
        {"replica_search",
         c.planner.replica_search == ReplicaSearch::kProportional ? "proportional" : "exhaustive"},
        {"scale_steps", c.planner.scale_steps},
        {"max_replicas", c.planner.max_replicas},
        {"max_partitions", c.planner.max_partitions}}},
      {"simulator", sim}};
}

RunConfig LoadRunConfig(const fs::path& path) {
  return RunConfigFromJson(ReadJsonFile(path), path.parent_path());
}

// --- hashing and manifests --------------------------------------------------

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  Require(EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) == 1,
          ErrorCode::kInvariant, "SHA-256 digest failed");
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

namespace {

std::string ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kMissingInput, fmt::format("cannot read '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kMissingInput, fmt::format("cannot write '{}'", path.string()));
  out << text;
}

void WriteManifest(const fs::path& artifact, std::string_view subcommand, const RunConfig& c,
                   const std::vector<fs::path>& inputs) {
  json in = json::array();
  for (const auto& p : inputs) {
    in.push_back({{"path", p.generic_string()}, {"sha256", FileSha256(p)}});
  }
  const json manifest{{"schema_version", kSchemaVersion},
                      {"kind", "manifest"},
                      {"artifact", artifact.filename().generic_string()},
                      {"artifact_sha256", FileSha256(artifact)},
                      {"subcommand", subcommand},
                      {"tool_version", kToolVersion},
                      {"seed", c.seed},
                      {"mode", ModeName(c.mode)},
                      {"inputs", in},
                      {"config", RunConfigToJson(c)}};
  WriteJsonFile(manifest, fs::path(artifact.string() + ".manifest.json"));
}

void RequireFile(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) {
    Fail(ErrorCode::kMissingInput, fmt::format("{} not found at '{}'", what, p.string()));
  }
}

}  // namespace

std::string FileSha256(const fs::path& path) { return Sha256Hex(ReadBytes(path)); }

StagePaths ResolvePaths(const RunConfig& c) {
  StagePaths p;
  const auto pick = [&](const std::optional<fs::path>& given, const char* name) {
    return given ? *given : c.out / name;
  };
  p.joint_spec = pick(c.joint_spec, "joint_spec.json");
  p.trace = pick(c.trace, "trace.json");
  p.profiles = pick(c.profiles, "profiles.json");
  p.cluster = pick(c.cluster, "cluster.json");
  p.calibration = pick(c.calibration, "calibration.json");
  p.skip_plan = pick(c.skip_plan, "skip_plan.json");
  p.plan = pick(c.plan, "plan.json");
  p.graph_csv = c.out / "graph.csv";
  p.selection = c.out / "selection.json";
  p.sim_report = c.out / "sim_report.json";
  p.utilization_csv = c.out / "utilization.csv";
  p.latency_csv = c.out / "latency_histogram.csv";
  p.frontier_csv = c.out / "frontier.csv";
  p.latency_cdf_csv = c.out / "latency_cdf.csv";
  p.baseline_plan = c.out / "baseline_plan.json";
  p.baseline_report = c.out / "baseline_report.json";
  p.comparison_csv = c.out / "comparison.csv";
  p.comparison_json = c.out / "comparison.json";
  return p;
}

// --- stages -----------------------------------------------------------------

void StageGenTrace(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  RequireFile(p.joint_spec, "joint accuracy spec");
  const JointAccuracySpec spec = LoadJointSpec(p.joint_spec);
  const fs::path out = c.out / "trace.json";
  SaveTrace(GenerateSyntheticTrace(spec, c.records, c.seed), out);
  WriteManifest(out, "gen-trace", c, {p.joint_spec});
  Log(LogLevel::kInfo, fmt::format("wrote {} records to {}", c.records, out.string()));
}

void StageCalibrate(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  RequireFile(p.trace, "trace");
  const TraceBundle trace = LoadTrace(p.trace);
  const Calibration calib = CalibrateTrace(trace);
  const fs::path out = c.out / "calibration.json";
  SaveCalibration(calib, out);
  WriteManifest(out, "calibrate", c, {p.trace});
  for (const auto& [id, fit] : calib.fits) {
    if (fit.degenerate) Log(LogLevel::kWarn, fmt::format("flat calibration loss for '{}'", id));
  }
}

namespace {

struct Loaded {
  TraceBundle trace;
  Calibration calib;
  std::vector<ModelProfile> profiles;
  ScoredTrace scored;
};

Loaded LoadScored(const StagePaths& p) {
  RequireFile(p.trace, "trace");
  RequireFile(p.calibration, "calibration");
  RequireFile(p.profiles, "profiles");
  Loaded l;
  l.trace = LoadTrace(p.trace);
  l.calib = LoadCalibration(p.calibration);
  l.profiles = LoadProfiles(p.profiles);
  l.scored = ScoreTrace(l.trace, l.calib);
  return l;
}

SearchParams SeededSearch(const RunConfig& c) {
  SearchParams s = c.search;
  s.seed = c.seed;
  return s;
}

DataflowStats FlowFor(const CascadeConfig& config, const ScoredTrace& scored,
                      const CascadeCosts& costs) {
  const CascadeMetrics m = Evaluate(scored.Select(config.models), config, costs);
  return {config.models, m.reach, m.flows};
}

double RateFor(const RunConfig& c, const Plan& plan, const std::vector<double>& reach,
               const ProfileMap& maps) {
  if (!c.load) return c.workload.rate;
  return *c.load * PlanCapacity(plan, reach, maps, c.sim.max_batch);
}

}  // namespace

PerfGraph StageSearch(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  const Loaded l = LoadScored(p);
  const CascadeCosts costs = CostsFor(l.trace.model_ids, l.profiles, c.hop_overhead);
  const PerfGraph graph = SearchThresholds(l.scored, costs, SeededSearch(c));
  const int n = l.scored.num_models();
  const Selection sel =
      c.mode == Mode::kAccuracyPreserving
          ? SelectAccuracyPreserving(graph, l.scored.StandaloneAccuracy(n - 1))
          : SelectEnergyOptimized(graph, l.scored.StandaloneAccuracy(n - 2),
                                  l.scored.StandaloneAccuracy(n - 1));
  if (sel.warning) Log(LogLevel::kWarn, "operating point selection fell back");

  std::ostringstream csv;
  WriteGraphCsv(graph, csv);
  WriteText(p.graph_csv, csv.str());
  WriteManifest(p.graph_csv, "search", c, {p.trace, p.calibration, p.profiles});
  json s = SelectionToJson(sel);
  s["schema_version"] = kSchemaVersion;
  s["kind"] = "selection";
  s["mode"] = ModeName(c.mode);
  s["models"] = l.trace.model_ids;
  WriteJsonFile(s, p.selection);
  WriteManifest(p.selection, "search", c, {p.trace, p.calibration, p.profiles});
  return graph;
}

SkipPlan StageSkip(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  const Loaded l = LoadScored(p);
  const CascadeCosts costs = CostsFor(l.trace.model_ids, l.profiles, c.hop_overhead);
  const SkipPlan plan = PruneAndRewire(l.scored, costs, {SeededSearch(c), c.mode});
  for (double b : plan.benefits) {
    Require(b > 0, ErrorCode::kInvariant, "retained model with non-positive energy benefit");
  }
  const fs::path out = c.out / "skip_plan.json";
  SaveSkipPlan(plan, out);
  WriteManifest(out, "skip", c, {p.trace, p.calibration, p.profiles});
  for (const auto& id : plan.removed) Log(LogLevel::kInfo, fmt::format("pruned '{}'", id));
  return plan;
}

Plan StagePlan(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  RequireFile(p.skip_plan, "skip plan");
  RequireFile(p.cluster, "cluster");
  const Loaded l = LoadScored(p);
  const SkipPlan skip = LoadSkipPlan(p.skip_plan);
  const ClusterSpec cluster = LoadCluster(p.cluster);
  const CascadeCosts costs = CostsFor(skip.config.models, l.profiles, c.hop_overhead);
  const DataflowStats flow = FlowFor(skip.config, l.scored, costs);
  const ProfileMap maps = FitProfiles(l.profiles);
  const Plan plan = PlanSearch(flow, maps, l.profiles, cluster, c.planner);
  Require(plan.feasibility.feasible, ErrorCode::kInvariant, "planner returned a violating plan");
  const fs::path out = c.out / "plan.json";
  SavePlan(plan, cluster, out);
  WriteManifest(out, "plan", c, {p.trace, p.calibration, p.profiles, p.skip_plan, p.cluster});
  return plan;
}

namespace {

void CheckConservation(const SimReport& r) {
  Require(r.arrived == r.completed + r.in_flight, ErrorCode::kInvariant,
          "arrivals != completions + in-flight");
}

void WriteSimArtifacts(const RunConfig& c, const SimReport& r, const ClusterSpec& cluster,
                       const fs::path& report_path, const std::vector<fs::path>& inputs,
                       bool series) {
  WriteJsonFile(SimReportToJson(r), report_path);
  WriteManifest(report_path, "simulate", c, inputs);
  if (!series) return;
  const StagePaths p = ResolvePaths(c);
  std::ostringstream util, lat;
  WriteUtilizationCsv(r, cluster, util);
  WriteLatencyHistogramCsv(r, lat);
  WriteText(p.utilization_csv, util.str());
  WriteManifest(p.utilization_csv, "simulate", c, inputs);
  WriteText(p.latency_csv, lat.str());
  WriteManifest(p.latency_csv, "simulate", c, inputs);
}

}  // namespace

SimReport StageSimulate(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  RequireFile(p.plan, "plan");
  RequireFile(p.skip_plan, "skip plan");
  RequireFile(p.cluster, "cluster");
  const Loaded l = LoadScored(p);
  const SkipPlan skip = LoadSkipPlan(p.skip_plan);
  const Plan plan = LoadPlan(p.plan);
  const ClusterSpec cluster = LoadCluster(p.cluster);
  const ProfileMap maps = FitProfiles(l.profiles);
  const CascadeCosts costs = CostsFor(skip.config.models, l.profiles, c.hop_overhead);
  Workload w = c.workload;
  w.rate = RateFor(c, plan, FlowFor(skip.config, l.scored, costs).reach, maps);
  const SimReport r = Simulate(plan, skip.config, l.scored, maps, l.profiles, cluster, w, c.sim);
  CheckConservation(r);
  WriteSimArtifacts(c, r, cluster, p.sim_report,
                    {p.trace, p.calibration, p.profiles, p.skip_plan, p.plan, p.cluster}, true);
  return r;
}

namespace {

std::vector<std::vector<std::string>> ReadCsv(const fs::path& path) {
  RequireFile(path, "CSV input");
  std::istringstream in(ReadBytes(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  Require(!rows.empty(), ErrorCode::kParse, fmt::format("'{}' is empty", path.string()));
  return rows;
}

}  // namespace

void StageReport(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  const auto graph = ReadCsv(p.graph_csv);
  const std::size_t cols = graph.front().size();
  Require(cols >= 3, ErrorCode::kParse, "graph CSV has too few columns");
  std::vector<std::pair<double, double>> frontier;
  for (std::size_t k = 1; k < graph.size(); ++k) {
    Require(graph[k].size() == cols, ErrorCode::kParse, "ragged graph CSV");
    if (graph[k][cols - 1] != "1") continue;
    frontier.emplace_back(std::stod(graph[k][cols - 3]), std::stod(graph[k][cols - 2]));
  }
  std::sort(frontier.begin(), frontier.end());
  std::string text = "accuracy,energy\n";
  for (const auto& [a, e] : frontier) text += fmt::format("{:.17g},{:.17g}\n", a, e);
  WriteText(p.frontier_csv, text);
  WriteManifest(p.frontier_csv, "report", c, {p.graph_csv});

  const auto hist = ReadCsv(p.latency_csv);
  long long total = 0;
  for (std::size_t k = 1; k < hist.size(); ++k) total += std::stoll(hist[k].at(2));
  text = "latency_ms,cdf\n";
  long long running = 0;
  for (std::size_t k = 1; k < hist.size(); ++k) {
    running += std::stoll(hist[k].at(2));
    text += fmt::format("{},{:.17g}\n", hist[k].at(1),
                        total > 0 ? static_cast<double>(running) / total : 0.0);
  }
  WriteText(p.latency_cdf_csv, text);
  WriteManifest(p.latency_cdf_csv, "report", c, {p.latency_csv});
}

PipelineResult RunPipeline(const RunConfig& c) {
  const StagePaths p = ResolvePaths(c);
  RunConfig staged = c;
  if (!c.trace) {
    StageGenTrace(c);
    staged.trace = c.out / "trace.json";
  }
  if (!c.calibration) {
    StageCalibrate(staged);
    staged.calibration = c.out / "calibration.json";
  }
  StageSearch(staged);
  PipelineResult result;
  result.skip = StageSkip(staged);
  staged.skip_plan = c.out / "skip_plan.json";
  result.plan = StagePlan(staged);
  staged.plan = c.out / "plan.json";
  result.cascade = StageSimulate(staged);
  StageReport(staged);

  // Largest model alone, same cluster and arrival stream.
  const StagePaths sp = ResolvePaths(staged);
  const Loaded l = LoadScored(sp);
  const ClusterSpec cluster = LoadCluster(sp.cluster);
  const ProfileMap maps = FitProfiles(l.profiles);
  const std::string giant = l.trace.model_ids.back();
  const CascadeConfig solo = SequentialConfig({giant}, {});
  const DataflowStats flow{{giant}, {1.0}, {0.0}};
  result.baseline_plan = PlanSearch(flow, maps, l.profiles, cluster, c.planner);
  SavePlan(result.baseline_plan, cluster, p.baseline_plan);
  WriteManifest(p.baseline_plan, "pipeline", c, {sp.profiles, sp.cluster});

  const CascadeCosts costs = CostsFor(result.skip.config.models, l.profiles, c.hop_overhead);
  Workload w = c.workload;
  w.rate = RateFor(c, result.plan, FlowFor(result.skip.config, l.scored, costs).reach, maps);
  result.baseline = Simulate(result.baseline_plan, solo, l.scored, maps, l.profiles, cluster, w,
                             c.sim);
  CheckConservation(result.baseline);
  WriteSimArtifacts(c, result.baseline, cluster, p.baseline_report,
                    {sp.trace, sp.calibration, sp.profiles, p.baseline_plan, sp.cluster}, false);

  result.comparison = ComparePlans({"cascade", "largest_only"}, {result.cascade, result.baseline});
  std::ostringstream csv;
  WriteComparisonCsv(result.comparison, csv);
  WriteText(p.comparison_csv, csv.str());
  WriteManifest(p.comparison_csv, "pipeline", c, {p.sim_report, p.baseline_report});
  WriteJsonFile(ComparisonToJson(result.comparison), p.comparison_json);
  WriteManifest(p.comparison_json, "pipeline", c, {p.sim_report, p.baseline_report});
  return result;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingInput: return 2;
    case ErrorCode::kInfeasible: return 3;
    case ErrorCode::kInvariant: return 4;
    default: return 1;
  }
}

}  // namespace cascadesim
