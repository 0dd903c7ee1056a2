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

#include "cascadesim/planner.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "cascadesim/error.h"

namespace cascadesim {

using nlohmann::json;

// --- profiles ---------------------------------------------------------------

AffineFit FitAffine(std::span<const double> x, std::span<const double> y) {
  Require(x.size() == y.size(), ErrorCode::kInvalidArgument, "x and y differ in length");
  std::set<double> distinct(x.begin(), x.end());
  Require(distinct.size() >= 2, ErrorCode::kInvalidArgument,
          "affine fit needs at least two distinct batch sizes");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  AffineFit fit;
  fit.coeffs.slope = sxy / sxx;
  fit.coeffs.intercept = my - fit.coeffs.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.coeffs(x[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

const ModelMaps& ProfileMap::At(const std::string& model_id) const {
  auto it = maps_.find(model_id);
  if (it == maps_.end()) {
    Fail(ErrorCode::kMissingModel, fmt::format("no batch profile for model '{}'", model_id));
  }
  return it->second;
}

double ProfileMap::Utilization(const std::string& id, double b) const {
  return std::clamp(At(id).utilization(b), 0.0, 1.0);
}
double ProfileMap::Transmission(const std::string& id, double b) const {
  return std::max(0.0, At(id).transmission(b));
}
double ProfileMap::Memory(const std::string& id, double b) const {
  return std::max(0.0, At(id).memory(b));
}
double ProfileMap::Latency(const std::string& id, double b) const {
  return std::max(0.0, At(id).latency(b));
}

ModelMaps FitModelMaps(const std::vector<ProfileSample>& samples) {
  std::vector<double> b, u, t, w, l;
  for (const auto& s : samples) {
    b.push_back(s.batch);
    u.push_back(s.utilization);
    t.push_back(s.transmission);
    w.push_back(s.memory);
    l.push_back(s.latency);
  }
  ModelMaps m;
  const auto fit = [&](const std::vector<double>& y, LinearCoeffs& out, double& rms) {
    AffineFit f = FitAffine(b, y);
    if (f.coeffs.slope < 0) {
      f.coeffs = {0.0, std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size())};
      m.flattened = true;
    }
    out = f.coeffs;
    rms = f.residual_rms;
  };
  fit(u, m.utilization, m.utilization_rms);
  fit(t, m.transmission, m.transmission_rms);
  fit(w, m.memory, m.memory_rms);
  fit(l, m.latency, m.latency_rms);
  const double b_max = *std::max_element(b.begin(), b.end());
  const double b_min = *std::min_element(b.begin(), b.end());
  m.utilization_clamped = std::max(m.utilization(b_max), m.utilization(b_min)) > 1.0;
  return m;
}

ProfileMap FitProfiles(const std::vector<ModelProfile>& profiles) {
  ProfileMap map;
  for (const auto& p : profiles) {
    if (!p.samples.empty()) {
      map.Set(p.model_id, FitModelMaps(p.samples));
      continue;
    }
    ModelMaps m;
    m.utilization = p.utilization;
    m.transmission = p.transmission;
    m.memory = {0.0, p.memory_bytes};
    m.latency = p.latency.value_or(LinearCoeffs{0.0, p.service_latency});
    map.Set(p.model_id, m);
  }
  return map;
}

// --- replication ------------------------------------------------------------

std::vector<int> SizeReplication(const std::vector<double>& reach,
                                 const std::vector<double>& latency,
                                 const std::vector<int>& partitions,
                                 const std::vector<double>& model_memory, double cluster_memory,
                                 double scale_multiplier) {
  const std::size_t n = reach.size();
  Require(latency.size() == n && partitions.size() == n && model_memory.size() == n,
          ErrorCode::kInvalidArgument, "replication inputs must align");
  Require(scale_multiplier > 0, ErrorCode::kInvalidArgument, "scale multiplier must be > 0");
  std::vector<double> target(n);
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = reach[i] * latency[i];
    Require(target[i] >= 0 && std::isfinite(target[i]), ErrorCode::kInvalidArgument,
            "reach * latency must be finite and nonnegative");
    Require(partitions[i] >= 1, ErrorCode::kInvalidArgument, "partitions must be >= 1");
    if (target[i] > 0) smallest = std::min(smallest, target[i]);
  }
  double scale = std::isfinite(smallest) ? scale_multiplier / smallest : 0.0;
  std::vector<int> replicas(n, 1);
  while (true) {
    double used = 0.0;
    bool all_ones = true;
    for (std::size_t i = 0; i < n; ++i) {
      replicas[i] = std::max(1, static_cast<int>(std::lround(target[i] * scale / partitions[i])));
      all_ones = all_ones && replicas[i] == 1;
      used += replicas[i] * model_memory[i];
    }
    if (used <= cluster_memory) return replicas;
    if (all_ones) {
      Fail(ErrorCode::kInfeasible,
           fmt::format("one replica per model needs {} bytes, cluster has {}", used, cluster_memory));
    }
    scale *= 0.9;
  }
}

// --- nodes and problem ------------------------------------------------------

std::vector<PlacementNode> BuildNodes(const DataflowStats& flow, const ProfileMap& maps,
                                      const std::vector<ModelProfile>& profiles,
                                      const std::vector<int>& replicas,
                                      const std::vector<int>& partitions, double batch) {
  const int n = static_cast<int>(flow.models.size());
  Require(static_cast<int>(flow.reach.size()) == n &&
              flow.flows.size() == static_cast<std::size_t>(n * n) &&
              static_cast<int>(replicas.size()) == n && static_cast<int>(partitions.size()) == n,
          ErrorCode::kInvalidArgument, "dataflow, replicas and partitions must align");
  std::vector<PlacementNode> nodes;
  // first[i]: id of model i's replica 0, partition 0; ids are dense per model.
  std::vector<int> first(n);
  for (int i = 0; i < n; ++i) {
    Require(replicas[i] >= 1 && partitions[i] >= 1, ErrorCode::kInvalidArgument,
            "replicas and partitions must be >= 1");
    first[i] = static_cast<int>(nodes.size());
    const auto& id = flow.models[i];
    const double local_batch = flow.reach[i] * batch;
    for (int r = 0; r < replicas[i]; ++r) {
      for (int s = 0; s < partitions[i]; ++s) {
        PlacementNode node;
        node.id = static_cast<int>(nodes.size());
        node.model = i;
        node.model_id = id;
        node.replica = r;
        node.partition = s;
        node.memory = maps.Memory(id, local_batch) / partitions[i];
        node.utilization = maps.Utilization(id, local_batch) / replicas[i];
        nodes.push_back(std::move(node));
      }
    }
  }
  const auto node_id = [&](int model, int r, int s) {
    return first[model] + r * partitions[model] + s;
  };
  for (int i = 0; i < n; ++i) {
    const auto& p = FindProfile(profiles, flow.models[i]);
    const double chain_bytes = flow.reach[i] * batch * p.HiddenBytes() / replicas[i];
    for (int r = 0; r < replicas[i]; ++r) {
      for (int s = 0; s + 1 < partitions[i]; ++s) {
        if (chain_bytes > 0) nodes[node_id(i, r, s)].edges.push_back({node_id(i, r, s + 1), chain_bytes});
      }
    }
    for (int j = 0; j < n; ++j) {
      const double f = flow.flows[static_cast<std::size_t>(i * n + j)];
      if (f <= 0) continue;
      const double bytes = f * batch * p.output_bytes / (replicas[i] * replicas[j]);
      if (bytes <= 0) continue;
      for (int r = 0; r < replicas[i]; ++r) {
        for (int q = 0; q < replicas[j]; ++q) {
          nodes[node_id(i, r, partitions[i] - 1)].edges.push_back({node_id(j, q, 0), bytes});
        }
      }
    }
  }
  return nodes;
}

int PlacementProblem::num_edges() const {
  int e = 0;
  for (const auto& node : nodes) e += static_cast<int>(node.edges.size());
  return e;
}

double PlacementProblem::EdgeCost(double bytes, int g, int h) const {
  const double base = bytes * cluster.Cost(g, h);
  return g == h ? base * intra_discount : base;
}

double PlacementProblem::Objective(const std::vector<int>& assignment) const {
  double total = 0.0;
  for (const auto& node : nodes) {
    for (const auto& e : node.edges) {
      total += EdgeCost(e.bytes, assignment[node.id], assignment[e.to]);
    }
  }
  return total;
}

LinearizedProgram PlacementProblem::Linearize() const {
  const int g = num_gpus();
  LinearizedProgram lp;
  lp.sense = sense;
  lp.num_x = static_cast<int>(nodes.size()) * g;
  lp.num_y = num_edges() * g * g;
  lp.objective.assign(static_cast<std::size_t>(lp.num_x + lp.num_y), 0.0);
  const auto x = [g](int node, int gpu) { return node * g + gpu; };
  for (const auto& node : nodes) {
    LinearRow row;
    row.equality = true;
    row.rhs = 1.0;
    for (int k = 0; k < g; ++k) row.terms.push_back({x(node.id, k), 1.0});
    lp.rows.push_back(std::move(row));
  }
  for (int k = 0; k < g; ++k) {
    LinearRow mem, util;
    mem.rhs = cluster.gpus[k].memory_bytes;
    util.rhs = 1.0;
    for (const auto& node : nodes) {
      mem.terms.push_back({x(node.id, k), node.memory});
      util.terms.push_back({x(node.id, k), node.utilization});
    }
    lp.rows.push_back(std::move(mem));
    lp.rows.push_back(std::move(util));
  }
  int y = lp.num_x;
  for (const auto& node : nodes) {
    for (const auto& e : node.edges) {
      for (int a = 0; a < g; ++a) {
        for (int b = 0; b < g; ++b, ++y) {
          lp.objective[y] = EdgeCost(e.bytes, a, b);
          lp.rows.push_back({{{y, 1.0}, {x(node.id, a), -1.0}}, false, 0.0});
          lp.rows.push_back({{{y, 1.0}, {x(e.to, b), -1.0}}, false, 0.0});
          lp.rows.push_back({{{x(node.id, a), 1.0}, {x(e.to, b), 1.0}, {y, -1.0}}, false, 1.0});
        }
      }
    }
  }
  return lp;
}

std::vector<int> PlacementProblem::Lift(const std::vector<int>& assignment) const {
  const int g = num_gpus();
  std::vector<int> v(static_cast<std::size_t>(nodes.size() * g + num_edges() * g * g), 0);
  for (const auto& node : nodes) v[node.id * g + assignment[node.id]] = 1;
  std::size_t y = nodes.size() * g;
  for (const auto& node : nodes) {
    for (const auto& e : node.edges) {
      for (int a = 0; a < g; ++a) {
        for (int b = 0; b < g; ++b, ++y) {
          v[y] = assignment[node.id] == a && assignment[e.to] == b ? 1 : 0;
        }
      }
    }
  }
  return v;
}

bool LinearizedProgram::Satisfies(const std::vector<int>& values) const {
  if (values.size() != objective.size()) return false;
  for (int v : values) {
    if (v != 0 && v != 1) return false;
  }
  for (const auto& row : rows) {
    double lhs = 0.0;
    for (const auto& [var, coeff] : row.terms) lhs += coeff * values[var];
    const double tol = 1e-9 * std::max(1.0, std::abs(row.rhs));
    if (row.equality ? std::abs(lhs - row.rhs) > tol : lhs > row.rhs + tol) return false;
  }
  return true;
}

double LinearizedProgram::Evaluate(const std::vector<int>& values) const {
  double total = 0.0;
  for (std::size_t k = 0; k < objective.size(); ++k) total += objective[k] * values[k];
  return total;
}

PlacementProblem BuildProblem(std::vector<PlacementNode> nodes, const ClusterSpec& cluster,
                              const ProblemOptions& options) {
  ValidateCluster(cluster);
  Require(options.intra_discount >= 0 && options.intra_discount <= 1, ErrorCode::kInvalidArgument,
          "intra-GPU discount must lie in [0, 1]");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    Require(nodes[k].id == static_cast<int>(k), ErrorCode::kInvalidArgument,
            "node ids must be dense and ordered");
    bool fits = false;
    for (const auto& gpu : cluster.gpus) {
      fits = fits || (nodes[k].memory <= gpu.memory_bytes && nodes[k].utilization <= 1.0);
    }
    if (!fits) {
      Fail(ErrorCode::kInfeasible,
           fmt::format("node {} ({} replica {} partition {}) fits on no GPU", k,
                       nodes[k].model_id, nodes[k].replica, nodes[k].partition));
    }
  }
  PlacementProblem p;
  p.nodes = std::move(nodes);
  p.cluster = cluster;
  p.intra_discount = options.intra_discount;
  p.sense = options.sense;
  return p;
}

FeasibilityReport CheckAssignment(const PlacementProblem& problem,
                                  const std::vector<int>& assignment) {
  FeasibilityReport report;
  const auto violate = [&](std::string what) {
    report.feasible = false;
    report.violations.push_back(std::move(what));
  };
  const int g = problem.num_gpus();
  if (assignment.size() != problem.nodes.size()) {
    violate("assignment does not cover every node exactly once");
    return report;
  }
  std::vector<double> mem(static_cast<std::size_t>(g), 0.0), util(static_cast<std::size_t>(g), 0.0);
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    const int gpu = assignment[k];
    if (gpu < 0 || gpu >= g) {
      violate(fmt::format("node {} assigned to unknown GPU {}", k, gpu));
      continue;
    }
    mem[gpu] += problem.nodes[k].memory;
    util[gpu] += problem.nodes[k].utilization;
  }
  for (int k = 0; k < g; ++k) {
    const double cap = problem.cluster.gpus[k].memory_bytes;
    if (mem[k] > cap * (1 + 1e-12)) {
      violate(fmt::format("GPU {} memory {} exceeds {}", k, mem[k], cap));
    }
    if (util[k] > 1.0 + 1e-9) violate(fmt::format("GPU {} utilization {} exceeds 1", k, util[k]));
  }
  return report;
}

// --- plan -------------------------------------------------------------------

int Plan::GpuOf(int model, int replica, int partition) const {
  for (const auto& p : placements) {
    if (p.model == model && p.replica == replica && p.partition == partition) return p.gpu;
  }
  Fail(ErrorCode::kInvariant,
       fmt::format("no placement for model {} replica {} partition {}", model, replica, partition));
}

Plan MakePlan(const PlacementProblem& problem, const SolveResult& result,
              const std::vector<std::string>& models, const std::vector<int>& replicas,
              const std::vector<int>& partitions, double batch) {
  Plan plan;
  plan.models = models;
  plan.replicas = replicas;
  plan.partitions = partitions;
  plan.batch = batch;
  plan.objective = result.objective;
  plan.sense = problem.sense;
  plan.proven_optimal = result.proven_optimal;
  plan.gap = result.gap;
  plan.feasibility = CheckAssignment(problem, result.assignment);
  for (const auto& node : problem.nodes) {
    plan.placements.push_back({node.model, node.model_id, node.replica, node.partition,
                               result.assignment[node.id], node.memory, node.utilization});
  }
  return plan;
}

namespace {

// Calls `visit` on every vector v with lo[i] <= v[i] <= hi[i].
void ForEachBox(const std::vector<int>& lo, const std::vector<int>& hi,
                const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> v = lo;
  while (true) {
    visit(v);
    std::size_t k = 0;
    while (k < v.size() && v[k] == hi[k]) {
      v[k] = lo[k];
      ++k;
    }
    if (k == v.size()) return;
    ++v[k];
  }
}

bool Better(const Plan& a, const Plan& b, ObjectiveSense sense) {
  const double tol = 1e-12 * std::max({1.0, std::abs(a.objective), std::abs(b.objective)});
  if (std::abs(a.objective - b.objective) > tol) {
    return sense == ObjectiveSense::kMinimize ? a.objective < b.objective
                                              : a.objective > b.objective;
  }
  // Equal cost: prefer more serving capacity.
  int cap_a = 0, cap_b = 0;
  for (std::size_t i = 0; i < a.replicas.size(); ++i) {
    cap_a += a.replicas[i] * a.partitions[i];
    cap_b += b.replicas[i] * b.partitions[i];
  }
  return cap_a > cap_b;
}

}  // namespace

Plan PlanSearch(const DataflowStats& flow, const ProfileMap& maps,
                const std::vector<ModelProfile>& profiles, const ClusterSpec& cluster,
                const PlanParams& params) {
  ValidateCluster(cluster);
  const int n = static_cast<int>(flow.models.size());
  const int g = cluster.size();
  Require(n >= 1, ErrorCode::kInvalidArgument, "nothing to place");
  Require(params.batch > 0, ErrorCode::kInvalidArgument, "batch size must be > 0");

  double largest_gpu = 0.0;
  for (const auto& gpu : cluster.gpus) largest_gpu = std::max(largest_gpu, gpu.memory_bytes);
  const int max_s = params.max_partitions > 0 ? std::min(params.max_partitions, g) : g;

  std::vector<double> memory(n), latency(n);
  std::vector<int> s_min(n), s_max(n, max_s);
  for (int i = 0; i < n; ++i) {
    const double local = flow.reach[i] * params.batch;
    memory[i] = maps.Memory(flow.models[i], local);
    latency[i] = maps.Latency(flow.models[i], std::max(1.0, local));
    s_min[i] = std::max(1, static_cast<int>(std::ceil(memory[i] / largest_gpu - 1e-12)));
    if (s_min[i] > max_s) {
      Fail(ErrorCode::kInfeasible,
           fmt::format("model '{}' needs {} partitions, at most {} allowed", flow.models[i],
                       s_min[i], max_s));
    }
  }

  std::vector<std::vector<int>> partition_sets;
  double box = 1.0;
  for (int i = 0; i < n; ++i) box *= s_max[i] - s_min[i] + 1;
  if (box <= params.exhaustive_partition_limit) {
    ForEachBox(s_min, s_max, [&](const std::vector<int>& s) { partition_sets.push_back(s); });
  } else {
    std::set<std::vector<int>> seen;
    for (int level = 1; level <= max_s; ++level) {
      std::vector<int> s(n);
      for (int i = 0; i < n; ++i) s[i] = std::min(max_s, std::max(s_min[i], level));
      if (seen.insert(s).second) partition_sets.push_back(s);
    }
  }

  Plan best;
  bool have_best = false;
  PlanSearchStats stats;
  const double cluster_memory = cluster.TotalMemory();
  const ProblemOptions options{params.intra_discount, params.sense};

  const auto try_combo = [&](const std::vector<int>& r, const std::vector<int>& s) {
    ++stats.combinations;
    double used = 0.0;
    for (int i = 0; i < n; ++i) used += r[i] * memory[i];
    if (used > cluster_memory) {
      ++stats.memory_rejected;
      return;
    }
    try {
      PlacementProblem problem =
          BuildProblem(BuildNodes(flow, maps, profiles, r, s, params.batch), cluster, options);
      const SolveResult result = Solve(problem, params.solve);
      stats.solver_nodes += result.nodes_explored;
      ++stats.solved;
      Plan plan = MakePlan(problem, result, flow.models, r, s, params.batch);
      if (!have_best || Better(plan, best, params.sense)) {
        best = std::move(plan);
        have_best = true;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
      ++stats.infeasible;
    }
  };

  for (const auto& s : partition_sets) {
    if (params.replica_search == ReplicaSearch::kExhaustive) {
      const int max_r = params.max_replicas > 0 ? params.max_replicas : g;
      ForEachBox(std::vector<int>(n, 1), std::vector<int>(n, max_r),
                 [&](const std::vector<int>& r) { try_combo(r, s); });
      continue;
    }
    std::set<std::vector<int>> tried;
    for (int step = -3; step < params.scale_steps; ++step) {
      std::vector<int> r;
      try {
        r = SizeReplication(flow.reach, latency, s, memory, cluster_memory, std::ldexp(1.0, step));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasible) throw;
        ++stats.combinations;
        ++stats.memory_rejected;
        break;
      }
      if (tried.insert(r).second) try_combo(r, s);
    }
  }
  if (!have_best) {
    Fail(ErrorCode::kInfeasible,
         fmt::format("no feasible (R, S) combination among {} tried", stats.combinations));
  }
  best.stats = stats;
  return best;
}

// --- serialization ----------------------------------------------------------

json PlanToJson(const Plan& plan, const ClusterSpec& cluster) {
  json placements = json::array();
  for (const auto& p : plan.placements) {
    placements.push_back({{"model", p.model_id},
                          {"replica", p.replica},
                          {"partition", p.partition},
                          {"gpu", p.gpu},
                          {"gpu_id", cluster.gpus.at(p.gpu).gpu_id},
                          {"memory", p.memory},
                          {"utilization", p.utilization}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"kind", "plan"},
              {"models", plan.models},
              {"replicas", plan.replicas},
              {"partitions", plan.partitions},
              {"batch", plan.batch},
              {"objective", plan.objective},
              {"objective_sense", plan.sense == ObjectiveSense::kMinimize ? "min" : "max"},
              {"proven_optimal", plan.proven_optimal},
              {"gap", plan.gap},
              {"feasible", plan.feasibility.feasible},
              {"violations", plan.feasibility.violations},
              {"search_stats",
               {{"combinations", plan.stats.combinations},
                {"memory_rejected", plan.stats.memory_rejected},
                {"infeasible", plan.stats.infeasible},
                {"solved", plan.stats.solved},
                {"solver_nodes", plan.stats.solver_nodes}}},
              {"placements", placements}};
}

Plan PlanFromJson(const json& j) {
  Require(j.value("schema_version", -1) == kSchemaVersion, ErrorCode::kParse,
          "plan: unsupported schema_version");
  try {
    Plan plan;
    plan.models = j.at("models").get<std::vector<std::string>>();
    plan.replicas = j.at("replicas").get<std::vector<int>>();
    plan.partitions = j.at("partitions").get<std::vector<int>>();
    plan.batch = j.at("batch").get<double>();
    plan.objective = j.at("objective").get<double>();
    plan.sense = j.at("objective_sense").get<std::string>() == "max" ? ObjectiveSense::kMaximize
                                                                      : ObjectiveSense::kMinimize;
    plan.proven_optimal = j.at("proven_optimal").get<bool>();
    plan.gap = j.at("gap").get<double>();
    plan.feasibility.feasible = j.at("feasible").get<bool>();
    plan.feasibility.violations = j.at("violations").get<std::vector<std::string>>();
    for (const auto& p : j.at("placements")) {
      NodePlacement np;
      np.model_id = p.at("model").get<std::string>();
      auto it = std::find(plan.models.begin(), plan.models.end(), np.model_id);
      Require(it != plan.models.end(), ErrorCode::kMissingModel,
              fmt::format("placement references unknown model '{}'", np.model_id));
      np.model = static_cast<int>(it - plan.models.begin());
      np.replica = p.at("replica").get<int>();
      np.partition = p.at("partition").get<int>();
      np.gpu = p.at("gpu").get<int>();
      np.memory = p.at("memory").get<double>();
      np.utilization = p.at("utilization").get<double>();
      plan.placements.push_back(std::move(np));
    }
    return plan;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, fmt::format("malformed plan: {}", e.what()));
  }
}

Plan LoadPlan(const std::filesystem::path& path) { return PlanFromJson(ReadJsonFile(path)); }

void SavePlan(const Plan& plan, const ClusterSpec& cluster, const std::filesystem::path& path) {
  WriteJsonFile(PlanToJson(plan, cluster), path);
}

}  // namespace cascadesim
