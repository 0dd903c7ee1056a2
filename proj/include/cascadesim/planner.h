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

// GPU placement planning for a cascade.
//
// Every (replica, partition) of every retained model becomes a placement
// node. Nodes are assigned to GPUs to minimize the transmission cost of the
// traffic between them, subject to one GPU per node, per-GPU memory, and
// per-GPU kernel utilization <= 1. The pairwise cost term x_i^g * x_j^h is
// linearized with one auxiliary binary per (edge, g, h).

#ifndef CASCADESIM_PLANNER_H_
#define CASCADESIM_PLANNER_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cascadesim/trace.h"

namespace cascadesim {

// --- batch-size profiles --------------------------------------------------

struct AffineFit {
  LinearCoeffs coeffs;
  double residual_rms = 0.0;
};

// Least-squares y = slope * x + intercept. Needs >= 2 distinct x.
AffineFit FitAffine(std::span<const double> x, std::span<const double> y);

struct ModelMaps {
  LinearCoeffs utilization;
  LinearCoeffs transmission;
  LinearCoeffs memory;
  LinearCoeffs latency;
  double utilization_rms = 0.0;
  double transmission_rms = 0.0;
  double memory_rms = 0.0;
  double latency_rms = 0.0;
  // Fitted utilization exceeded 1 inside the profiled range; evaluation clamps.
  bool utilization_clamped = false;
  // A fitted slope came out negative and was flattened.
  bool flattened = false;
};

class ProfileMap {
 public:
  void Set(const std::string& model_id, ModelMaps maps) { maps_[model_id] = maps; }
  const ModelMaps& At(const std::string& model_id) const;

  double Utilization(const std::string& model_id, double batch) const;
  double Transmission(const std::string& model_id, double batch) const;
  double Memory(const std::string& model_id, double batch) const;
  double Latency(const std::string& model_id, double batch) const;

  const std::map<std::string, ModelMaps>& maps() const { return maps_; }

 private:
  std::map<std::string, ModelMaps> maps_;
};

ModelMaps FitModelMaps(const std::vector<ProfileSample>& samples);
// Fits from raw samples where present, otherwise takes the profile's declared
// coefficients.
ProfileMap FitProfiles(const std::vector<ModelProfile>& profiles);

// --- replication ------------------------------------------------------------

// R_i * S_i proportional to reach_i * latency_i, scaled so the smallest
// positive target gets one unit (times `scale_multiplier`), rounded, floored
// at 1, and shrunk until sum R_i * memory_i fits `cluster_memory`.
std::vector<int> SizeReplication(const std::vector<double>& reach,
                                 const std::vector<double>& latency,
                                 const std::vector<int>& partitions,
                                 const std::vector<double>& model_memory, double cluster_memory,
                                 double scale_multiplier = 1.0);

// --- placement problem ------------------------------------------------------

// Request flow through a retained cascade, as measured on the trace.
struct DataflowStats {
  std::vector<std::string> models;
  std::vector<double> reach;
  std::vector<double> flows;  // n x n, fraction forwarded from i to j
};

struct TrafficEdge {
  int to = 0;
  double bytes = 0.0;  // per cascade batch
};

struct PlacementNode {
  int id = 0;
  int model = 0;
  std::string model_id;
  int replica = 0;
  int partition = 0;
  double memory = 0.0;
  double utilization = 0.0;
  std::vector<TrafficEdge> edges;
};

std::vector<PlacementNode> BuildNodes(const DataflowStats& flow, const ProfileMap& maps,
                                      const std::vector<ModelProfile>& profiles,
                                      const std::vector<int>& replicas,
                                      const std::vector<int>& partitions, double batch);

enum class ObjectiveSense { kMinimize, kMaximize };

// Constraint row over the linearized binaries: sum(coeff * var) (<= or ==) rhs.
struct LinearRow {
  std::vector<std::pair<int, double>> terms;
  bool equality = false;
  double rhs = 0.0;
};

struct LinearizedProgram {
  int num_x = 0;  // x[node * gpus + g]
  int num_y = 0;  // one per (edge, g, h), after the x block
  std::vector<double> objective;  // over all num_x + num_y variables
  std::vector<LinearRow> rows;
  ObjectiveSense sense = ObjectiveSense::kMinimize;

  bool Satisfies(const std::vector<int>& values) const;
  double Evaluate(const std::vector<int>& values) const;
};

struct PlacementProblem {
  std::vector<PlacementNode> nodes;
  ClusterSpec cluster;
  double intra_discount = 1.0;  // scales intra-GPU transmission cost
  ObjectiveSense sense = ObjectiveSense::kMinimize;

  int num_gpus() const { return cluster.size(); }
  int num_edges() const;
  double EdgeCost(double bytes, int from_gpu, int to_gpu) const;
  double Objective(const std::vector<int>& assignment) const;

  LinearizedProgram Linearize() const;
  // x/y values implied by a node -> GPU assignment.
  std::vector<int> Lift(const std::vector<int>& assignment) const;
};

struct ProblemOptions {
  double intra_discount = 1.0;
  ObjectiveSense sense = ObjectiveSense::kMinimize;
};

// Throws kInfeasible when some node fits on no GPU.
PlacementProblem BuildProblem(std::vector<PlacementNode> nodes, const ClusterSpec& cluster,
                              const ProblemOptions& options = {});

struct FeasibilityReport {
  bool feasible = true;
  std::vector<std::string> violations;
};

FeasibilityReport CheckAssignment(const PlacementProblem& problem,
                                  const std::vector<int>& assignment);

// --- solver -----------------------------------------------------------------

struct SolveOptions {
  // Exact search when nodes * gpus stays at or under this many binaries.
  int exact_variable_limit = 60;
  long long node_limit = 2'000'000;
  int local_search_rounds = 200;
};

struct SolveResult {
  std::vector<int> assignment;  // node -> gpu
  double objective = 0.0;
  bool proven_optimal = false;
  bool heuristic = false;
  double lower_bound = 0.0;  // in the minimization sense
  double gap = 0.0;          // relative, 0 when proven optimal
  // Branch-and-bound nodes, or candidate moves on the heuristic path.
  long long nodes_explored = 0;
};

// Throws kInfeasible when no assignment satisfies the constraints.
SolveResult Solve(const PlacementProblem& problem, const SolveOptions& options = {});

// --- plan search ----------------------------------------------------------

enum class ReplicaSearch { kProportional, kExhaustive };

struct PlanParams {
  double batch = 8.0;
  double intra_discount = 1.0;
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  ReplicaSearch replica_search = ReplicaSearch::kProportional;
  // Proportional mode: replication multipliers 2^-3 .. 2^(scale_steps-1).
  int scale_steps = 3;
  // Exhaustive mode bounds; 0 means the cluster size.
  int max_replicas = 0;
  int max_partitions = 0;
  // Partition vectors are enumerated fully while there are at most this many.
  int exhaustive_partition_limit = 256;
  SolveOptions solve;
};

struct PlanSearchStats {
  long long combinations = 0;
  long long memory_rejected = 0;
  long long infeasible = 0;
  long long solved = 0;
  long long solver_nodes = 0;
};

struct NodePlacement {
  int model = 0;
  std::string model_id;
  int replica = 0;
  int partition = 0;
  int gpu = 0;
  double memory = 0.0;
  double utilization = 0.0;
};

struct Plan {
  std::vector<std::string> models;
  std::vector<int> replicas;
  std::vector<int> partitions;
  std::vector<NodePlacement> placements;  // BuildNodes order
  double batch = 0.0;
  double objective = 0.0;
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  bool proven_optimal = false;
  double gap = 0.0;
  FeasibilityReport feasibility;
  PlanSearchStats stats;

  int GpuOf(int model, int replica, int partition) const;
};

Plan MakePlan(const PlacementProblem& problem, const SolveResult& result,
              const std::vector<std::string>& models, const std::vector<int>& replicas,
              const std::vector<int>& partitions, double batch);

Plan PlanSearch(const DataflowStats& flow, const ProfileMap& maps,
                const std::vector<ModelProfile>& profiles, const ClusterSpec& cluster,
                const PlanParams& params);

nlohmann::json PlanToJson(const Plan& plan, const ClusterSpec& cluster);
Plan PlanFromJson(const nlohmann::json& j);
Plan LoadPlan(const std::filesystem::path& path);
void SavePlan(const Plan& plan, const ClusterSpec& cluster, const std::filesystem::path& path);

}  // namespace cascadesim

#endif  // CASCADESIM_PLANNER_H_
