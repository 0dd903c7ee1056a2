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

// Exact best-first branch and bound for small placement problems, greedy
// construction plus move/swap local search otherwise.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>

#include "cascadesim/error.h"
#include "cascadesim/planner.h"

namespace cascadesim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
  int from = 0;
  int to = 0;
  double bytes = 0.0;
};

class Solver {
 public:
  Solver(const PlacementProblem& p, const SolveOptions& o)
      : p_(p), opt_(o), n_(static_cast<int>(p.nodes.size())), g_(p.num_gpus()) {
    const double sign = p.sense == ObjectiveSense::kMinimize ? 1.0 : -1.0;
    factor_.assign(static_cast<std::size_t>(g_ * g_), 0.0);
    row_min_.assign(static_cast<std::size_t>(g_), kInf);
    col_min_.assign(static_cast<std::size_t>(g_), kInf);
    min_factor_ = kInf;
    for (int a = 0; a < g_; ++a) {
      for (int b = 0; b < g_; ++b) {
        const double f = sign * p.EdgeCost(1.0, a, b);
        factor_[a * g_ + b] = f;
        row_min_[a] = std::min(row_min_[a], f);
        col_min_[b] = std::min(col_min_[b], f);
        min_factor_ = std::min(min_factor_, f);
      }
    }
    adj_.resize(static_cast<std::size_t>(n_));
    for (const auto& node : p.nodes) {
      for (const auto& e : node.edges) {
        const int k = static_cast<int>(edges_.size());
        edges_.push_back({node.id, e.to, e.bytes});
        adj_[node.id].push_back(k);
        adj_[e.to].push_back(k);
      }
    }
    order_.resize(static_cast<std::size_t>(n_));
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](int x, int y) {
      const auto& a = p.nodes[x];
      const auto& b = p.nodes[y];
      if (a.utilization != b.utilization) return a.utilization > b.utilization;
      return a.memory > b.memory;
    });
  }

  SolveResult Run() {
    CheckCertificates();
    SolveResult result;
    std::optional<std::vector<int>> incumbent = Greedy();
    if (incumbent) LocalSearch(*incumbent);

    const double root = Bound(std::vector<int>(static_cast<std::size_t>(n_), -1));
    if (n_ * g_ <= opt_.exact_variable_limit) {
      BranchAndBound(incumbent, result);
    } else {
      result.heuristic = true;
      result.lower_bound = root;
      result.nodes_explored = moves_;
    }
    if (!incumbent) {
      Fail(ErrorCode::kInfeasible,
           result.heuristic ? "greedy placement found no feasible assignment"
                            : "no assignment satisfies memory and utilization limits");
    }
    result.assignment = *incumbent;
    result.objective = p_.Objective(result.assignment);
    const double signed_obj = Signed(result.assignment);
    if (result.proven_optimal) {
      result.lower_bound = signed_obj;
      result.gap = 0.0;
    } else {
      result.gap = std::max(0.0, signed_obj - result.lower_bound) /
                   std::max(std::abs(signed_obj), 1e-12);
    }
    return result;
  }

 private:
  double Cost(const Edge& e, int a, int b) const { return e.bytes * factor_[a * g_ + b]; }

  double Signed(const std::vector<int>& x) const {
    double total = 0.0;
    for (const auto& e : edges_) total += Cost(e, x[e.from], x[e.to]);
    return total;
  }

  void CheckCertificates() const {
    double util = 0.0, mem = 0.0;
    for (const auto& node : p_.nodes) {
      util += node.utilization;
      mem += node.memory;
    }
    if (util > g_ * (1 + 1e-9)) {
      Fail(ErrorCode::kInfeasible,
           fmt::format("total utilization {:.4g} exceeds {} GPUs", util, g_));
    }
    if (mem > p_.cluster.TotalMemory() * (1 + 1e-12)) {
      Fail(ErrorCode::kInfeasible, fmt::format("total memory {:.6g} exceeds cluster memory {:.6g}",
                                               mem, p_.cluster.TotalMemory()));
    }
  }

  bool Fits(int node, int gpu, const std::vector<double>& mem,
            const std::vector<double>& util) const {
    const auto& v = p_.nodes[node];
    return mem[gpu] + v.memory <= p_.cluster.gpus[gpu].memory_bytes * (1 + 1e-12) &&
           util[gpu] + v.utilization <= 1.0 + 1e-9;
  }

  void Loads(const std::vector<int>& x, std::vector<double>& mem, std::vector<double>& util) const {
    mem.assign(static_cast<std::size_t>(g_), 0.0);
    util.assign(static_cast<std::size_t>(g_), 0.0);
    for (int v = 0; v < n_; ++v) {
      if (x[v] < 0) continue;
      mem[x[v]] += p_.nodes[v].memory;
      util[x[v]] += p_.nodes[v].utilization;
    }
  }

  // Cost change of placing `node` on `gpu` against already placed neighbours.
  double Incremental(const std::vector<int>& x, int node, int gpu) const {
    double d = 0.0;
    for (int k : adj_[node]) {
      const auto& e = edges_[k];
      const int other = e.from == node ? e.to : e.from;
      if (x[other] < 0) continue;
      d += e.from == node ? Cost(e, gpu, x[other]) : Cost(e, x[other], gpu);
    }
    return d;
  }

  std::optional<std::vector<int>> Greedy() const {
    std::vector<int> x(static_cast<std::size_t>(n_), -1);
    std::vector<double> mem(static_cast<std::size_t>(g_), 0.0), util(static_cast<std::size_t>(g_), 0.0);
    for (int v : order_) {
      int best = -1;
      double best_cost = kInf, best_slack = kInf;
      for (int gpu = 0; gpu < g_; ++gpu) {
        ++moves_;
        if (!Fits(v, gpu, mem, util)) continue;
        const double c = Incremental(x, v, gpu);
        const double slack = p_.cluster.gpus[gpu].memory_bytes - mem[gpu] - p_.nodes[v].memory;
        const double tol = 1e-12 * std::max(1.0, std::abs(best_cost));
        if (c < best_cost - tol || (std::abs(c - best_cost) <= tol && slack < best_slack)) {
          best = gpu;
          best_cost = c;
          best_slack = slack;
        }
      }
      if (best < 0) return std::nullopt;
      x[v] = best;
      mem[best] += p_.nodes[v].memory;
      util[best] += p_.nodes[v].utilization;
    }
    return x;
  }

  void LocalSearch(std::vector<int>& x) const {
    std::vector<double> mem, util;
    for (int round = 0; round < opt_.local_search_rounds; ++round) {
      bool improved = false;
      for (int v = 0; v < n_; ++v) {
        Loads(x, mem, util);
        const int from = x[v];
        mem[from] -= p_.nodes[v].memory;
        util[from] -= p_.nodes[v].utilization;
        x[v] = -1;
        const double here = Incremental(x, v, from);
        int best = from;
        double best_cost = here;
        for (int gpu = 0; gpu < g_; ++gpu) {
          ++moves_;
          if (gpu == from || !Fits(v, gpu, mem, util)) continue;
          const double c = Incremental(x, v, gpu);
          if (c < best_cost - 1e-12 * std::max(1.0, std::abs(best_cost))) {
            best = gpu;
            best_cost = c;
          }
        }
        x[v] = best;
        improved = improved || best != from;
      }
      const double before = Signed(x);
      for (int a = 0; a < n_; ++a) {
        for (int b = a + 1; b < n_; ++b) {
          if (x[a] == x[b]) continue;
          ++moves_;
          const double current = Signed(x);
          std::swap(x[a], x[b]);
          Loads(x, mem, util);
          bool ok = true;
          for (int gpu : {x[a], x[b]}) {
            ok = ok && mem[gpu] <= p_.cluster.gpus[gpu].memory_bytes * (1 + 1e-12) &&
                 util[gpu] <= 1.0 + 1e-9;
          }
          if (!ok || Signed(x) >= current - 1e-12 * std::max(1.0, std::abs(current))) {
            std::swap(x[a], x[b]);
          }
        }
      }
      improved = improved || Signed(x) < before;
      if (!improved) break;
    }
  }

  // Lower bound (signed) over completions of a partial assignment; kInf when
  // capacity already rules every completion out.
  double Bound(const std::vector<int>& x) const {
    std::vector<double> mem, util;
    Loads(x, mem, util);
    double free_mem = 0.0, free_util = 0.0, need_mem = 0.0, need_util = 0.0;
    for (int gpu = 0; gpu < g_; ++gpu) {
      free_mem += std::max(0.0, p_.cluster.gpus[gpu].memory_bytes - mem[gpu]);
      free_util += std::max(0.0, 1.0 - util[gpu]);
    }
    for (int v = 0; v < n_; ++v) {
      if (x[v] >= 0) continue;
      need_mem += p_.nodes[v].memory;
      need_util += p_.nodes[v].utilization;
      bool somewhere = false;
      for (int gpu = 0; gpu < g_ && !somewhere; ++gpu) somewhere = Fits(v, gpu, mem, util);
      if (!somewhere) return kInf;
    }
    if (need_mem > free_mem * (1 + 1e-12) + 1e-9 || need_util > free_util + 1e-9) return kInf;
    double bound = 0.0;
    for (const auto& e : edges_) {
      const int a = x[e.from], b = x[e.to];
      if (a >= 0 && b >= 0) {
        bound += Cost(e, a, b);
      } else if (a >= 0) {
        bound += e.bytes * row_min_[a];
      } else if (b >= 0) {
        bound += e.bytes * col_min_[b];
      } else {
        bound += e.bytes * min_factor_;
      }
    }
    return bound;
  }

  struct Frame {
    double bound;
    int depth;
    long long seq;
    std::vector<int> x;
  };
  struct Worse {
    bool operator()(const Frame& a, const Frame& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.seq > b.seq;
    }
  };

  void BranchAndBound(std::optional<std::vector<int>>& incumbent, SolveResult& result) const {
    double best = incumbent ? Signed(*incumbent) : kInf;
    std::priority_queue<Frame, std::vector<Frame>, Worse> open;
    long long seq = 0;
    std::vector<int> root(static_cast<std::size_t>(n_), -1);
    const double root_bound = Bound(root);
    if (root_bound < kInf) open.push({root_bound, 0, seq++, std::move(root)});
    const auto prune = [&](double bound) {
      return bound >= best - 1e-12 * std::max(1.0, std::abs(best));
    };
    long long explored = 0;
    while (!open.empty()) {
      if (explored >= opt_.node_limit) break;
      Frame f = open.top();
      open.pop();
      ++explored;
      if (prune(f.bound)) continue;
      if (f.depth == n_) {
        best = f.bound;
        incumbent = f.x;
        continue;
      }
      const int v = order_[f.depth];
      for (int gpu = 0; gpu < g_; ++gpu) {
        std::vector<int> x = f.x;
        x[v] = gpu;
        std::vector<double> mem, util;
        Loads(f.x, mem, util);
        if (!Fits(v, gpu, mem, util)) continue;
        const double b = Bound(x);
        if (b == kInf || prune(b)) continue;
        open.push({b, f.depth + 1, seq++, std::move(x)});
      }
    }
    result.nodes_explored = explored;
    if (open.empty()) {
      result.proven_optimal = true;
      result.lower_bound = best;
    } else {
      result.lower_bound = std::min(best, open.top().bound);
    }
  }

  const PlacementProblem& p_;
  SolveOptions opt_;
  int n_;
  int g_;
  std::vector<double> factor_, row_min_, col_min_;
  double min_factor_ = 0.0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> order_;
  // Candidate placements and swaps tried by the heuristic passes.
  mutable long long moves_ = 0;
};

}  // namespace

SolveResult Solve(const PlacementProblem& problem, const SolveOptions& options) {
  Require(problem.num_gpus() >= 1, ErrorCode::kInvalidArgument, "cluster has no GPUs");
  if (problem.nodes.empty()) {
    SolveResult empty;
    empty.proven_optimal = true;
    return empty;
  }
  return Solver(problem, options).Run();
}

}  // namespace cascadesim
