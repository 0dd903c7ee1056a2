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

#include "cascadesim/threshold_search.h"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cascadesim/error.h"
#include "test_support.h"

namespace cascadesim {
namespace {

using testing::ReplaySequential;

ScoredTrace FamilyScored(std::uint64_t seed, int models, int records) {
  std::mt19937_64 rng(seed);
  const auto spec = testing::RandomFamily(rng, models, false);
  const auto trace = GenerateSyntheticTrace(spec, records, seed);
  return ScoreTrace(trace, CalibrateTrace(trace));
}

CascadeCosts CostsOf(std::vector<double> e) {
  CascadeCosts c;
  c.latency.assign(e.size(), 0.01);
  c.energy = std::move(e);
  return c;
}

// Minimum energy over t1 in {0, 0.01, ..., 1} with accuracy >= target.
double GridOracle(const ScoredTrace& s, const std::vector<double>& e, double target) {
  double best = 1e300;
  for (int i = 0; i <= 100; ++i) {
    const auto r = ReplaySequential(s, {i / 100.0}, e);
    if (r.accuracy >= target) best = std::min(best, r.energy);
  }
  return best;
}

PerfGraph GraphOf(std::vector<PerfPoint> points) {
  PerfGraph g;
  g.pareto = ParetoFlags(points);
  g.points = std::move(points);
  return g;
}

TEST(SearchThresholds, TwoModelsMatchGridOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = FamilyScored(seed, 2, 200);
    const std::vector<double> e{0.5, 4.0};
    SearchParams p;
    p.samples_per_round = 64;
    p.seed = seed;
    const auto graph = SearchThresholds(s, CostsOf(e), p);
    const double target = s.StandaloneAccuracy(1);
    const auto ap = SelectAccuracyPreserving(graph, target);
    ASSERT_FALSE(ap.warning);
    const double oracle = GridOracle(s, e, target);
    EXPECT_LE(std::abs(ap.point.energy - oracle), 0.02 * oracle) << "seed " << seed;
  }
}

TEST(SearchThresholds, PointsAreReproducible) {
  const auto s = FamilyScored(5, 4, 300);
  const std::vector<double> e{0.1, 0.4, 1.5, 6.0};
  SearchParams p;
  p.seed = 9;
  const auto graph = SearchThresholds(s, CostsOf(e), p);
  ASSERT_GE(graph.points.size(), 4u);
  for (const auto& pt : graph.points) {
    const auto r = ReplaySequential(s, pt.thresholds, e);
    EXPECT_DOUBLE_EQ(pt.accuracy, r.accuracy);
    EXPECT_NEAR(pt.energy, r.energy, 1e-12);
  }
}

TEST(SearchThresholds, ContainsLargestModelCorner) {
  const auto s = FamilyScored(6, 3, 300);
  const auto graph = SearchThresholds(s, CostsOf({1, 2, 3}), SearchParams{});
  bool found = false;
  for (const auto& pt : graph.points) found = found || pt.accuracy >= s.StandaloneAccuracy(2);
  EXPECT_TRUE(found);
}

TEST(SearchThresholds, DeterministicUnderSeed) {
  const auto s = FamilyScored(7, 3, 300);
  SearchParams p;
  p.seed = 4;
  std::ostringstream a, b;
  WriteGraphCsv(SearchThresholds(s, CostsOf({1, 2, 3}), p), a);
  WriteGraphCsv(SearchThresholds(s, CostsOf({1, 2, 3}), p), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(SearchThresholds, NeverCorrectSmallModelIsBypassed) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> sc(2);
  std::vector<std::vector<bool>> ok(2);
  for (int r = 0; r < 200; ++r) {
    sc[0].push_back(u(rng));
    ok[0].push_back(false);
    sc[1].push_back(u(rng));
    ok[1].push_back(u(rng) < 0.8);
  }
  const auto s = testing::MakeScored(sc, ok);
  const auto graph = SearchThresholds(s, CostsOf({1, 5}), SearchParams{});
  const double target = s.StandaloneAccuracy(1);
  for (const auto& pt : graph.points) {
    if (pt.accuracy < target) continue;
    const auto r = ReplaySequential(s, pt.thresholds, {1, 5});
    EXPECT_LE(r.reach[0] - r.reach[1], 0.0);
  }
}

TEST(SearchThresholds, RejectsSingleModel) {
  const auto s = testing::MakeScored({{0.5}}, {{true}});
  EXPECT_THROW(SearchThresholds(s, CostsOf({1}), SearchParams{}), Error);
  SearchParams bad;
  bad.epsilon = 0.7;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(Pareto, FlagsAreCorrect) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PerfPoint> pts;
  for (int i = 0; i < 300; ++i) {
    pts.push_back({{}, std::round(u(rng) * 50) / 50, std::round(u(rng) * 50) / 50 + 0.01});
  }
  const auto flags = ParetoFlags(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const bool ge = pts[j].accuracy >= pts[i].accuracy && pts[j].energy <= pts[i].energy;
      const bool strict = pts[j].accuracy > pts[i].accuracy || pts[j].energy < pts[i].energy;
      dominated = dominated || (ge && strict);
    }
    EXPECT_EQ(flags[i], !dominated) << i;
  }
  const auto frontier = GraphOf(pts).ParetoPoints();
  for (std::size_t i = 1; i < frontier.size(); ++i) {
    EXPECT_GE(frontier[i].accuracy, frontier[i - 1].accuracy);
    EXPECT_GE(frontier[i].energy, frontier[i - 1].energy);
  }
}

TEST(SelectAccuracyPreserving, MinimumEnergyAtTarget) {
  const auto g = GraphOf({{{0.1}, 0.9, 4.0}, {{0.2}, 0.9, 7.0}, {{0.3}, 0.8, 1.0}});
  const auto s = SelectAccuracyPreserving(g, 0.9);
  EXPECT_FALSE(s.warning);
  EXPECT_DOUBLE_EQ(s.point.energy, 4.0);
}

TEST(SelectAccuracyPreserving, FallsBackToMaxAccuracy) {
  const auto g = GraphOf({{{0.1}, 0.85, 4.0}, {{0.2}, 0.8, 1.0}});
  const auto s = SelectAccuracyPreserving(g, 0.9);
  EXPECT_TRUE(s.warning);
  EXPECT_DOUBLE_EQ(s.point.accuracy, 0.85);
}

TEST(SelectEnergyOptimized, QuadraticFrontierKnee) {
  // e(a) = 50 (a - 0.5)^2 + 1 sampled at 20 grid-aligned accuracies with
  // uneven spacing. On the interpolated frontier the slope change at a
  // sample is 50 (h_left + h_right), so the largest combined spacing wins.
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> gaps;
    std::uniform_int_distribution<int> gap(3, 30);
    for (int i = 0; i < 19; ++i) gaps.push_back(gap(rng));
    std::vector<PerfPoint> pts;
    int at = 500;
    pts.push_back({{}, at / 1000.0, 1.0});
    for (int g : gaps) {
      at += g;
      const double a = at / 1000.0;
      pts.push_back({{}, a, 50 * (a - 0.5) * (a - 0.5) + 1});
    }
    int best = -1, best_span = -1, ties = 0;
    for (int i = 1; i + 1 < 20; ++i) {
      const int span = gaps[i - 1] + gaps[i];
      if (span > best_span) {
        best_span = span;
        best = i;
        ties = 0;
      } else if (span == best_span) {
        ++ties;
      }
    }
    if (ties > 0) continue;  // oracle needs a unique maximum
    const auto s = SelectEnergyOptimized(GraphOf(pts), 0.0);
    EXPECT_FALSE(s.warning);
    EXPECT_DOUBLE_EQ(s.point.accuracy, pts[best].accuracy) << "trial " << trial;
  }
}

TEST(SelectEnergyOptimized, LinearFrontierPrefersLowEnergy) {
  std::vector<PerfPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({{}, 0.8 + 0.01 * i, 1.0 + i});
  const auto s = SelectEnergyOptimized(GraphOf(pts), 0.0);
  EXPECT_DOUBLE_EQ(s.point.energy, 1.0);
}

TEST(SelectEnergyOptimized, RespectsFloorAndCeiling) {
  std::vector<PerfPoint> pts;
  for (int i = 0; i <= 40; ++i) {
    const double a = 0.8 + 0.005 * i;
    pts.push_back({{}, a, std::exp(30 * (a - 0.8))});
  }
  const auto s = SelectEnergyOptimized(GraphOf(pts), 0.85, 0.9);
  EXPECT_GE(s.point.accuracy, 0.85);
  EXPECT_LE(s.point.accuracy, 0.9);
}

TEST(SelectEnergyOptimized, FewPointsFallBack) {
  const auto g = GraphOf({{{0.1}, 0.9, 4.0}, {{0.2}, 0.8, 1.0}});
  const auto s = SelectEnergyOptimized(g, 0.85);
  EXPECT_TRUE(s.warning);
  EXPECT_DOUBLE_EQ(s.point.accuracy, 0.9);
}

TEST(SelectEnergyOptimized, NeverBelowSecondLargestOnFamilies) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const auto s = FamilyScored(seed, 4, 1000);
    std::mt19937_64 rng(seed);
    const auto graph = SearchThresholds(s, CostsOf(testing::LadderEnergies(rng, 4)), SearchParams{});
    const auto eo = SelectEnergyOptimized(graph, s.StandaloneAccuracy(2), s.StandaloneAccuracy(3));
    EXPECT_GE(eo.point.accuracy, s.StandaloneAccuracy(2));
  }
}

TEST(Selection, JsonRoundTrip) {
  const Selection s{{{0.25, 0.5}, 0.875, 1.5}, true};
  const auto back = SelectionFromJson(SelectionToJson(s));
  EXPECT_EQ(back.point, s.point);
  EXPECT_EQ(back.warning, s.warning);
  EXPECT_EQ(ParseMode("EO"), Mode::kEnergyOptimized);
  EXPECT_THROW(ParseMode("fast"), Error);
}

}  // namespace
}  // namespace cascadesim
