#include <gtest/gtest.h>

#include "fixtures.hpp"

#include <random>
#include <sstream>

using namespace busdrive;

namespace {

// T1 path serving both trips.
std::vector<int> t1_roundtrip(const Network& net) {
  for (const auto& p : fx::all_paths(net)) {
    int services = 0;
    for (int a : p) services += net.arcs[static_cast<std::size_t>(a)].kind == ArcKind::Service ? 1 : 0;
    if (services == 2) return p;
  }
  return {};
}

}  // namespace

TEST(EffectiveSensing, SpotValues) {
  const auto pwl = PiecewiseConcave::sqrt3();
  EXPECT_NEAR(effective_sensing_value(0, pwl), 0.0, 1e-12);
  EXPECT_NEAR(effective_sensing_value(1, pwl), 1.0, 1e-12);
  EXPECT_NEAR(effective_sensing_value(2, pwl), 1.366, 1e-12);
  EXPECT_NEAR(effective_sensing_value(3, pwl), 1.732, 1e-12);
  EXPECT_NEAR(effective_sensing_value(5, pwl), 1.732, 1e-12);
  EXPECT_THROW(effective_sensing_value(-1, pwl), std::invalid_argument);
}

TEST(EffectiveSensing, DiminishingGainAndMonotone) {
  const auto pwl = PiecewiseConcave::sqrt3();
  for (int q = 1; q < 30; ++q) {
    const double up = effective_sensing_value(q + 1, pwl) - effective_sensing_value(q, pwl);
    const double down = effective_sensing_value(q, pwl) - effective_sensing_value(q - 1, pwl);
    EXPECT_LE(up, down + 1e-12);
    EXPECT_GE(up, -1e-12);
  }
}

TEST(CoverageCounts, EmptyPathsAllZero) {
  const auto inst = fx::fixture("t2");
  const auto net = build_network(inst);
  const auto q = coverage_counts({}, net, inst);
  for (int v : q.values) EXPECT_EQ(v, 0);
}

TEST(CoverageCounts, T1RoundTrip) {
  const auto inst = fx::fixture("t1");
  const auto net = build_network(inst);
  const auto path = t1_roundtrip(net);
  ASSERT_FALSE(path.empty());
  const auto q = coverage_counts({path}, net, inst);
  EXPECT_EQ(q(0, 0), 1);
  EXPECT_EQ(q(0, 1), 1);
  const auto doubled = coverage_counts({path, path}, net, inst);
  EXPECT_EQ(doubled(0, 0), 2);
  EXPECT_EQ(doubled(0, 1), 2);
}

TEST(CoverageCounts, DisconnectedPathRejected) {
  const auto inst = fx::fixture("t1");
  const auto net = build_network(inst);
  auto path = t1_roundtrip(net);
  path.erase(path.begin() + 2);
  try {
    coverage_counts({path}, net, inst);
    FAIL() << "expected PathError";
  } catch (const PathError& e) {
    EXPECT_NE(std::string(e.what()).find("position 2"), std::string::npos);
  }
}

TEST(SensingScore, SinglePairCapped) {
  auto inst = fx::fixture("t1");
  inst.grids[0].weights = {1.0, 0.0};
  CoverageCounts q(1, 2);
  q(0, 0) = 3;
  const auto [phi, rows] = sensing_score(q, inst);
  EXPECT_NEAR(phi, 1.732, 1e-12);
  ASSERT_EQ(rows.size(), 2u);
  q(0, 0) = 0;
  EXPECT_NEAR(sensing_score(q, inst).first, 0.0, 1e-12);
}

TEST(SensingScore, T1OneIbScoresOne) {
  const auto inst = fx::fixture("t1");
  const auto net = build_network(inst);
  const auto p = sensing_profile({t1_roundtrip(net)}, net, inst);
  EXPECT_NEAR(p.score, 1.0, 1e-12);
  EXPECT_NEAR(p.coverage_rate, 1.0, 1e-12);
  double sum = 0.0;
  for (const auto& row : p.breakdown) sum += row.contribution;
  EXPECT_NEAR(sum, p.score, 1e-12);
}

TEST(SensingScore, ProfileInvariantsOnRandomPaths) {
  std::mt19937_64 rng(4);
  for (std::uint64_t s : fx::micro_seeds(10)) {
    const auto inst = fx::micro_instance(s);
    const auto net = build_network(inst);
    const auto paths = fx::all_paths(net);
    std::vector<std::vector<int>> chosen;
    double prev = 0.0;
    for (int i = 0; i < 4; ++i) {
      chosen.push_back(paths[rng() % paths.size()]);
      const auto p = sensing_profile(chosen, net, inst);
      EXPECT_GE(p.score, prev - 1e-12);
      prev = p.score;
      double phi = 0.0;
      int covered = 0;
      for (int g = 0; g < p.q.grids; ++g) {
        int total = 0;
        for (int k = 0; k < p.q.periods; ++k) {
          EXPECT_NEAR(p.r(g, k), fx::fhat(p.q(g, k)), 1e-12);
          EXPECT_LE(p.r(g, k), 1.732 + 1e-12);
          phi += inst.grids[static_cast<std::size_t>(g)].weights[static_cast<std::size_t>(k)] * p.r(g, k);
          total += p.q(g, k);
        }
        covered += total > 0 ? 1 : 0;
      }
      EXPECT_NEAR(p.score, phi, 1e-12);
      EXPECT_NEAR(p.coverage_rate, static_cast<double>(covered) / p.q.grids, 1e-12);
    }
  }
}

TEST(SensingScore, WeightScaleIsLinear) {
  auto inst = fx::fixture("t2");
  const auto net = build_network(inst);
  const auto paths = fx::all_paths(net);
  const std::vector<std::vector<int>> chosen{paths.front(), paths.back()};
  const double base = sensing_profile(chosen, net, inst).score;
  for (auto& g : inst.grids) {
    for (double& w : g.weights) w *= 2.5;
  }
  EXPECT_NEAR(sensing_profile(chosen, net, inst).score, 2.5 * base, 1e-12);
}

TEST(SensingCsv, BreakdownAndHeatmapRows) {
  const auto inst = fx::fixture("t1");
  const auto net = build_network(inst);
  const auto p = sensing_profile({t1_roundtrip(net)}, net, inst);
  std::ostringstream br;
  write_breakdown_csv(br, p, inst);
  EXPECT_EQ(br.str(),
            "grid_id,k,mu,q,r,contribution\n"
            "g1,0,0.500000000,1,1.000000,0.500000000\n"
            "g1,1,0.500000000,1,1.000000,0.500000000\n");
  std::ostringstream hm;
  write_heatmap_csv(hm, p, inst);
  EXPECT_EQ(hm.str(), "grid,k,score\ng1,0,0.500000000\ng1,1,0.500000000\n");
}
