#pragma once

// Shared test helpers: fixture loading, seeded micro-instances and an
// oracle that enumerates bus paths directly on the network, independent of
// any MIP model.

#include <busdrive/busdrive.hpp>
#include <busdrive/mip/brute_force.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fx {

using namespace busdrive;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_path(const std::string& name) { return std::string(BUSDRIVE_DATA_DIR) + "/" + name; }

inline Instance fixture(const std::string& name) { return parse_instance(read_file(data_path(name + ".json"))); }

// Tiny random instance: depot A plus one or two terminals, 2 to 4 trips over
// 4 or 6 steps, at most 3 buses. Depot legs take one step.
inline Instance micro_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance inst;
  const int steps = pick(0, 1) == 0 ? 4 : 6;
  inst.horizon = {0, steps - 1, 15};
  inst.sensing.delta_k_steps = steps / 2;
  const int n_term = pick(2, 3);
  const std::vector<std::string> names{"A", "B", "C"};
  for (int i = 0; i < n_term; ++i) inst.terminals.push_back({names[i], i == 0, ""});
  const int n_grids = pick(1, 2);
  for (int g = 0; g < n_grids; ++g) {
    GridCell c;
    c.id = "g" + std::to_string(g + 1);
    c.weights = {static_cast<double>(pick(0, 3)), static_cast<double>(pick(1, 3))};
    inst.grids.push_back(c);
  }
  const int n_trips = pick(2, 4);
  for (int k = 0; k < n_trips; ++k) {
    TimetabledTrip t;
    const int a = pick(0, n_term - 1);
    int b = pick(0, n_term - 2);
    if (b >= a) ++b;
    t.from = names[a];
    t.to = names[b];
    t.line = "L" + std::min(t.from, t.to) + std::max(t.from, t.to);
    t.depart = pick(0, steps - 2);
    t.arrive = std::min(steps - 1, t.depart + pick(1, 2));
    t.id = "t" + std::to_string(k);
    t.grid_trace.push_back({"g" + std::to_string(pick(1, n_grids)), 0.0});
    if (n_grids > 1 && pick(0, 1) == 1) {
      const std::string other = t.grid_trace.front().grid == "g1" ? "g2" : "g1";
      t.grid_trace.push_back({other, 0.5});
    }
    inst.trips.push_back(t);
  }
  for (int i = 1; i < n_term; ++i) {
    RelocationOption out{names[0], names[i], 1, {}, {}, true};
    RelocationOption back{names[i], names[0], 1, {}, {}, true};
    inst.relocations.push_back(out);
    inst.relocations.push_back(back);
  }
  if (n_term == 3 && pick(0, 1) == 1) {
    RelocationOption r{"B", "C", 1, {}, {}, false};
    if (pick(0, 1) == 1) r.grid_trace.push_back({"g1", 0.0});
    inst.relocations.push_back(r);
  }
  inst.costs = CostSpec{static_cast<double>(pick(1, 2) * 5), 1.0 / 15.0, static_cast<double>(pick(0, 2) * 2)};
  inst.fleet.total_buses = pick(1, 3);
  inst.fleet.max_ib = pick(0, std::min(2, inst.fleet.total_buses));
  inst.fleet.ib_exact = pick(0, 4) == 0;
  const double deltas[] = {0.0, 5.0, 20.0, 100.0};
  inst.delta = deltas[pick(0, 3)];
  normalize_weights(inst);
  return inst;
}

// All depot-to-depot arc paths of the network.
inline std::vector<std::vector<int>> all_paths(const Network& net, std::size_t cap = 5000) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  const auto dfs = [&](auto&& self, int node, int depot_pos) -> void {
    if (out.size() > cap) return;
    for (int a : net.out_arcs[static_cast<std::size_t>(node)]) {
      const auto& arc = net.arcs[static_cast<std::size_t>(a)];
      if (arc.kind == ArcKind::PullIn && arc.depot != depot_pos) continue;
      cur.push_back(a);
      if (arc.kind == ArcKind::PullIn) {
        out.push_back(cur);
      } else {
        self(self, arc.to, depot_pos);
      }
      cur.pop_back();
    }
  };
  for (std::size_t d = 0; d < net.depots.size(); ++d) dfs(dfs, net.source_node(static_cast<int>(d)), static_cast<int>(d));
  return out;
}

// Envelope of sqrt written out by interval.
inline double fhat(int q) {
  if (q <= 0) return 0.0;
  if (q == 1) return 1.0;
  if (q == 2) return 1.366;
  return 1.732;
}

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  double cost = 0.0;
  double score = 0.0;
  std::size_t paths = 0;
};

// Minimum of cost - delta * score over every multiset of at most
// total_buses paths with an IB labelling allowed by the fleet limits.
inline OracleResult path_oracle(const Instance& inst, const Network& net) {
  const auto paths = all_paths(net);
  OracleResult best;
  best.paths = paths.size();
  const int n_trips = static_cast<int>(inst.trips.size());
  const int periods = inst.periods();
  const int ib_cap = inst.fleet.max_ib;
  const int nb_cap = inst.fleet.ib_exact ? inst.fleet.total_buses - inst.fleet.max_ib : inst.fleet.total_buses;
  std::vector<double> cost(paths.size(), 0.0);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (int a : paths[p]) cost[p] += net.arcs[static_cast<std::size_t>(a)].cost;
  }
  std::vector<int> chosen;
  const auto evaluate = [&] {
    std::vector<int> served(static_cast<std::size_t>(n_trips), 0);
    double c = 0.0;
    for (int p : chosen) {
      c += cost[static_cast<std::size_t>(p)];
      for (int a : paths[static_cast<std::size_t>(p)]) {
        const auto& arc = net.arcs[static_cast<std::size_t>(a)];
        if (arc.kind == ArcKind::Service) served[static_cast<std::size_t>(arc.trip)] = 1;
      }
    }
    if (std::count(served.begin(), served.end(), 0) > 0) return;
    const int n = static_cast<int>(chosen.size());
    for (int mask = 0; mask < (1 << n); ++mask) {
      const int ib = __builtin_popcount(static_cast<unsigned>(mask));
      if (ib > ib_cap || n - ib > nb_cap) continue;
      std::vector<int> q(inst.grids.size() * static_cast<std::size_t>(periods), 0);
      for (int i = 0; i < n; ++i) {
        if (!(mask & (1 << i))) continue;
        for (int a : paths[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])]) {
          for (const auto& cp : net.arcs[static_cast<std::size_t>(a)].coverage) ++q[static_cast<std::size_t>(cp.grid * periods + cp.period)];
        }
      }
      double score = 0.0;
      for (std::size_t g = 0; g < inst.grids.size(); ++g) {
        for (int k = 0; k < periods; ++k) score += inst.grids[g].weights[static_cast<std::size_t>(k)] * fhat(q[g * static_cast<std::size_t>(periods) + static_cast<std::size_t>(k)]);
      }
      const double z = c - inst.delta * score;
      if (!best.feasible || z < best.objective - 1e-9) {
        best.feasible = true;
        best.objective = z;
        best.cost = c;
        best.score = score;
      }
    }
  };
  const auto rec = [&](auto&& self, std::size_t from) -> void {
    evaluate();
    if (static_cast<int>(chosen.size()) == inst.fleet.total_buses) return;
    for (std::size_t p = from; p < paths.size(); ++p) {
      chosen.push_back(static_cast<int>(p));
      self(self, p);
      chosen.pop_back();
    }
  };
  rec(rec, 0);
  return best;
}

// Seeds whose micro-instance validates and stays small enough for the
// path oracle, in increasing order.
inline std::vector<std::uint64_t> micro_seeds(std::size_t count, std::size_t max_paths = 60) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 1; out.size() < count && s < 10000; ++s) {
    const auto inst = micro_instance(s);
    if (!validate_instance(inst).empty()) continue;
    const auto net = build_network(inst);
    if (all_paths(net, max_paths).size() > max_paths) continue;
    out.push_back(s);
  }
  return out;
}

inline SolveOptions exact_options() {
  SolveOptions o;
  o.mipgap = 0.0;
  o.node_limit = 1000000;
  return o;
}

}  // namespace fx
