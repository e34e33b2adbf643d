#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "instance.hpp"
#include "network.hpp"
#include "schedule.hpp"

namespace busdrive {

// Trip chains for one line by first-available assignment: each trip goes to
// the bus that has been idle longest at the trip's origin, or to a new bus.
// A non-empty `mask` restricts the chains to flagged trips.
inline std::vector<std::vector<int>> greedy_line_chains(const Instance& inst, const std::string& line,
                                                        const std::vector<char>& mask = {}) {
  std::vector<int> trips;
  for (std::size_t k = 0; k < inst.trips.size(); ++k) {
    if (inst.trips[k].line == line && (mask.empty() || mask[k])) trips.push_back(static_cast<int>(k));
  }
  std::stable_sort(trips.begin(), trips.end(), [&](int a, int b) {
    return inst.trips[static_cast<std::size_t>(a)].depart < inst.trips[static_cast<std::size_t>(b)].depart;
  });
  struct Bus {
    std::string at;
    int free_at;
  };
  std::vector<Bus> buses;
  std::vector<std::vector<int>> chains;
  for (int k : trips) {
    const auto& t = inst.trips[static_cast<std::size_t>(k)];
    int pick = -1;
    for (std::size_t b = 0; b < buses.size(); ++b) {
      if (buses[b].at != t.from || buses[b].free_at > t.depart) continue;
      if (pick < 0 || buses[b].free_at < buses[static_cast<std::size_t>(pick)].free_at) pick = static_cast<int>(b);
    }
    if (pick < 0) {
      pick = static_cast<int>(buses.size());
      buses.push_back({t.from, t.depart});
      chains.emplace_back();
    }
    buses[static_cast<std::size_t>(pick)] = {t.to, t.arrive};
    chains[static_cast<std::size_t>(pick)].push_back(k);
  }
  return chains;
}

inline int find_arc(const Network& net, int node, ArcKind kind, int to_node = -1) {
  for (int a : net.out_arcs[static_cast<std::size_t>(node)]) {
    const auto& arc = net.arcs[static_cast<std::size_t>(a)];
    if (arc.kind == kind && (to_node < 0 || arc.to == to_node)) return a;
  }
  return -1;
}

// Depot-to-depot path serving `chain` (trips in time order, each starting
// where the previous one ended). Empty if the network lacks a needed arc.
inline std::vector<int> chain_path(const Network& net, const std::vector<int>& chain, int depot_pos = 0) {
  std::vector<int> path;
  if (chain.empty()) return path;
  const auto& first = net.arcs[static_cast<std::size_t>(net.service_arc_of_trip[static_cast<std::size_t>(chain.front())])];
  int node = net.source_node(depot_pos);
  int a = find_arc(net, node, ArcKind::PullOut, net.timed_node(first.from_terminal, net.start));
  if (a < 0) return {};
  path.push_back(a);
  node = net.arcs[static_cast<std::size_t>(a)].to;
  const auto wait_until = [&](int t) {
    while (net.nodes[static_cast<std::size_t>(node)].t < t) {
      const int w = find_arc(net, node, ArcKind::Wait);
      if (w < 0) return false;
      path.push_back(w);
      node = net.arcs[static_cast<std::size_t>(w)].to;
    }
    return net.nodes[static_cast<std::size_t>(node)].t == t;
  };
  for (int k : chain) {
    const int s = net.service_arc_of_trip[static_cast<std::size_t>(k)];
    const auto& arc = net.arcs[static_cast<std::size_t>(s)];
    if (net.nodes[static_cast<std::size_t>(node)].terminal != arc.from_terminal) return {};
    if (!wait_until(arc.from_t)) return {};
    path.push_back(s);
    node = arc.to;
  }
  const int end_t = net.start + net.steps - 1;
  if (!wait_until(end_t)) return {};
  a = find_arc(net, node, ArcKind::PullIn, net.sink_node(depot_pos));
  if (a < 0) return {};
  path.push_back(a);
  return path;
}

// First-available buses for the flagged trips (all trips if `mask` is empty),
// line by line, each on the first depot with a usable path. nullopt when a
// chain cannot be realized in `net`.
inline std::optional<std::vector<BusSchedule>> greedy_schedules(const Network& net, const Instance& inst,
                                                                const std::vector<char>& mask = {}, bool is_ib = false) {
  std::vector<BusSchedule> out;
  for (const auto& line : inst.lines()) {
    for (const auto& chain : greedy_line_chains(inst, line, mask)) {
      BusSchedule b;
      b.is_ib = is_ib;
      for (int dp = 0; dp < static_cast<int>(net.depots.size()) && b.arcs.empty(); ++dp) {
        b.arcs = chain_path(net, chain, dp);
        b.depot = dp;
      }
      if (b.arcs.empty()) return std::nullopt;
      b.cost = path_cost(b.arcs, net);
      out.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace busdrive
