#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "instance.hpp"
#include "network.hpp"
#include "sensing.hpp"

namespace busdrive {

struct BusSchedule {
  int bus_id = 0;
  bool is_ib = false;
  int depot = -1;          // position in Network::depots
  std::vector<int> arcs;   // depot source to depot sink
  double cost = 0.0;
};

struct ScheduleSet {
  std::vector<BusSchedule> buses;
  double fixed_cost = 0.0;
  double operational_cost = 0.0;
  int relocations = 0;

  double total_cost() const { return fixed_cost + operational_cost; }
  int ib_count() const {
    int n = 0;
    for (const auto& b : buses) n += b.is_ib ? 1 : 0;
    return n;
  }
  std::vector<std::vector<int>> ib_paths() const {
    std::vector<std::vector<int>> out;
    for (const auto& b : buses) {
      if (b.is_ib) out.push_back(b.arcs);
    }
    return out;
  }
};

inline double path_cost(const std::vector<int>& arcs, const Network& net) {
  double c = 0.0;
  for (int a : arcs) c += net.arcs[static_cast<std::size_t>(a)].cost;
  return c;
}

// Renumbers buses (IBs first, each class in input order) and fills totals.
inline ScheduleSet make_schedule_set(std::vector<BusSchedule> buses, const Network& net, const Instance& inst) {
  std::stable_partition(buses.begin(), buses.end(), [](const BusSchedule& b) { return b.is_ib; });
  ScheduleSet s;
  double total = 0.0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    auto& b = buses[i];
    b.bus_id = static_cast<int>(i);
    b.cost = path_cost(b.arcs, net);
    total += b.cost;
    for (int a : b.arcs) s.relocations += net.arcs[static_cast<std::size_t>(a)].kind == ArcKind::Relocation ? 1 : 0;
  }
  s.fixed_cost = inst.costs.fixed_bus * static_cast<double>(buses.size());
  s.operational_cost = total - s.fixed_cost;
  s.buses = std::move(buses);
  return s;
}

inline SensingProfile schedule_profile(const ScheduleSet& s, const Network& net, const Instance& inst) {
  return sensing_profile(s.ib_paths(), net, inst);
}

// Original-model objective: total cost minus delta times the sensing score.
inline double combined_objective(const ScheduleSet& s, const Network& net, const Instance& inst) {
  return s.total_cost() - inst.delta * schedule_profile(s, net, inst).score;
}

// Identity of an arc independent of its index in a particular network.
inline auto arc_key(const Arc& a) {
  return std::make_tuple(static_cast<int>(a.kind), a.from_terminal, a.from_t, a.to_terminal, a.to_t, a.trip, a.depot);
}

// Re-expresses schedules built on `from` in terms of `to`'s arc indices.
// Returns false if some arc has no counterpart.
inline bool remap_schedules(ScheduleSet& s, const Network& from, const Network& to) {
  std::map<decltype(arc_key(Arc{})), int> index;
  for (std::size_t a = 0; a < to.arcs.size(); ++a) index.emplace(arc_key(to.arcs[a]), static_cast<int>(a));
  for (auto& b : s.buses) {
    for (int& a : b.arcs) {
      const auto it = index.find(arc_key(from.arcs[static_cast<std::size_t>(a)]));
      if (it == index.end()) return false;
      a = it->second;
    }
  }
  return true;
}

// Post-hoc feasibility checks; an empty result means the schedule set is valid.
inline std::vector<std::string> verify_schedule(const ScheduleSet& s, const Network& net, const Instance& inst) {
  std::vector<std::string> out;
  std::vector<int> served(inst.trips.size(), 0);
  int ib = 0;
  int nb = 0;
  double total = 0.0;
  for (const auto& b : s.buses) {
    const std::string who = "bus " + std::to_string(b.bus_id);
    (b.is_ib ? ib : nb) += 1;
    if (b.arcs.empty()) {
      out.push_back(who + ": empty path");
      continue;
    }
    const auto& first = net.arcs[static_cast<std::size_t>(b.arcs.front())];
    const auto& last = net.arcs[static_cast<std::size_t>(b.arcs.back())];
    if (first.kind != ArcKind::PullOut) out.push_back(who + ": does not start with a pull-out");
    if (last.kind != ArcKind::PullIn) out.push_back(who + ": does not end with a pull-in");
    if (first.kind == ArcKind::PullOut && last.kind == ArcKind::PullIn && first.depot != last.depot) {
      out.push_back("pull-out and pull-in depots differ for " + who);
    }
    int prev_t = kNoTime;
    for (std::size_t i = 0; i < b.arcs.size(); ++i) {
      const auto& a = net.arcs[static_cast<std::size_t>(b.arcs[i])];
      if (i > 0 && net.arcs[static_cast<std::size_t>(b.arcs[i - 1])].to != a.from) {
        out.push_back(who + ": path disconnected at position " + std::to_string(i));
      }
      if (a.from_t != kNoTime && a.to_t != kNoTime && a.to_t <= a.from_t) {
        out.push_back(who + ": time not increasing at position " + std::to_string(i));
      }
      if (a.from_t != kNoTime && prev_t != kNoTime && a.from_t < prev_t) {
        out.push_back(who + ": time not increasing at position " + std::to_string(i));
      }
      if (a.to_t != kNoTime) prev_t = a.to_t;
      if (a.kind == ArcKind::Service) ++served[static_cast<std::size_t>(a.trip)];
    }
    const double c = path_cost(b.arcs, net);
    total += c;
    if (std::abs(c - b.cost) > kMoneyTol * std::max(1.0, std::abs(c))) {
      out.push_back(who + ": reported cost differs from recomputed cost");
    }
  }
  for (std::size_t k = 0; k < served.size(); ++k) {
    if (served[k] == 0) out.push_back("uncovered trip " + inst.trips[k].id);
  }
  if (ib > inst.fleet.max_ib) out.push_back("IB count " + std::to_string(ib) + " exceeds " + std::to_string(inst.fleet.max_ib));
  if (ib + nb > inst.fleet.total_buses) {
    out.push_back("bus count " + std::to_string(ib + nb) + " exceeds fleet " + std::to_string(inst.fleet.total_buses));
  }
  if (inst.fleet.ib_exact && nb > inst.fleet.total_buses - inst.fleet.max_ib) {
    out.push_back("NB count " + std::to_string(nb) + " exceeds fleet minus IB count");
  }
  if (std::abs(total - s.total_cost()) > kMoneyTol * std::max(1.0, std::abs(total))) {
    out.push_back("schedule totals differ from recomputed cost");
  }
  return out;
}

// bus_id, is_ib, seq, arc_kind, from_terminal, from_t, to_terminal, to_t, cost
inline void write_schedule_csv(std::ostream& os, const ScheduleSet& s, const Network& net, const Instance& inst) {
  os << "bus_id,is_ib,seq,arc_kind,from_terminal,from_t,to_terminal,to_t,cost\n";
  char buf[32];
  for (const auto& b : s.buses) {
    for (std::size_t i = 0; i < b.arcs.size(); ++i) {
      const auto& a = net.arcs[static_cast<std::size_t>(b.arcs[i])];
      os << b.bus_id << ',' << (b.is_ib ? 1 : 0) << ',' << i << ',' << to_string(a.kind) << ','
         << inst.terminals[static_cast<std::size_t>(a.from_terminal)].id << ',';
      if (a.from_t != kNoTime) os << a.from_t;
      os << ',' << inst.terminals[static_cast<std::size_t>(a.to_terminal)].id << ',';
      if (a.to_t != kNoTime) os << a.to_t;
      std::snprintf(buf, sizeof(buf), "%.6f", a.cost);
      os << ',' << buf << '\n';
    }
  }
}

}  // namespace busdrive
