#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "instance.hpp"

namespace busdrive {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ArcKind { Service, Relocation, Wait, PullOut, PullIn };

inline const char* to_string(ArcKind k) {
  switch (k) {
    case ArcKind::Service: return "service";
    case ArcKind::Relocation: return "relocation";
    case ArcKind::Wait: return "wait";
    case ArcKind::PullOut: return "pull_out";
    case ArcKind::PullIn: return "pull_in";
  }
  return "?";
}

inline constexpr int kNoTime = -1;

struct CoverPair {
  int grid = 0;
  int period = 0;
  friend bool operator==(const CoverPair&, const CoverPair&) = default;
  friend auto operator<=>(const CoverPair&, const CoverPair&) = default;
};

// A timed node (terminal, t) or the untimed source/sink layer of a depot.
struct TimedNode {
  int terminal = 0;
  int t = kNoTime;
  bool is_source = false;
  bool is_sink = false;
};

struct Arc {
  ArcKind kind = ArcKind::Wait;
  int from = 0;  // node index
  int to = 0;    // node index
  int from_terminal = 0;
  int from_t = kNoTime;
  int to_terminal = 0;
  int to_t = kNoTime;
  double cost = 0.0;
  std::vector<CoverPair> coverage;  // sorted, unique
  int trip = -1;                    // Service only
  int depot = -1;                   // PullOut / PullIn only
  int duration = 0;                 // steps
};

// Time-expanded network. Node layout: terminal * steps + (t - start) for
// timed nodes, followed by one source and one sink node per depot.
struct Network {
  int n_terminals = 0;
  int start = 0;
  int steps = 0;
  std::vector<int> depots;  // terminal indices
  std::vector<TimedNode> nodes;
  std::vector<Arc> arcs;
  std::vector<std::vector<int>> out_arcs;
  std::vector<std::vector<int>> in_arcs;
  std::vector<int> service_arc_of_trip;

  int n_timed_nodes() const { return n_terminals * steps; }
  int timed_node(int terminal, int t) const { return terminal * steps + (t - start); }
  int source_node(int depot_pos) const { return n_timed_nodes() + 2 * depot_pos; }
  int sink_node(int depot_pos) const { return n_timed_nodes() + 2 * depot_pos + 1; }

  std::vector<int> arcs_of(ArcKind k) const {
    std::vector<int> out;
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      if (arcs[a].kind == k) out.push_back(static_cast<int>(a));
    }
    return out;
  }

  std::size_t count(ArcKind k) const {
    return static_cast<std::size_t>(std::count_if(arcs.begin(), arcs.end(), [k](const Arc& a) { return a.kind == k; }));
  }
};

namespace detail {

inline void index_adjacency(Network& net) {
  net.out_arcs.assign(net.nodes.size(), {});
  net.in_arcs.assign(net.nodes.size(), {});
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    net.out_arcs[static_cast<std::size_t>(net.arcs[a].from)].push_back(static_cast<int>(a));
    net.in_arcs[static_cast<std::size_t>(net.arcs[a].to)].push_back(static_cast<int>(a));
  }
}

}  // namespace detail

// Coverage set of a movement from `from_t` to `to_t` along `trace`. Each
// trace entry occupies [entry, next entry) in time and is counted in every
// sensing period that interval intersects.
inline std::vector<CoverPair> trace_coverage(const GridTrace& trace, int from_t, int to_t, const Instance& inst) {
  std::vector<CoverPair> out;
  const int periods = inst.periods();
  const double dk = inst.sensing.delta_k_steps;
  const double span = to_t - from_t;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto g = inst.grid_index(trace[i].grid);
    if (!g) continue;
    const double enter = from_t + trace[i].entry_fraction * span;
    const double leave = i + 1 < trace.size() ? from_t + trace[i + 1].entry_fraction * span : to_t;
    int k_lo = static_cast<int>(std::floor((enter - inst.horizon.start) / dk + 1e-9));
    int k_hi = static_cast<int>(std::ceil((leave - inst.horizon.start) / dk - 1e-9)) - 1;
    k_lo = std::clamp(k_lo, 0, periods - 1);
    k_hi = std::clamp(std::max(k_hi, k_lo), 0, periods - 1);
    for (int k = k_lo; k <= k_hi; ++k) out.push_back({*g, k});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Grid-period pairs sensed while traversing `arc`.
inline std::vector<CoverPair> arc_coverage(const Arc& arc, const Instance& inst) {
  if (arc.kind == ArcKind::Service && arc.trip >= 0) {
    return trace_coverage(inst.trips[static_cast<std::size_t>(arc.trip)].grid_trace, arc.from_t, arc.to_t, inst);
  }
  if (arc.kind == ArcKind::Relocation) {
    for (const auto& r : inst.relocations) {
      if (r.pull_only) continue;
      if (r.from == inst.terminals[static_cast<std::size_t>(arc.from_terminal)].id &&
          r.to == inst.terminals[static_cast<std::size_t>(arc.to_terminal)].id) {
        return trace_coverage(r.grid_trace, arc.from_t, arc.to_t, inst);
      }
    }
  }
  return {};
}

inline Network build_network(const Instance& inst) {
  Network net;
  net.n_terminals = static_cast<int>(inst.terminals.size());
  net.start = inst.horizon.start;
  net.steps = inst.horizon.steps();
  net.depots = inst.depot_indices();
  if (net.depots.empty()) throw NetworkError("instance has no depot");

  for (int i = 0; i < net.n_terminals; ++i) {
    for (int s = 0; s < net.steps; ++s) net.nodes.push_back({i, net.start + s, false, false});
  }
  for (int d : net.depots) {
    net.nodes.push_back({d, kNoTime, true, false});
    net.nodes.push_back({d, kNoTime, false, true});
  }

  const auto term = [&](const std::string& id) {
    const auto idx = inst.terminal_index(id);
    if (!idx) throw NetworkError("unknown terminal " + id);
    return *idx;
  };
  const int end = inst.horizon.end;

  net.service_arc_of_trip.assign(inst.trips.size(), -1);
  for (std::size_t k = 0; k < inst.trips.size(); ++k) {
    const auto& trip = inst.trips[k];
    Arc a;
    a.kind = ArcKind::Service;
    a.from_terminal = term(trip.from);
    a.to_terminal = term(trip.to);
    a.from_t = trip.depart;
    a.to_t = trip.arrive;
    a.from = net.timed_node(a.from_terminal, a.from_t);
    a.to = net.timed_node(a.to_terminal, a.to_t);
    a.duration = trip.arrive - trip.depart;
    a.cost = inst.step_cost(a.duration);
    a.trip = static_cast<int>(k);
    a.coverage = trace_coverage(trip.grid_trace, a.from_t, a.to_t, inst);
    net.service_arc_of_trip[k] = static_cast<int>(net.arcs.size());
    net.arcs.push_back(std::move(a));
  }

  for (const auto& r : inst.relocations) {
    if (r.pull_only) continue;
    const int from = term(r.from);
    const int to = term(r.to);
    for (int t = inst.horizon.start; t <= end; ++t) {
      const int dur = r.duration_at(t);
      if (t + dur > end) continue;
      Arc a;
      a.kind = ArcKind::Relocation;
      a.from_terminal = from;
      a.to_terminal = to;
      a.from_t = t;
      a.to_t = t + dur;
      a.from = net.timed_node(from, t);
      a.to = net.timed_node(to, t + dur);
      a.duration = dur;
      a.cost = inst.costs.relocation_fixed + inst.step_cost(dur);
      a.coverage = trace_coverage(r.grid_trace, a.from_t, a.to_t, inst);
      net.arcs.push_back(std::move(a));
    }
  }

  for (int i = 0; i < net.n_terminals; ++i) {
    for (int t = inst.horizon.start; t < end; ++t) {
      Arc a;
      a.kind = ArcKind::Wait;
      a.from_terminal = a.to_terminal = i;
      a.from_t = t;
      a.to_t = t + 1;
      a.from = net.timed_node(i, t);
      a.to = net.timed_node(i, t + 1);
      a.duration = 1;
      net.arcs.push_back(std::move(a));
    }
  }

  for (std::size_t dp = 0; dp < net.depots.size(); ++dp) {
    const int d = net.depots[dp];
    const auto& did = inst.terminals[static_cast<std::size_t>(d)].id;
    for (int i = 0; i < net.n_terminals; ++i) {
      const auto& tid = inst.terminals[static_cast<std::size_t>(i)].id;
      const auto out_leg = inst.leg_duration(did, tid, inst.horizon.start);
      if (!out_leg) throw NetworkError("relocation option missing for depot leg " + did + "->" + tid);
      Arc a;
      a.kind = ArcKind::PullOut;
      a.depot = static_cast<int>(dp);
      a.from_terminal = d;
      a.to_terminal = i;
      a.to_t = inst.horizon.start;
      a.from = net.source_node(static_cast<int>(dp));
      a.to = net.timed_node(i, inst.horizon.start);
      a.duration = *out_leg;
      a.cost = inst.costs.fixed_bus + inst.step_cost(*out_leg);
      net.arcs.push_back(std::move(a));
    }
    for (int i = 0; i < net.n_terminals; ++i) {
      const auto& tid = inst.terminals[static_cast<std::size_t>(i)].id;
      const auto in_leg = inst.leg_duration(tid, did, end);
      if (!in_leg) throw NetworkError("relocation option missing for depot leg " + tid + "->" + did);
      Arc a;
      a.kind = ArcKind::PullIn;
      a.depot = static_cast<int>(dp);
      a.from_terminal = i;
      a.to_terminal = d;
      a.from_t = end;
      a.from = net.timed_node(i, end);
      a.to = net.sink_node(static_cast<int>(dp));
      a.duration = *in_leg;
      a.cost = inst.step_cost(*in_leg);
      net.arcs.push_back(std::move(a));
    }
  }

  detail::index_adjacency(net);
  return net;
}

// Terminal -> set of lines whose trips start or end there.
inline std::vector<std::set<std::string>> terminal_lines(const Instance& inst) {
  std::vector<std::set<std::string>> out(inst.terminals.size());
  for (const auto& trip : inst.trips) {
    if (auto i = inst.terminal_index(trip.from)) out[static_cast<std::size_t>(*i)].insert(trip.line);
    if (auto i = inst.terminal_index(trip.to)) out[static_cast<std::size_t>(*i)].insert(trip.line);
  }
  return out;
}

// Copy of `net` without relocation arcs joining terminals of different lines.
inline Network restrict_single_line(const Network& net, const Instance& inst) {
  const auto lines = terminal_lines(inst);
  const auto share_line = [&](int a, int b) {
    const auto& la = lines[static_cast<std::size_t>(a)];
    const auto& lb = lines[static_cast<std::size_t>(b)];
    return std::any_of(la.begin(), la.end(), [&](const std::string& l) { return lb.count(l) > 0; });
  };
  Network out = net;
  out.arcs.clear();
  out.service_arc_of_trip.assign(net.service_arc_of_trip.size(), -1);
  for (const auto& a : net.arcs) {
    if (a.kind == ArcKind::Relocation && !share_line(a.from_terminal, a.to_terminal)) continue;
    if (a.kind == ArcKind::Service) out.service_arc_of_trip[static_cast<std::size_t>(a.trip)] = static_cast<int>(out.arcs.size());
    out.arcs.push_back(a);
  }
  detail::index_adjacency(out);
  return out;
}

// Debug export: kind, from_terminal, from_t, to_terminal, to_t, cost, n_covered_pairs.
inline void write_arcs_csv(std::ostream& os, const Network& net, const Instance& inst) {
  os << "kind,from_terminal,from_t,to_terminal,to_t,cost,n_covered_pairs\n";
  char buf[64];
  for (const auto& a : net.arcs) {
    os << to_string(a.kind) << ',' << inst.terminals[static_cast<std::size_t>(a.from_terminal)].id << ',';
    if (a.from_t != kNoTime) os << a.from_t;
    os << ',' << inst.terminals[static_cast<std::size_t>(a.to_terminal)].id << ',';
    if (a.to_t != kNoTime) os << a.to_t;
    std::snprintf(buf, sizeof(buf), "%.6f", a.cost);
    os << ',' << buf << ',' << a.coverage.size() << '\n';
  }
}

}  // namespace busdrive
