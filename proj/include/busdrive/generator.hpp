#pragma once

// Seeded synthetic multi-line instances: straight lines on a square grid,
// a central depot, bidirectional timetables and short inter-line
// relocation options between nearby terminals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dispatch.hpp"
#include "instance.hpp"

namespace busdrive {

struct GeneratorParams {
  std::uint64_t seed = 1;
  int lines = 6;
  int hours = 6;
  int headway_steps = 4;
  int max_ib = 2;
  int delta_k_steps = 4;
};

namespace detail {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator<(const Cell& a, const Cell& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }
  friend bool operator==(const Cell& a, const Cell& b) = default;
};

inline std::string cell_id(const Cell& c) { return "g" + std::to_string(c.x) + "_" + std::to_string(c.y); }
inline int manhattan(const Cell& a, const Cell& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

// Cells visited by an L-shaped walk from a to b, endpoints included.
inline std::vector<Cell> walk(Cell a, const Cell& b) {
  std::vector<Cell> out{a};
  while (a.x != b.x) {
    a.x += a.x < b.x ? 1 : -1;
    out.push_back(a);
  }
  while (a.y != b.y) {
    a.y += a.y < b.y ? 1 : -1;
    out.push_back(a);
  }
  return out;
}

inline GridTrace trace_of(const std::vector<Cell>& cells) {
  GridTrace t;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    t.push_back({cell_id(cells[i]), static_cast<double>(i) / static_cast<double>(cells.size())});
  }
  return t;
}

}  // namespace detail

inline Instance generate_instance(const GeneratorParams& p) {
  using detail::Cell;
  if (p.lines < 1 || p.hours < 1 || p.headway_steps < 1) throw InstanceError("generator: lines, hours and headway must be positive");
  std::mt19937_64 rng(p.seed);
  const auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const auto uniform_real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  Instance inst;
  inst.horizon = {0, p.hours * 4 - 1, 15};
  inst.sensing.delta_k_steps = p.delta_k_steps;
  inst.costs = CostSpec{};
  inst.delta = 4000.0;
  const int end = inst.horizon.end;
  const int side = p.lines + 2;

  const Cell depot_cell{side / 2, side / 2};
  inst.terminals.push_back({"DEPOT", true, "depot"});
  std::map<std::string, Cell> where;
  where["DEPOT"] = depot_cell;
  std::map<Cell, bool> touched;

  struct Line {
    std::string id;
    std::vector<Cell> cells;
  };
  std::vector<Line> lines;
  for (int r = 0; r < p.lines; ++r) {
    const int len = uniform_int(3, std::min(5, side));
    const bool horizontal = uniform_int(0, 1) == 1;
    Cell a{uniform_int(0, side - 1), uniform_int(0, side - 1)};
    if (horizontal) {
      a.x = uniform_int(0, side - len);
    } else {
      a.y = uniform_int(0, side - len);
    }
    Line line;
    line.id = "L" + std::to_string(r + 1);
    for (int i = 0; i < len; ++i) line.cells.push_back(horizontal ? Cell{a.x + i, a.y} : Cell{a.x, a.y + i});
    for (const auto& c : line.cells) touched[c] = true;
    const std::string ta = line.id + "a";
    const std::string tb = line.id + "b";
    inst.terminals.push_back({ta, false, ""});
    inst.terminals.push_back({tb, false, ""});
    where[ta] = line.cells.front();
    where[tb] = line.cells.back();

    const int minutes_per_cell = uniform_int(10, 15);
    const int dur = std::clamp(static_cast<int>(std::lround(len * minutes_per_cell / 15.0)), 1, end);
    const int headway = p.headway_steps * uniform_int(1, 2);
    auto reversed = line.cells;
    std::reverse(reversed.begin(), reversed.end());
    int n = 0;
    for (int dir = 0; dir < 2; ++dir) {
      const int offset = uniform_int(0, headway - 1);
      for (int t = offset; t + dur <= end; t += headway) {
        TimetabledTrip trip;
        trip.line = line.id;
        trip.from = dir == 0 ? ta : tb;
        trip.to = dir == 0 ? tb : ta;
        trip.depart = t;
        trip.arrive = t + dur;
        trip.grid_trace = detail::trace_of(dir == 0 ? line.cells : reversed);
        trip.id = line.id + "-" + std::to_string(n++);
        inst.trips.push_back(std::move(trip));
      }
    }
    lines.push_back(std::move(line));
  }

  // Inter-line relocations between terminals at most two cells apart; a line
  // without such a neighbour gets its nearest cross-line pair.
  const auto add_relocation = [&](const std::string& a, const std::string& b) {
    for (const auto& r : inst.relocations) {
      if (r.from == a && r.to == b) return;
    }
    for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      RelocationOption r;
      r.from = from;
      r.to = to;
      r.duration_steps = std::max(1, detail::manhattan(where[a], where[b]));
      auto path = detail::walk(where[from], where[to]);
      for (const auto& c : path) touched[c] = true;
      r.grid_trace = detail::trace_of(path);
      inst.relocations.push_back(std::move(r));
    }
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    bool linked = false;
    std::pair<std::string, std::string> nearest;
    int best = 1 << 30;
    for (std::size_t j = 0; j < lines.size(); ++j) {
      if (i == j) continue;
      for (const char* si : {"a", "b"}) {
        for (const char* sj : {"a", "b"}) {
          const std::string a = lines[i].id + si;
          const std::string b = lines[j].id + sj;
          const int d = detail::manhattan(where[a], where[b]);
          if (d <= 2) {
            if (i < j) add_relocation(a, b);
            linked = true;
          }
          if (d < best) {
            best = d;
            nearest = {a, b};
          }
        }
      }
    }
    if (!linked && lines.size() > 1) add_relocation(nearest.first, nearest.second);
  }
  for (const auto& t : inst.terminals) {
    if (t.is_depot) continue;
    const int d = std::max(1, (detail::manhattan(depot_cell, where[t.id]) + 1) / 2);
    for (const auto& [from, to] : {std::pair{std::string("DEPOT"), t.id}, std::pair{t.id, std::string("DEPOT")}}) {
      RelocationOption r;
      r.from = from;
      r.to = to;
      r.duration_steps = d;
      r.pull_only = true;
      inst.relocations.push_back(std::move(r));
    }
  }

  for (const auto& [cell, on] : touched) {
    GridCell g;
    g.id = detail::cell_id(cell);
    const double w = uniform_real(0.2, 1.0);
    g.weights.assign(static_cast<std::size_t>(inst.periods()), w);
    inst.grids.push_back(std::move(g));
  }
  normalize_weights(inst);

  int buses = 0;
  for (const auto& line : lines) buses += static_cast<int>(greedy_line_chains(inst, line.id).size());
  inst.fleet.max_ib = p.max_ib;
  inst.fleet.total_buses = buses + p.max_ib;
  inst.fleet.ib_exact = false;

  const auto violations = validate_instance(inst);
  if (!violations.empty()) throw InstanceError("generator produced invalid instance: " + violations.front());
  return inst;
}

}  // namespace busdrive
