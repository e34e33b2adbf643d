#pragma once

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "instance.hpp"
#include "network.hpp"

namespace busdrive {

class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense (grid, period) table.
template <typename T>
struct GridPeriodTable {
  int grids = 0;
  int periods = 0;
  std::vector<T> values;

  GridPeriodTable() = default;
  GridPeriodTable(int g, int k, T init = T{}) : grids(g), periods(k), values(static_cast<std::size_t>(g * k), init) {}

  T& operator()(int g, int k) { return values[static_cast<std::size_t>(g * periods + k)]; }
  const T& operator()(int g, int k) const { return values[static_cast<std::size_t>(g * periods + k)]; }
  friend bool operator==(const GridPeriodTable&, const GridPeriodTable&) = default;
};

using CoverageCounts = GridPeriodTable<int>;

struct ScoreRow {
  int grid = 0;
  int period = 0;
  double mu = 0.0;
  int q = 0;
  double r = 0.0;
  double contribution = 0.0;
};

struct SensingProfile {
  CoverageCounts q;
  GridPeriodTable<double> r;
  double score = 0.0;
  double coverage_rate = 0.0;
  std::vector<ScoreRow> breakdown;
};

inline double effective_sensing_value(int q, const PiecewiseConcave& pwl) {
  if (q < 0) throw std::invalid_argument("coverage count must be non-negative");
  return pwl(static_cast<double>(q));
}

// Checks that `path` runs from a depot source to the same depot's sink
// through consecutive arcs.
inline void check_path(const std::vector<int>& path, const Network& net) {
  if (path.empty()) throw PathError("empty path");
  const auto& first = net.arcs.at(static_cast<std::size_t>(path.front()));
  if (first.kind != ArcKind::PullOut) throw PathError("path does not start with a pull-out arc");
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& prev = net.arcs.at(static_cast<std::size_t>(path[i - 1]));
    const auto& cur = net.arcs.at(static_cast<std::size_t>(path[i]));
    if (prev.to != cur.from) throw PathError("path disconnected at position " + std::to_string(i));
  }
  const auto& last = net.arcs.at(static_cast<std::size_t>(path.back()));
  if (last.kind != ArcKind::PullIn) throw PathError("path does not end with a pull-in arc");
  if (last.depot != first.depot) throw PathError("path returns to a different depot");
}

// q_gk: number of (path, arc) incidences covering (g, k).
inline CoverageCounts coverage_counts(const std::vector<std::vector<int>>& ib_paths, const Network& net, const Instance& inst) {
  CoverageCounts q(static_cast<int>(inst.grids.size()), inst.periods());
  for (const auto& path : ib_paths) {
    check_path(path, net);
    for (int a : path) {
      for (const auto& c : net.arcs[static_cast<std::size_t>(a)].coverage) ++q(c.grid, c.period);
    }
  }
  return q;
}

// Phi = sum mu_gk * f(q_gk) with a per-pair breakdown.
inline std::pair<double, std::vector<ScoreRow>> sensing_score(const CoverageCounts& q, const Instance& inst) {
  std::vector<ScoreRow> rows;
  double phi = 0.0;
  for (int g = 0; g < q.grids; ++g) {
    for (int k = 0; k < q.periods; ++k) {
      ScoreRow row;
      row.grid = g;
      row.period = k;
      row.mu = inst.grids[static_cast<std::size_t>(g)].weights[static_cast<std::size_t>(k)];
      row.q = q(g, k);
      row.r = effective_sensing_value(row.q, inst.pwl);
      row.contribution = row.mu * row.r;
      phi += row.contribution;
      rows.push_back(row);
    }
  }
  return {phi, std::move(rows)};
}

inline SensingProfile sensing_profile(const std::vector<std::vector<int>>& ib_paths, const Network& net, const Instance& inst) {
  SensingProfile p;
  p.q = coverage_counts(ib_paths, net, inst);
  p.r = GridPeriodTable<double>(p.q.grids, p.q.periods);
  auto [phi, rows] = sensing_score(p.q, inst);
  p.score = phi;
  p.breakdown = std::move(rows);
  int covered = 0;
  for (int g = 0; g < p.q.grids; ++g) {
    int total = 0;
    for (int k = 0; k < p.q.periods; ++k) {
      p.r(g, k) = effective_sensing_value(p.q(g, k), inst.pwl);
      total += p.q(g, k);
    }
    if (total >= 1) ++covered;
  }
  p.coverage_rate = p.q.grids > 0 ? static_cast<double>(covered) / p.q.grids : 0.0;
  return p;
}

// grid_id, k, mu, q, r, contribution
inline void write_breakdown_csv(std::ostream& os, const SensingProfile& p, const Instance& inst) {
  os << "grid_id,k,mu,q,r,contribution\n";
  char buf[160];
  for (const auto& row : p.breakdown) {
    std::snprintf(buf, sizeof(buf), ",%d,%.9f,%d,%.6f,%.9f\n", row.period, row.mu, row.q, row.r, row.contribution);
    os << inst.grids[static_cast<std::size_t>(row.grid)].id << buf;
  }
}

// Heatmap data: grid, k, score (= mu * r).
inline void write_heatmap_csv(std::ostream& os, const SensingProfile& p, const Instance& inst) {
  os << "grid,k,score\n";
  char buf[96];
  for (const auto& row : p.breakdown) {
    std::snprintf(buf, sizeof(buf), ",%d,%.9f\n", row.period, row.contribution);
    os << inst.grids[static_cast<std::size_t>(row.grid)].id << buf;
  }
}

}  // namespace busdrive
