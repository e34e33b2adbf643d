#pragma once

// Reference policies: M1 assigns sensors to lines by set covering and lets
// each line dispatch on its own; M2 schedules the mixed fleet without
// inter-line relocations; M3 schedules it on the full network.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "batch.hpp"
#include "dispatch.hpp"
#include "formulations.hpp"
#include "parallel.hpp"
#include "schedule.hpp"

namespace busdrive {

class BaselineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DispatchStrategy { CostMinimal, GreedyFirstAvailable };
enum class SolveMode { Exact, Batch };

inline const char* to_string(SolveMode m) { return m == SolveMode::Exact ? "exact" : "batch"; }

struct MethodReport {
  std::string method;  // M1, M2 or M3
  int fleet_size = 0;  // IB fleet size M
  int buses = 0;       // buses with a non-empty schedule
  double fixed_cost = 0.0;
  double operational_cost = 0.0;
  double total_cost = 0.0;
  double coverage_rate = 0.0;
  double sensing_score = 0.0;  // mean over draws for M1
  double sensing_stdev = 0.0;
  double combined_objective = 0.0;  // mean over draws for M1
  double best_objective = 0.0;      // min over draws for M1
  int relocations = 0;
  std::string source;  // monte_carlo, exact, batch or seed
  double gap = 0.0;
  double best_omega = -1.0;  // batch only
  ScheduleSet schedules;     // M1: best draw
};

struct M1Options {
  int draws = 100;
  std::uint64_t seed = 1;
  DispatchStrategy strategy = DispatchStrategy::CostMinimal;
  SolveOptions solve;
};

// Line chosen for every sensor. Sensors the set cover leaves unassigned go
// round-robin to the selected lines (all lines if none was selected).
inline std::vector<std::string> m1_sensor_lines(const Instance& inst, int sensor_count) {
  if (sensor_count <= 0) return {};
  const SetCoverModel sc = build_m1_set_cover(inst, sensor_count);
  mip::BnbOptions b;
  b.mipgap = 0.0;
  const auto sol = mip::branch_and_bound_solve(sc.model, b);
  if (!sol.has_incumbent()) throw BaselineError("M1 set cover has no solution");
  std::vector<std::string> out(static_cast<std::size_t>(sensor_count));
  std::vector<std::string> selected;
  std::vector<std::size_t> spare;
  for (std::size_t s = 0; s < sc.upsilon.size(); ++s) {
    for (std::size_t r = 0; r < sc.lines.size(); ++r) {
      if (sol.value(sc.upsilon[s][r]) > 0.5) {
        out[s] = sc.lines[r];
        if (std::find(selected.begin(), selected.end(), sc.lines[r]) == selected.end()) selected.push_back(sc.lines[r]);
      }
    }
    if (out[s].empty()) spare.push_back(s);
  }
  std::sort(selected.begin(), selected.end());
  const auto& pool = selected.empty() ? sc.lines : selected;
  for (std::size_t i = 0; i < spare.size() && !pool.empty(); ++i) out[spare[i]] = pool[i % pool.size()];
  return out;
}

namespace detail {

// One cost-only dispatch over all lines sharing the fleet; each bus is filed
// under the line of its first trip.
inline std::vector<std::vector<BusSchedule>> m1_joint_dispatch(const Network& line_net, const Instance& inst, const SolveOptions& opt) {
  const auto lines = inst.lines();
  const BuiltModel bm = build_sp1_model(line_net, inst, opt.model);
  std::vector<ScheduleSet> starts;
  if (auto g = greedy_schedules(line_net, inst)) starts.push_back(make_schedule_set(std::move(*g), line_net, inst));
  const auto sol = detail::solve_with_start(bm, opt, detail::best_start(bm, line_net, inst, starts));
  if (!sol.has_incumbent()) throw BaselineError("M1: no feasible dispatch within the fleet");
  std::vector<std::vector<BusSchedule>> out(lines.size());
  for (auto& b : extract_schedules(sol, bm.reg, line_net, inst).buses) {
    std::size_t l = 0;
    for (int a : b.arcs) {
      const auto& arc = line_net.arcs[static_cast<std::size_t>(a)];
      if (arc.kind != ArcKind::Service) continue;
      const auto& line = inst.trips[static_cast<std::size_t>(arc.trip)].line;
      l = static_cast<std::size_t>(std::find(lines.begin(), lines.end(), line) - lines.begin());
      break;
    }
    out[l].push_back(std::move(b));
  }
  return out;
}

}  // namespace detail

// Per-line dispatch on the single-line network, all buses normal. With the
// cost-minimal strategy, falls back to a joint dispatch when the lines
// together need more buses than the fleet has.
inline std::vector<std::vector<BusSchedule>> m1_line_dispatch(const Network& line_net, const Instance& inst, DispatchStrategy strategy,
                                                              const SolveOptions& opt) {
  const auto lines = inst.lines();
  auto per_line = parallel_map(lines.size(), [&](std::size_t i) {
    std::vector<char> mask(inst.trips.size(), 0);
    for (std::size_t k = 0; k < inst.trips.size(); ++k) mask[k] = inst.trips[k].line == lines[i] ? 1 : 0;
    auto greedy = greedy_schedules(line_net, inst, mask);
    if (strategy == DispatchStrategy::GreedyFirstAvailable) {
      if (!greedy) throw BaselineError("line " + lines[i] + ": greedy chain has no depot path");
      return *greedy;
    }
    const BuiltModel bm = build_sp1_model(line_net, inst, opt.model, mask);
    std::vector<ScheduleSet> starts;
    if (greedy) starts.push_back(make_schedule_set(std::move(*greedy), line_net, inst));
    const auto sol = detail::solve_with_start(bm, opt, detail::best_start(bm, line_net, inst, starts));
    if (!sol.has_incumbent()) throw BaselineError("line " + lines[i] + ": no feasible dispatch");
    return extract_schedules(sol, bm.reg, line_net, inst).buses;
  });
  std::size_t used = 0;
  for (const auto& l : per_line) used += l.size();
  if (strategy == DispatchStrategy::CostMinimal && used > static_cast<std::size_t>(inst.fleet.total_buses)) {
    per_line = detail::m1_joint_dispatch(line_net, inst, opt);
  }
  return per_line;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stdev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline void fill_from(MethodReport& r, const ScheduleSet& s, const SensingProfile& p, double objective) {
  r.buses = static_cast<int>(s.buses.size());
  r.fixed_cost = s.fixed_cost;
  r.operational_cost = s.operational_cost;
  r.total_cost = s.total_cost();
  r.coverage_rate = p.coverage_rate;
  r.sensing_score = p.score;
  r.combined_objective = objective;
  r.best_objective = objective;
  r.relocations = s.relocations;
  r.schedules = s;
}

}  // namespace detail

// `line_net` must be restrict_single_line of the instance's network. Costs do
// not depend on the draw; only which buses carry the sensors does.
inline MethodReport run_m1(const Instance& inst, const Network& line_net, const M1Options& opt) {
  if (opt.draws < 1) throw BaselineError("M1 needs at least one Monte Carlo draw");
  const auto lines = inst.lines();
  const auto per_line = m1_line_dispatch(line_net, inst, opt.strategy, opt.solve);
  const auto sensor_lines = m1_sensor_lines(inst, inst.fleet.max_ib);
  std::vector<int> sensors(lines.size(), 0);
  for (const auto& l : sensor_lines) ++sensors[static_cast<std::size_t>(std::find(lines.begin(), lines.end(), l) - lines.begin())];

  struct Draw {
    ScheduleSet schedules;
    SensingProfile profile;
    double objective = 0.0;
  };
  const auto draws = parallel_map(static_cast<std::size_t>(opt.draws), [&](std::size_t d) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32), static_cast<std::uint32_t>(d)};
    std::mt19937_64 rng(seq);
    std::vector<BusSchedule> buses;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      std::vector<std::size_t> order(per_line[l].size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<BusSchedule> line_buses = per_line[l];
      for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(sensors[l]); ++i) line_buses[order[i]].is_ib = true;
      for (auto& b : line_buses) buses.push_back(std::move(b));
    }
    Draw out;
    out.schedules = make_schedule_set(std::move(buses), line_net, inst);
    out.profile = schedule_profile(out.schedules, line_net, inst);
    out.objective = out.schedules.total_cost() - inst.delta * out.profile.score;
    return out;
  });

  std::size_t best = 0;
  std::vector<double> scores, coverage, objectives;
  for (std::size_t d = 0; d < draws.size(); ++d) {
    scores.push_back(draws[d].profile.score);
    coverage.push_back(draws[d].profile.coverage_rate);
    objectives.push_back(draws[d].objective);
    if (draws[d].objective < draws[best].objective) best = d;
  }
  const auto problems = verify_schedule(draws[best].schedules, line_net, inst);
  if (!problems.empty()) throw BaselineError("M1 schedule infeasible: " + problems.front());

  MethodReport r;
  r.method = "M1";
  r.fleet_size = inst.fleet.max_ib;
  detail::fill_from(r, draws[best].schedules, draws[best].profile, draws[best].objective);
  r.sensing_score = detail::mean_of(scores);
  r.sensing_stdev = detail::stdev_of(scores);
  r.coverage_rate = detail::mean_of(coverage);
  r.combined_objective = detail::mean_of(objectives);
  r.best_objective = draws[best].objective;
  r.source = "monte_carlo";
  return r;
}

struct ScheduleOptions {
  SolveMode mode = SolveMode::Batch;
  BatchOptions batch;  // batch.solve is also used in exact mode
};

// Mixed-fleet schedule on `net`. `seed` (schedules on `net`) is a MIP start
// and a fallback: the result is never worse than it.
inline MethodReport run_scheduled(const std::string& method, const Instance& inst, const Network& net, const ScheduleOptions& opt,
                                  const ScheduleSet* seed) {
  MethodReport r;
  r.method = method;
  r.fleet_size = inst.fleet.max_ib;
  ScheduleSet chosen;
  double objective = mip::kInf;
  if (opt.mode == SolveMode::Exact) {
    const BuiltModel bm = build_full_model(net, inst, opt.batch.solve.model);
    std::vector<ScheduleSet> starts;
    if (seed != nullptr) starts.push_back(*seed);
    const auto sol = detail::solve_with_start(bm, opt.batch.solve, detail::best_start(bm, net, inst, starts));
    if (sol.has_incumbent()) {
      chosen = extract_schedules(sol, bm.reg, net, inst);
      objective = combined_objective(chosen, net, inst);
      r.gap = sol.gap;
      r.source = "exact";
    } else if (seed == nullptr) {
      throw BaselineError(method + ": " + mip::to_string(sol.status));
    }
  } else {
    try {
      const auto b = run_batch(inst, net, opt.batch, seed);
      chosen = b.schedules;
      objective = b.combined_objective;
      r.gap = std::max(b.ib_gap, b.nb_gap);
      r.best_omega = b.best_omega;
      r.source = "batch";
    } catch (const BatchError&) {
      if (seed == nullptr) throw;
    }
  }
  if (seed != nullptr) {
    const double s = combined_objective(*seed, net, inst);
    if (s < objective - 1e-9) {
      chosen = *seed;
      objective = s;
      r.source = "seed";
    }
  }
  const auto problems = verify_schedule(chosen, net, inst);
  if (!problems.empty()) throw BaselineError(method + " schedule infeasible: " + problems.front());
  detail::fill_from(r, chosen, schedule_profile(chosen, net, inst), objective);
  return r;
}

inline MethodReport run_m2(const Instance& inst, const Network& line_net, const ScheduleOptions& opt, const ScheduleSet* seed = nullptr) {
  return run_scheduled("M2", inst, line_net, opt, seed);
}

inline MethodReport run_m3(const Instance& inst, const Network& net, const ScheduleOptions& opt, const ScheduleSet* seed = nullptr) {
  return run_scheduled("M3", inst, net, opt, seed);
}

struct CompareOptions {
  std::vector<int> sizes;  // IB fleet sizes; empty: the instance's max_ib
  M1Options m1;
  ScheduleOptions scheduled;
};

// For every IB fleet size: M1, then M2 seeded with the best M1 draw, then M3
// seeded with the M2 plan. The seeding makes the objective chain hold by
// construction even when the solves stop at a gap.
inline std::vector<MethodReport> compare(const Instance& inst, const Network& net, const CompareOptions& opt) {
  std::vector<int> sizes = opt.sizes.empty() ? std::vector<int>{inst.fleet.max_ib} : opt.sizes;
  const Network line_net = restrict_single_line(net, inst);
  const auto per_size = parallel_map(sizes.size(), [&](std::size_t i) {
    Instance sized = inst;
    sized.fleet.max_ib = sizes[i];
    if (sizes[i] < 0 || sizes[i] > sized.fleet.total_buses) throw BaselineError("IB fleet size out of range");
    std::vector<MethodReport> rows;
    rows.push_back(run_m1(sized, line_net, opt.m1));
    rows.push_back(run_m2(sized, line_net, opt.scheduled, &rows[0].schedules));
    ScheduleSet seed = rows[1].schedules;
    if (!remap_schedules(seed, line_net, net)) throw IntegrityError("M2 plan does not embed in the full network");
    rows.push_back(run_m3(sized, net, opt.scheduled, &seed));
    return rows;
  });
  std::vector<MethodReport> out;
  for (const auto& rows : per_size) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

// Relative sensing-score change against the M1 row of the same fleet size.
inline std::optional<double> score_delta_vs_m1(const MethodReport& r, const std::vector<MethodReport>& all) {
  for (const auto& m : all) {
    if (m.method == "M1" && m.fleet_size == r.fleet_size) {
      if (m.sensing_score == 0.0) return r.sensing_score == 0.0 ? std::optional<double>(0.0) : std::nullopt;
      return (r.sensing_score - m.sensing_score) / m.sensing_score;
    }
  }
  return std::nullopt;
}

// fleet_size, method, buses, op_cost, total_cost, coverage, score, score_delta_vs_M1
inline void write_compare_csv(std::ostream& os, const std::vector<MethodReport>& rows) {
  os << "fleet_size,method,buses,op_cost,total_cost,coverage,score,score_delta_vs_M1\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.6f,%.6f,%.6f,%.6f,", r.fleet_size, r.method.c_str(), r.buses, r.operational_cost,
                  r.total_cost, r.coverage_rate, r.sensing_score);
    os << buf;
    if (const auto d = score_delta_vs_m1(r, rows)) {
      std::snprintf(buf, sizeof(buf), "%.6f", *d);
      os << buf;
    }
    os << '\n';
  }
}

inline ordered_json compare_json(const std::vector<MethodReport>& rows) {
  ordered_json j = ordered_json::array();
  for (const auto& r : rows) {
    const auto d = score_delta_vs_m1(r, rows);
    j.push_back({{"fleet_size", r.fleet_size},
                 {"method", r.method},
                 {"source", r.source},
                 {"buses", r.buses},
                 {"fixed_cost", r.fixed_cost},
                 {"operational_cost", r.operational_cost},
                 {"total_cost", r.total_cost},
                 {"coverage_rate", r.coverage_rate},
                 {"sensing_score", r.sensing_score},
                 {"sensing_stdev", r.sensing_stdev},
                 {"combined_objective", r.combined_objective},
                 {"best_objective", r.best_objective},
                 {"relocations", r.relocations},
                 {"gap", r.gap},
                 {"best_omega", r.best_omega >= 0.0 ? ordered_json(r.best_omega) : ordered_json(nullptr)},
                 {"score_delta_vs_M1", d ? ordered_json(*d) : ordered_json(nullptr)}});
  }
  return j;
}

}  // namespace busdrive
