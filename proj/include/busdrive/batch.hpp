#pragma once

// Batch scheduling: an IB stage that trades trip coverage against sensing
// with weight omega, followed by an NB stage serving whatever the IBs left
// uncovered, repeated over a grid of omega values. Also the sub-problems
// and bounds that bracket the full-model optimum.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispatch.hpp"
#include "formulations.hpp"
#include "mip/brute_force.hpp"
#include "parallel.hpp"
#include "schedule.hpp"
#include "sensing.hpp"

namespace busdrive {

class BatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check_omega_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw BatchError("omega grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0) throw BatchError("omega grid values must be finite and non-negative");
    if (i > 0 && grid[i] <= grid[i - 1]) throw BatchError("omega grid must be strictly increasing");
  }
}

struct BatchOptions {
  std::vector<double> omega_grid{0.5, 1.0, 1.5};
  bool include_zero = true;  // evaluate omega = 0 as well
  SolveOptions solve;
};

// One IB stage followed by one NB stage.
struct StageOutcome {
  bool feasible = false;
  std::string reason;
  ScheduleSet schedules;
  SensingProfile sensing;
  double objective = mip::kInf;  // cost - delta * score, recomputed from schedules
  double ib_gap = 0.0;
  double nb_gap = 0.0;
};

namespace detail {

inline std::vector<char> uncovered_trips(const std::vector<BusSchedule>& ib, const Network& net, const Instance& inst) {
  std::vector<char> out(inst.trips.size(), 1);
  for (const auto& b : ib) {
    for (int a : b.arcs) {
      const auto& arc = net.arcs[static_cast<std::size_t>(a)];
      if (arc.kind == ArcKind::Service) out[static_cast<std::size_t>(arc.trip)] = 0;
    }
  }
  return out;
}

// Feasible candidate with the best model objective, as a MIP start.
inline std::vector<double> best_start(const BuiltModel& bm, const Network& net, const Instance& inst,
                                      const std::vector<ScheduleSet>& candidates) {
  std::vector<double> best;
  double best_obj = mip::kInf;
  const double sign = bm.model.sense() == mip::Sense::Maximize ? -1.0 : 1.0;
  for (const auto& c : candidates) {
    auto val = assignment_from(c, bm, net, inst);
    if (val.empty() || !bm.model.is_feasible(val)) continue;
    const double obj = sign * bm.model.evaluate(val);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(val);
    }
  }
  return best;
}

inline mip::Solution solve_with_start(const BuiltModel& bm, const SolveOptions& opt, std::vector<double> start) {
  mip::BnbOptions b;
  b.mipgap = opt.mipgap;
  b.node_limit = opt.node_limit;
  b.time_limit_s = opt.time_limit_s;
  b.initial = std::move(start);
  return mip::branch_and_bound_solve(bm.model, b);
}

// Paths traced through a fractional IB flow: start at the depot with the most
// pull-out flow and always take the out-arc carrying the most remaining flow.
// Returns the prefixes (1, 2, ..., count paths) as start candidates.
inline std::vector<ScheduleSet> lp_guided_candidates(const BuiltModel& bm, const std::vector<double>& x, const Network& net,
                                                     const Instance& inst, int count) {
  const auto& reg = bm.reg;
  const std::size_t A = net.arcs.size();
  std::vector<double> flow(A, 0.0);
  if (reg.form == Formulation::PerBus) {
    for (std::size_t b = 0; b < reg.y.size(); ++b) {
      const bool ib = reg.x.empty() ? reg.bus_is_ib[b] != 0 : x[static_cast<std::size_t>(reg.x[b])] > 0.5;
      if (!ib) continue;
      for (std::size_t a = 0; a < A; ++a) flow[a] += x[static_cast<std::size_t>(reg.y[b][a])];
    }
  } else {
    for (const auto& f : reg.flow[static_cast<std::size_t>(kIbClass)]) {
      for (std::size_t a = 0; a < A; ++a) {
        if (f[a] >= 0) flow[a] += x[static_cast<std::size_t>(f[a])];
      }
    }
  }
  std::vector<ScheduleSet> out;
  std::vector<BusSchedule> paths;
  for (int p = 0; p < count; ++p) {
    int depot = -1;
    double most = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      if (net.arcs[a].kind == ArcKind::PullOut && (depot < 0 || flow[a] > most)) {
        most = flow[a];
        depot = net.arcs[a].depot;
      }
    }
    if (depot < 0) break;
    BusSchedule bus;
    bus.is_ib = true;
    bus.depot = depot;
    int node = net.source_node(depot);
    while (node >= 0 && !net.nodes[static_cast<std::size_t>(node)].is_sink) {
      int pick = -1;
      int fallback = -1;
      for (int a : net.out_arcs[static_cast<std::size_t>(node)]) {
        const auto& arc = net.arcs[static_cast<std::size_t>(a)];
        if ((arc.kind == ArcKind::PullOut || arc.kind == ArcKind::PullIn) && arc.depot != depot) continue;
        if (pick < 0 || flow[static_cast<std::size_t>(a)] > flow[static_cast<std::size_t>(pick)]) pick = a;
        if (fallback < 0 && (arc.kind == ArcKind::Wait || arc.kind == ArcKind::PullIn)) fallback = a;
      }
      if (pick >= 0 && flow[static_cast<std::size_t>(pick)] <= 1e-9 && fallback >= 0) pick = fallback;
      if (pick < 0) {
        node = -1;
        break;
      }
      bus.arcs.push_back(pick);
      node = net.arcs[static_cast<std::size_t>(pick)].to;
    }
    if (node < 0) break;
    for (int a : bus.arcs) flow[static_cast<std::size_t>(a)] -= 1.0;
    paths.push_back(std::move(bus));
    out.push_back(make_schedule_set(paths, net, inst));
  }
  return out;
}

inline std::vector<BusSchedule> buses_of(const ScheduleSet& s, bool ib) {
  std::vector<BusSchedule> out;
  for (const auto& b : s.buses) {
    if (b.is_ib == ib) out.push_back(b);
  }
  return out;
}

// NB stage for the trips left by `ib`, then assembly of the combined set.
inline StageOutcome complete_with_nb(std::vector<BusSchedule> ib, double ib_gap, const Network& net, const Instance& inst,
                                     const SolveOptions& opt, const ScheduleSet* seed) {
  StageOutcome out;
  out.ib_gap = ib_gap;
  const int n_ib = static_cast<int>(ib.size());
  const int nb_fleet = inst.fleet.total_buses - (inst.fleet.ib_exact ? inst.fleet.max_ib : n_ib);
  const auto uncovered = uncovered_trips(ib, net, inst);
  std::vector<BusSchedule> nb;
  if (std::any_of(uncovered.begin(), uncovered.end(), [](char c) { return c != 0; })) {
    if (nb_fleet <= 0) {
      out.reason = "no normal buses left for uncovered trips";
      return out;
    }
    const BuiltModel bm = build_nb_submodel(net, inst, uncovered, nb_fleet, opt.model);
    std::vector<ScheduleSet> starts;
    if (auto g = greedy_schedules(net, inst, uncovered)) starts.push_back(make_schedule_set(std::move(*g), net, inst));
    if (seed != nullptr) starts.push_back(make_schedule_set(buses_of(*seed, false), net, inst));
    const auto sol = solve_with_start(bm, opt, best_start(bm, net, inst, starts));
    if (!sol.has_incumbent()) {
      out.reason = std::string("NB stage: ") + mip::to_string(sol.status);
      return out;
    }
    out.nb_gap = sol.gap;
    for (auto& b : extract_schedules(sol, bm.reg, net, inst).buses) {
      b.is_ib = false;
      nb.push_back(std::move(b));
    }
  }
  for (auto& b : nb) ib.push_back(std::move(b));
  out.schedules = make_schedule_set(std::move(ib), net, inst);
  out.sensing = schedule_profile(out.schedules, net, inst);
  out.objective = out.schedules.total_cost() - inst.delta * out.sensing.score;
  out.feasible = true;
  return out;
}

inline std::vector<double> omega_candidates(const BatchOptions& opt) {
  check_omega_grid(opt.omega_grid);
  std::vector<double> g = opt.omega_grid;
  if (opt.include_zero && g.front() > 0.0) g.insert(g.begin(), 0.0);
  return g;
}

}  // namespace detail

// IB sub-model at `omega`, then the NB sub-model on the remaining trips.
inline StageOutcome batch_point(const Network& net, const Instance& inst, double omega, const SolveOptions& opt,
                                const ScheduleSet* seed = nullptr) {
  std::vector<BusSchedule> ib;
  double ib_gap = 0.0;
  if (inst.fleet.max_ib > 0) {
    const BuiltModel bm = build_ib_submodel(net, inst, omega, inst.fleet.max_ib, opt.model);
    std::vector<ScheduleSet> starts{ScheduleSet{}};
    const auto relaxed = mip::lp_relax_solve(bm.model);
    if (relaxed.has_incumbent()) {
      for (auto& c : detail::lp_guided_candidates(bm, relaxed.values, net, inst, inst.fleet.max_ib)) starts.push_back(std::move(c));
    }
    if (seed != nullptr) starts.push_back(make_schedule_set(detail::buses_of(*seed, true), net, inst));
    const auto sol = detail::solve_with_start(bm, opt, detail::best_start(bm, net, inst, starts));
    if (!sol.has_incumbent()) {
      StageOutcome out;
      out.reason = std::string("IB stage: ") + mip::to_string(sol.status);
      return out;
    }
    ib_gap = sol.gap;
    for (auto& b : extract_schedules(sol, bm.reg, net, inst).buses) {
      b.is_ib = true;
      ib.push_back(std::move(b));
    }
  }
  return detail::complete_with_nb(std::move(ib), ib_gap, net, inst, opt, seed);
}

struct OmegaTracePoint {
  double omega = 0.0;
  double objective = mip::kInf;
  bool feasible = false;
};

struct BatchResult {
  double best_omega = 0.0;
  ScheduleSet schedules;  // IBs first
  double combined_objective = 0.0;
  double operational_cost = 0.0;
  double fixed_cost = 0.0;
  SensingProfile sensing;
  std::vector<OmegaTracePoint> trace;
  double ib_gap = 0.0;  // stage gaps at the chosen omega
  double nb_gap = 0.0;

  std::vector<BusSchedule> ib_schedules() const { return detail::buses_of(schedules, true); }
  std::vector<BusSchedule> nb_schedules() const { return detail::buses_of(schedules, false); }
};

// Evaluates every grid point and keeps the lowest combined objective; ties go
// to the smaller omega. `seed` only supplies MIP starts.
inline BatchResult run_batch(const Instance& inst, const Network& net, const BatchOptions& opt = {},
                             const ScheduleSet* seed = nullptr) {
  const auto grid = detail::omega_candidates(opt);
  const auto outcomes = parallel_map(grid.size(), [&](std::size_t i) { return batch_point(net, inst, grid[i], opt.solve, seed); });
  BatchResult res;
  int best = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& o = outcomes[i];
    res.trace.push_back({grid[i], o.objective, o.feasible});
    if (o.feasible && (best < 0 || o.objective < outcomes[static_cast<std::size_t>(best)].objective)) best = static_cast<int>(i);
  }
  if (best < 0) throw BatchError("no feasible batch schedule");
  const auto& o = outcomes[static_cast<std::size_t>(best)];
  const auto problems = verify_schedule(o.schedules, net, inst);
  if (!problems.empty()) throw IntegrityError("batch schedule failed verification: " + problems.front());
  res.best_omega = grid[static_cast<std::size_t>(best)];
  res.schedules = o.schedules;
  res.combined_objective = o.objective;
  res.operational_cost = o.schedules.operational_cost;
  res.fixed_cost = o.schedules.fixed_cost;
  res.sensing = o.sensing;
  res.ib_gap = o.ib_gap;
  res.nb_gap = o.nb_gap;
  return res;
}

// ---- sub-problems and bounds ---------------------------------------------

enum class Subproblem { SP1, SP2, SP3 };

inline const char* to_string(Subproblem s) {
  switch (s) {
    case Subproblem::SP1: return "SP1";
    case Subproblem::SP2: return "SP2";
    case Subproblem::SP3: return "SP3";
  }
  return "?";
}

// First-stage model of a sub-problem. SP2 and SP3 continue with an NB stage
// on the trips their IBs leave uncovered.
inline BuiltModel build_subproblem(const Network& net, const Instance& inst, Subproblem which, const ModelOptions& opt = {}) {
  switch (which) {
    case Subproblem::SP1: return build_sp1_model(net, inst, opt);
    case Subproblem::SP2: return build_ib_submodel(net, inst, 0.0, inst.fleet.max_ib, opt);
    case Subproblem::SP3: return build_ds_submodel(net, inst, inst.fleet.max_ib, opt);
  }
  throw BatchError("unknown sub-problem");
}

struct SubproblemResult {
  double cost = 0.0;        // total operational cost C
  double score = 0.0;       // sensing score R of the IB schedules
  double cost_bound = 0.0;  // proven lower bound on C (SP1)
  double score_bound = 0.0; // proven upper bound on R (SP3)
  double gap = 0.0;
  ScheduleSet schedules;
};

inline SubproblemResult solve_subproblem(const Network& net, const Instance& inst, Subproblem which, const SolveOptions& opt) {
  SubproblemResult res;
  const auto fail = [&](const std::string& why) { return BatchError(std::string(to_string(which)) + " infeasible: " + why); };
  const auto fill = [&](const StageOutcome& o) {
    if (!o.feasible) throw fail(o.reason);
    res.schedules = o.schedules;
    res.cost = o.schedules.total_cost();
    res.score = o.sensing.score;
    res.cost_bound = res.cost;
    res.score_bound = res.score;
    res.gap = std::max(o.ib_gap, o.nb_gap);
  };
  if (which == Subproblem::SP1) {
    const BuiltModel bm = build_sp1_model(net, inst, opt.model);
    std::vector<ScheduleSet> starts;
    if (auto g = greedy_schedules(net, inst)) starts.push_back(make_schedule_set(std::move(*g), net, inst));
    const auto sol = detail::solve_with_start(bm, opt, detail::best_start(bm, net, inst, starts));
    if (!sol.has_incumbent()) throw fail(mip::to_string(sol.status));
    res.schedules = extract_schedules(sol, bm.reg, net, inst);
    res.cost = res.schedules.total_cost();
    res.cost_bound = std::min(res.cost, sol.best_bound);
    res.gap = sol.gap;
    return res;
  }
  if (which == Subproblem::SP2) {
    fill(batch_point(net, inst, 0.0, opt));
    return res;
  }
  if (inst.fleet.max_ib == 0) {
    fill(detail::complete_with_nb({}, 0.0, net, inst, opt, nullptr));
    return res;
  }
  // SP3: maximize the sensing score, then the cheapest IB plan keeping it.
  const BuiltModel ds = build_ds_submodel(net, inst, inst.fleet.max_ib, opt.model);
  const auto s1 = detail::solve_with_start(ds, opt, detail::best_start(ds, net, inst, {ScheduleSet{}}));
  if (!s1.has_incumbent()) throw fail(std::string("DS stage: ") + mip::to_string(s1.status));
  BuiltModel lex = ds;
  std::vector<mip::Term> keep;
  for (int j = 0; j < lex.model.num_vars(); ++j) {
    const double c = lex.model.objective()[static_cast<std::size_t>(j)];
    if (c != 0.0) keep.push_back({j, c});
    lex.model.set_obj(j, 0.0);
  }
  lex.model.add_row(keep, mip::RowSense::Ge, s1.objective - 1e-6, "keep_ds");
  lex.model.set_sense(mip::Sense::Minimize);
  detail::add_arc_costs(lex, net, 1.0, [](const Arc&) { return true; });
  const auto s2 = detail::solve_with_start(lex, opt, s1.values);
  const mip::Solution& chosen = s2.has_incumbent() ? s2 : s1;
  std::vector<BusSchedule> ib;
  for (auto& b : extract_schedules(chosen, ds.reg, net, inst).buses) {
    b.is_ib = true;
    ib.push_back(std::move(b));
  }
  fill(detail::complete_with_nb(std::move(ib), std::max(s1.gap, s2.gap), net, inst, opt, nullptr));
  res.score_bound = std::max(res.score, s1.best_bound);
  return res;
}

struct BoundsReport {
  double c_nb = 0.0;
  double c_nb_bound = 0.0;
  double c_bs = 0.0;
  double r_bs = 0.0;
  double c_ds = 0.0;
  double r_ds = 0.0;
  double r_ds_bound = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::optional<double> worst_case_gap;  // empty when the lower bound is not positive
};

// LB = C_NB - delta * R_DS from proven bounds; UB = max of the two extreme
// plans' objectives. SP2 is the omega = 0 batch point, so a batch run that
// includes omega = 0 never exceeds UB.
inline BoundsReport compute_bounds(const Instance& inst, const Network& net, const SolveOptions& opt = {}) {
  const std::vector<Subproblem> which{Subproblem::SP1, Subproblem::SP2, Subproblem::SP3};
  const auto sp = parallel_map(which.size(), [&](std::size_t i) { return solve_subproblem(net, inst, which[i], opt); });
  BoundsReport b;
  b.c_nb = sp[0].cost;
  b.c_nb_bound = sp[0].cost_bound;
  b.c_bs = sp[1].cost;
  b.r_bs = sp[1].score;
  b.c_ds = sp[2].cost;
  b.r_ds = sp[2].score;
  b.r_ds_bound = sp[2].score_bound;
  b.lower_bound = b.c_nb_bound - inst.delta * b.r_ds_bound;
  b.upper_bound = std::max(b.c_ds - inst.delta * b.r_ds, b.c_bs - inst.delta * b.r_bs);
  if (b.lower_bound > b.upper_bound + kMoneyTol * std::max(1.0, std::abs(b.upper_bound))) {
    throw IntegrityError("lower bound exceeds upper bound");
  }
  if (b.lower_bound > 0.0) b.worst_case_gap = b.upper_bound / b.lower_bound - 1.0;
  return b;
}

// ---- omega sensitivity ------------------------------------------------------

struct SensitivityRow {
  double omega = 0.0;
  double objective = mip::kInf;
  bool feasible = false;
  std::optional<double> gap;  // (objective - reference) / |reference|
};

struct OmegaSensitivity {
  std::string reference_kind;  // "exact" or "lower_bound"
  double reference = 0.0;
  std::vector<SensitivityRow> rows;
};

inline std::vector<double> omega_range(double lo, double hi, double step) {
  if (!(step > 0.0)) throw BatchError("omega increment must be positive");
  if (hi < lo) throw BatchError("omega range is empty");
  std::vector<double> out;
  const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (long i = 0; i < n; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  return out;
}

// Gap reference: brute force on the full model when it has at most
// `oracle_limit` integer variables, otherwise the bounds' lower bound (so
// gaps are then never negative).
inline OmegaSensitivity omega_sensitivity(const Instance& inst, const Network& net, double lo, double hi, double step,
                                          const SolveOptions& opt = {}, int oracle_limit = 24) {
  const auto grid = omega_range(lo, hi, step);
  OmegaSensitivity out;
  const BuiltModel full = build_full_model(net, inst, opt.model);
  if (static_cast<int>(full.model.count_integral()) <= oracle_limit) {
    const auto exact = mip::brute_force_solve(full.model, oracle_limit);
    if (!exact.has_incumbent()) throw BatchError("full model infeasible");
    out.reference_kind = "exact";
    out.reference = exact.objective;
  } else {
    out.reference_kind = "lower_bound";
    out.reference = compute_bounds(inst, net, opt).lower_bound;
  }
  const auto points = parallel_map(grid.size(), [&](std::size_t i) { return batch_point(net, inst, grid[i], opt); });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SensitivityRow r;
    r.omega = grid[i];
    r.feasible = points[i].feasible;
    r.objective = points[i].objective;
    if (r.feasible && out.reference != 0.0) r.gap = (r.objective - out.reference) / std::abs(out.reference);
    out.rows.push_back(r);
  }
  return out;
}

// ---- reports ----------------------------------------------------------------

namespace detail {
inline ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }
}  // namespace detail

// {lb, ub, worst_case_gap, batch_objective, best_omega, trace: [...]}; parts
// that were not computed are null.
inline ordered_json batch_report_json(const BatchResult* batch, const BoundsReport* bounds) {
  ordered_json j;
  j["lb"] = bounds ? detail::finite_or_null(bounds->lower_bound) : ordered_json(nullptr);
  j["ub"] = bounds ? detail::finite_or_null(bounds->upper_bound) : ordered_json(nullptr);
  j["worst_case_gap"] = bounds && bounds->worst_case_gap ? ordered_json(*bounds->worst_case_gap) : ordered_json(nullptr);
  j["batch_objective"] = batch ? detail::finite_or_null(batch->combined_objective) : ordered_json(nullptr);
  j["best_omega"] = batch ? ordered_json(batch->best_omega) : ordered_json(nullptr);
  j["trace"] = ordered_json::array();
  if (batch) {
    for (const auto& t : batch->trace) {
      j["trace"].push_back({{"omega", t.omega}, {"objective", detail::finite_or_null(t.objective)}, {"feasible", t.feasible}});
    }
    j["batch"] = {{"operational_cost", batch->operational_cost},
                  {"fixed_cost", batch->fixed_cost},
                  {"sensing_score", batch->sensing.score},
                  {"coverage_rate", batch->sensing.coverage_rate},
                  {"ib_buses", batch->schedules.ib_count()},
                  {"nb_buses", static_cast<int>(batch->schedules.buses.size()) - batch->schedules.ib_count()},
                  {"ib_gap", batch->ib_gap},
                  {"nb_gap", batch->nb_gap}};
  }
  if (bounds) {
    j["bounds"] = {{"c_nb", bounds->c_nb}, {"c_nb_bound", bounds->c_nb_bound}, {"c_bs", bounds->c_bs},
                   {"r_bs", bounds->r_bs}, {"c_ds", bounds->c_ds},         {"r_ds", bounds->r_ds},
                   {"r_ds_bound", bounds->r_ds_bound}};
  }
  return j;
}

}  // namespace busdrive
