#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace busdrive {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Money comparisons throughout the library use this absolute tolerance.
inline constexpr double kMoneyTol = 1e-6;

class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Planning horizon on the discrete time axis. Timed nodes exist at every
// integer step in [start, end], so the horizon holds end - start + 1 steps.
struct Horizon {
  int start = 0;
  int end = 0;
  int step_minutes = 15;

  int steps() const { return end - start + 1; }
  bool contains(int t) const { return t >= start && t <= end; }
};

struct Terminal {
  std::string id;
  bool is_depot = false;
  std::string name;
};

struct TraceEntry {
  std::string grid;
  double entry_fraction = 0.0;
};
using GridTrace = std::vector<TraceEntry>;

struct TimetabledTrip {
  std::string id;
  std::string line;
  std::string from;
  std::string to;
  int depart = 0;
  int arrive = 0;
  GridTrace grid_trace;
};

// A deadhead movement between two terminals. `time_dependent` overrides
// `duration_steps` from the given departure step onwards (sorted by step).
// A `pull_only` option only supplies depot leg travel times and never
// produces relocation arcs.
struct RelocationOption {
  std::string from;
  std::string to;
  int duration_steps = 1;
  GridTrace grid_trace;
  std::vector<std::pair<int, int>> time_dependent;
  bool pull_only = false;

  int duration_at(int t) const {
    int d = duration_steps;
    for (const auto& [from_step, dur] : time_dependent) {
      if (t >= from_step) d = dur;
    }
    return d;
  }
};

struct GridCell {
  std::string id;
  std::vector<double> weights;  // mu_gk, one entry per sensing period
};

struct SensingSpec {
  int delta_k_steps = 1;

  int periods(const Horizon& h) const {
    if (delta_k_steps <= 0) return 0;
    return (h.steps() + delta_k_steps - 1) / delta_k_steps;
  }
};

struct Segment {
  double slope = 0.0;
  double intercept = 0.0;
};

// Concave piecewise affine function evaluated as the lower envelope of its
// segments, which is exactly the feasible region used inside the LP.
struct PiecewiseConcave {
  std::vector<Segment> segments;

  double operator()(double q) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : segments) best = std::min(best, s.slope * q + s.intercept);
    return best;
  }

  // Three-segment envelope of sqrt(q).
  static PiecewiseConcave sqrt3() {
    return PiecewiseConcave{{{1.0, 0.0}, {0.366, 0.634}, {0.0, 1.732}}};
  }
};

struct CostSpec {
  double fixed_bus = 856.0;
  double per_minute = 1.4;
  double relocation_fixed = 20.0;
};

struct FleetSpec {
  int total_buses = 1;
  int max_ib = 0;
  bool ib_exact = false;
};

struct Instance {
  Horizon horizon;
  std::vector<Terminal> terminals;
  std::vector<TimetabledTrip> trips;
  std::vector<RelocationOption> relocations;
  std::vector<GridCell> grids;
  SensingSpec sensing;
  PiecewiseConcave pwl = PiecewiseConcave::sqrt3();
  CostSpec costs;
  FleetSpec fleet;
  double delta = 4000.0;

  int periods() const { return sensing.periods(horizon); }

  std::optional<int> terminal_index(const std::string& id) const {
    for (std::size_t i = 0; i < terminals.size(); ++i) {
      if (terminals[i].id == id) return static_cast<int>(i);
    }
    return std::nullopt;
  }

  std::optional<int> grid_index(const std::string& id) const {
    for (std::size_t i = 0; i < grids.size(); ++i) {
      if (grids[i].id == id) return static_cast<int>(i);
    }
    return std::nullopt;
  }

  std::vector<int> depot_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < terminals.size(); ++i) {
      if (terminals[i].is_depot) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  // Sorted distinct line labels.
  std::vector<std::string> lines() const {
    std::set<std::string> s;
    for (const auto& t : trips) s.insert(t.line);
    return {s.begin(), s.end()};
  }

  double total_weight() const {
    double sum = 0.0;
    for (const auto& g : grids) {
      for (double w : g.weights) sum += w;
    }
    return sum;
  }

  // Travel time of the depot leg from `from` to `to` departing at `t`.
  // Zero when both ends coincide.
  std::optional<int> leg_duration(const std::string& from, const std::string& to, int t) const {
    if (from == to) return 0;
    for (const auto& r : relocations) {
      if (r.from == from && r.to == to) return r.duration_at(t);
    }
    return std::nullopt;
  }

  double step_cost(int steps) const {
    return costs.per_minute * static_cast<double>(steps) * static_cast<double>(horizon.step_minutes);
  }
};

// ---------------------------------------------------------------------------
// Weight handling

inline void normalize_weights(Instance& inst) {
  const double total = inst.total_weight();
  if (!(total > 0.0)) throw InstanceError("invariant violated: grid weights must have a positive sum");
  if (std::abs(total - 1.0) <= 1e-12) return;  // keeps serialize/parse a fixed point
  for (auto& g : inst.grids) {
    for (double& w : g.weights) w /= total;
  }
}

// Rebuckets every grid's weight over a new period count: each grid keeps its
// total weight, spread uniformly over the new periods, then renormalizes.
inline void rebucket_weights(Instance& inst, int periods) {
  for (auto& g : inst.grids) {
    double total = 0.0;
    for (double w : g.weights) total += w;
    g.weights.assign(static_cast<std::size_t>(periods), total / periods);
  }
  normalize_weights(inst);
}

// ---------------------------------------------------------------------------
// Validation

inline void check_trace(const GridTrace& trace, const std::set<std::string>& grid_ids,
                        const std::string& owner, std::vector<std::string>& out) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace[i];
    if (!grid_ids.count(e.grid)) out.push_back(owner + ": unknown grid " + e.grid);
    if (e.entry_fraction < 0.0 || e.entry_fraction >= 1.0) {
      out.push_back(owner + ": entry fraction outside [0,1)");
    }
    if (i == 0 && e.entry_fraction != 0.0) out.push_back(owner + ": first entry fraction must be 0");
    if (i > 0 && !(e.entry_fraction > trace[i - 1].entry_fraction)) {
      out.push_back(owner + ": entry fractions not strictly increasing");
    }
  }
}

inline std::vector<std::string> validate_pwl(const PiecewiseConcave& pwl) {
  std::vector<std::string> out;
  const auto& s = pwl.segments;
  if (s.empty()) {
    out.push_back("pwl: no segments");
    return out;
  }
  for (std::size_t l = 1; l < s.size(); ++l) {
    if (!(s[l].slope < s[l - 1].slope)) out.push_back("pwl: slopes not strictly decreasing");
  }
  if (s.back().slope < 0.0) out.push_back("pwl: function decreasing on [0,inf)");
  if (s.front().intercept != 0.0) out.push_back("pwl: first segment must pass through the origin");
  if (std::abs(pwl(0.0)) > 1e-12) out.push_back("pwl: f(0) != 0");
  return out;
}

inline std::vector<std::string> validate_instance(const Instance& inst) {
  std::vector<std::string> out;
  const auto& h = inst.horizon;
  if (!(h.start < h.end)) out.push_back("horizon: start must be < end");
  if (h.step_minutes <= 0) out.push_back("horizon: step_minutes must be positive");

  std::set<std::string> term_ids;
  bool any_depot = false;
  for (const auto& t : inst.terminals) {
    if (!term_ids.insert(t.id).second) out.push_back("terminal " + t.id + ": duplicate id");
    any_depot = any_depot || t.is_depot;
  }
  if (!any_depot) out.push_back("terminals: at least one depot required");

  std::set<std::string> grid_ids;
  for (const auto& g : inst.grids) {
    if (!grid_ids.insert(g.id).second) out.push_back("grid " + g.id + ": duplicate id");
  }

  std::set<std::string> trip_ids;
  for (const auto& trip : inst.trips) {
    const std::string owner = "trip " + trip.id;
    if (!trip_ids.insert(trip.id).second) out.push_back(owner + ": duplicate id");
    if (trip.arrive <= trip.depart) out.push_back(owner + ": arrive<=depart");
    if (!h.contains(trip.depart) || !h.contains(trip.arrive)) out.push_back(owner + ": outside horizon");
    if (!term_ids.count(trip.from)) out.push_back(owner + ": unknown terminal " + trip.from);
    if (!term_ids.count(trip.to)) out.push_back(owner + ": unknown terminal " + trip.to);
    check_trace(trip.grid_trace, grid_ids, owner, out);
  }

  for (const auto& r : inst.relocations) {
    const std::string owner = "relocation " + r.from + "->" + r.to;
    if (!term_ids.count(r.from)) out.push_back(owner + ": unknown terminal " + r.from);
    if (!term_ids.count(r.to)) out.push_back(owner + ": unknown terminal " + r.to);
    if (r.duration_steps < 1) out.push_back(owner + ": duration must be >= 1");
    for (const auto& [step, dur] : r.time_dependent) {
      if (dur < 1) out.push_back(owner + ": time-dependent duration must be >= 1");
      (void)step;
    }
    check_trace(r.grid_trace, grid_ids, owner, out);
  }

  if (inst.sensing.delta_k_steps < 1) {
    out.push_back("sensing: delta_k must be >= 1");
  } else if (h.steps() > 0 && h.steps() % inst.sensing.delta_k_steps != 0) {
    out.push_back("sensing: horizon of " + std::to_string(h.steps()) +
                  " steps is not a multiple of delta_k " + std::to_string(inst.sensing.delta_k_steps));
  }

  const int periods = inst.periods();
  for (const auto& g : inst.grids) {
    if (static_cast<int>(g.weights.size()) != periods) {
      out.push_back("grid " + g.id + ": expected " + std::to_string(periods) + " period weights");
    }
    for (double w : g.weights) {
      if (!(w >= 0.0)) out.push_back("grid " + g.id + ": negative weight");
    }
  }
  if (!inst.grids.empty() && std::abs(inst.total_weight() - 1.0) > 1e-9) {
    out.push_back("grids: weights do not sum to 1");
  }

  for (auto& v : validate_pwl(inst.pwl)) out.push_back(std::move(v));

  if (inst.costs.fixed_bus < 0 || inst.costs.per_minute < 0 || inst.costs.relocation_fixed < 0) {
    out.push_back("costs: must be non-negative");
  }
  if (inst.fleet.total_buses < 0) out.push_back("fleet: total must be non-negative");
  if (inst.fleet.max_ib < 0) out.push_back("fleet: max_ib must be non-negative");
  if (inst.fleet.max_ib > inst.fleet.total_buses) out.push_back("fleet: max_ib exceeds total");
  if (inst.delta < 0) out.push_back("delta: must be non-negative");

  // Every depot needs a pull-out leg to and a pull-in leg from every terminal.
  for (const auto& d : inst.terminals) {
    if (!d.is_depot) continue;
    for (const auto& t : inst.terminals) {
      if (!inst.leg_duration(d.id, t.id, h.start)) {
        out.push_back("depot leg missing: " + d.id + "->" + t.id);
      }
      if (!inst.leg_duration(t.id, d.id, h.end)) {
        out.push_back("depot leg missing: " + t.id + "->" + d.id);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw InstanceError("schema: missing field " + path + "/" + key);
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!j.is_number_integer()) throw InstanceError("schema: expected integer at " + path);
    } else if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw InstanceError("schema: expected number at " + path);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw InstanceError("schema: expected boolean at " + path);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw InstanceError("schema: expected string at " + path);
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InstanceError("schema: " + path + ": " + e.what());
  }
}

inline const json& require_array(const json& j, const char* key, const std::string& path) {
  const auto& a = require(j, key, path);
  if (!a.is_array()) throw InstanceError(std::string("schema: expected array at ") + path + "/" + key);
  return a;
}

inline GridTrace parse_trace(const json& j, const std::string& path) {
  GridTrace out;
  if (!j.is_array()) throw InstanceError("schema: expected array at " + path);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2) throw InstanceError("schema: expected [grid, fraction] at " + p);
    out.push_back({get_as<std::string>(e[0], p + "/0"), get_as<double>(e[1], p + "/1")});
  }
  return out;
}

inline ordered_json trace_to_json(const GridTrace& t) {
  ordered_json a = ordered_json::array();
  for (const auto& e : t) a.push_back(ordered_json::array({e.grid, e.entry_fraction}));
  return a;
}

}  // namespace detail

// Parses and validates an instance document. Per-grid scalar weights are
// broadcast over the sensing periods; all weights are normalized to sum 1.
inline Instance parse_instance(const json& doc) {
  using namespace detail;
  Instance inst;
  const std::string root = "";
  if (!doc.is_object()) throw InstanceError("schema: document must be an object");

  const auto& h = require(doc, "horizon", root);
  inst.horizon.start = get_as<int>(require(h, "start", "/horizon"), "/horizon/start");
  inst.horizon.end = get_as<int>(require(h, "end", "/horizon"), "/horizon/end");
  inst.horizon.step_minutes = get_as<int>(require(h, "step_minutes", "/horizon"), "/horizon/step_minutes");

  const auto& terms = require_array(doc, "terminals", root);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string p = "/terminals/" + std::to_string(i);
    Terminal t;
    t.id = get_as<std::string>(require(terms[i], "id", p), p + "/id");
    t.is_depot = get_as<bool>(require(terms[i], "is_depot", p), p + "/is_depot");
    if (terms[i].contains("name")) t.name = get_as<std::string>(terms[i]["name"], p + "/name");
    inst.terminals.push_back(std::move(t));
  }

  const auto& trips = require_array(doc, "trips", root);
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const std::string p = "/trips/" + std::to_string(i);
    const auto& j = trips[i];
    TimetabledTrip t;
    t.line = get_as<std::string>(require(j, "line", p), p + "/line");
    t.from = get_as<std::string>(require(j, "from", p), p + "/from");
    t.to = get_as<std::string>(require(j, "to", p), p + "/to");
    t.depart = get_as<int>(require(j, "depart", p), p + "/depart");
    t.arrive = get_as<int>(require(j, "arrive", p), p + "/arrive");
    if (j.contains("grid_trace")) t.grid_trace = parse_trace(j["grid_trace"], p + "/grid_trace");
    t.id = j.contains("id") ? get_as<std::string>(j["id"], p + "/id") : t.line + "#" + std::to_string(i);
    inst.trips.push_back(std::move(t));
  }

  if (doc.contains("relocations")) {
    const auto& rels = require_array(doc, "relocations", root);
    for (std::size_t i = 0; i < rels.size(); ++i) {
      const std::string p = "/relocations/" + std::to_string(i);
      const auto& j = rels[i];
      RelocationOption r;
      r.from = get_as<std::string>(require(j, "from", p), p + "/from");
      r.to = get_as<std::string>(require(j, "to", p), p + "/to");
      r.duration_steps = get_as<int>(require(j, "duration", p), p + "/duration");
      if (j.contains("grid_trace")) r.grid_trace = parse_trace(j["grid_trace"], p + "/grid_trace");
      if (j.contains("pull_only")) r.pull_only = get_as<bool>(j["pull_only"], p + "/pull_only");
      if (j.contains("time_dependent")) {
        const auto& td = j["time_dependent"];
        if (!td.is_array()) throw InstanceError("schema: expected array at " + p + "/time_dependent");
        for (std::size_t k = 0; k < td.size(); ++k) {
          const std::string pk = p + "/time_dependent/" + std::to_string(k);
          if (!td[k].is_array() || td[k].size() != 2) throw InstanceError("schema: expected [step, duration] at " + pk);
          r.time_dependent.emplace_back(get_as<int>(td[k][0], pk + "/0"), get_as<int>(td[k][1], pk + "/1"));
        }
        std::sort(r.time_dependent.begin(), r.time_dependent.end());
      }
      inst.relocations.push_back(std::move(r));
    }
  }

  const auto& sensing = require(doc, "sensing", root);
  inst.sensing.delta_k_steps = get_as<int>(require(sensing, "delta_k", "/sensing"), "/sensing/delta_k");
  const int periods = inst.periods();

  const auto& grids = require_array(doc, "grids", root);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const std::string p = "/grids/" + std::to_string(i);
    const auto& j = grids[i];
    GridCell g;
    g.id = get_as<std::string>(require(j, "id", p), p + "/id");
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      if (!w.is_array()) throw InstanceError("schema: expected array at " + p + "/weights");
      for (std::size_t k = 0; k < w.size(); ++k) g.weights.push_back(get_as<double>(w[k], p + "/weights/" + std::to_string(k)));
    } else if (j.contains("weight")) {
      const double w = get_as<double>(j["weight"], p + "/weight");
      if (periods > 0) g.weights.assign(static_cast<std::size_t>(periods), w / periods);
    } else {
      throw InstanceError("schema: missing field " + p + "/weight");
    }
    inst.grids.push_back(std::move(g));
  }

  if (doc.contains("pwl")) {
    const auto& pw = require_array(doc, "pwl", root);
    inst.pwl.segments.clear();
    for (std::size_t i = 0; i < pw.size(); ++i) {
      const std::string p = "/pwl/" + std::to_string(i);
      if (!pw[i].is_array() || pw[i].size() != 2) throw InstanceError("schema: expected [slope, intercept] at " + p);
      inst.pwl.segments.push_back({get_as<double>(pw[i][0], p + "/0"), get_as<double>(pw[i][1], p + "/1")});
    }
  }

  const auto& costs = require(doc, "costs", root);
  inst.costs.fixed_bus = get_as<double>(require(costs, "fixed_bus", "/costs"), "/costs/fixed_bus");
  inst.costs.per_minute = get_as<double>(require(costs, "per_minute", "/costs"), "/costs/per_minute");
  inst.costs.relocation_fixed = get_as<double>(require(costs, "relocation_fixed", "/costs"), "/costs/relocation_fixed");

  const auto& fleet = require(doc, "fleet", root);
  inst.fleet.total_buses = get_as<int>(require(fleet, "total", "/fleet"), "/fleet/total");
  inst.fleet.max_ib = get_as<int>(require(fleet, "max_ib", "/fleet"), "/fleet/max_ib");
  if (fleet.contains("ib_exact")) inst.fleet.ib_exact = get_as<bool>(fleet["ib_exact"], "/fleet/ib_exact");

  inst.delta = get_as<double>(require(doc, "delta", root), "/delta");

  if (!inst.grids.empty()) {
    bool shape_ok = true;
    for (const auto& g : inst.grids) shape_ok = shape_ok && static_cast<int>(g.weights.size()) == periods;
    if (shape_ok) normalize_weights(inst);
  }

  const auto violations = validate_instance(inst);
  if (!violations.empty()) throw InstanceError("invariant violated: " + violations.front());
  return inst;
}

inline Instance parse_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InstanceError(std::string("schema: malformed JSON: ") + e.what());
  }
  return parse_instance(doc);
}

// Canonical serialization: fixed key order, explicit per-period weights.
inline ordered_json to_json(const Instance& inst) {
  using detail::trace_to_json;
  ordered_json doc;
  doc["horizon"] = {{"start", inst.horizon.start}, {"end", inst.horizon.end}, {"step_minutes", inst.horizon.step_minutes}};
  ordered_json terms = ordered_json::array();
  for (const auto& t : inst.terminals) {
    ordered_json j = {{"id", t.id}, {"is_depot", t.is_depot}};
    if (!t.name.empty()) j["name"] = t.name;
    terms.push_back(std::move(j));
  }
  doc["terminals"] = std::move(terms);
  ordered_json trips = ordered_json::array();
  for (const auto& t : inst.trips) {
    trips.push_back({{"id", t.id}, {"line", t.line}, {"from", t.from}, {"to", t.to}, {"depart", t.depart},
                     {"arrive", t.arrive}, {"grid_trace", trace_to_json(t.grid_trace)}});
  }
  doc["trips"] = std::move(trips);
  ordered_json rels = ordered_json::array();
  for (const auto& r : inst.relocations) {
    ordered_json j = {{"from", r.from}, {"to", r.to}, {"duration", r.duration_steps}, {"grid_trace", trace_to_json(r.grid_trace)}};
    if (!r.time_dependent.empty()) {
      ordered_json td = ordered_json::array();
      for (const auto& [s, d] : r.time_dependent) td.push_back(ordered_json::array({s, d}));
      j["time_dependent"] = std::move(td);
    }
    if (r.pull_only) j["pull_only"] = true;
    rels.push_back(std::move(j));
  }
  doc["relocations"] = std::move(rels);
  ordered_json grids = ordered_json::array();
  for (const auto& g : inst.grids) grids.push_back({{"id", g.id}, {"weights", g.weights}});
  doc["grids"] = std::move(grids);
  doc["sensing"] = {{"delta_k", inst.sensing.delta_k_steps}};
  ordered_json pwl = ordered_json::array();
  for (const auto& s : inst.pwl.segments) pwl.push_back(ordered_json::array({s.slope, s.intercept}));
  doc["pwl"] = std::move(pwl);
  doc["costs"] = {{"fixed_bus", inst.costs.fixed_bus},
                  {"per_minute", inst.costs.per_minute},
                  {"relocation_fixed", inst.costs.relocation_fixed}};
  doc["fleet"] = {{"total", inst.fleet.total_buses}, {"max_ib", inst.fleet.max_ib}, {"ib_exact", inst.fleet.ib_exact}};
  doc["delta"] = inst.delta;
  return doc;
}

inline std::string serialize(const Instance& inst) { return to_json(inst).dump(2) + "\n"; }

// Re-derives sensing periods for a new granularity and rebuckets the weights.
inline Instance with_delta_k(Instance inst, int delta_k_steps) {
  inst.sensing.delta_k_steps = delta_k_steps;
  const int periods = inst.periods();
  if (periods <= 0) throw InstanceError("invariant violated: delta_k must be >= 1");
  rebucket_weights(inst, periods);
  return inst;
}

}  // namespace busdrive
