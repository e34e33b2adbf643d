#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "instance.hpp"
#include "mip/branch_and_bound.hpp"
#include "mip/model.hpp"
#include "network.hpp"
#include "schedule.hpp"
#include "sensing.hpp"

namespace busdrive {

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PerBus indexes every decision by bus. Aggregated replaces the bus index
// with integer flows per (class, depot); a flow decomposition recovers
// per-bus paths, so both describe the same set of schedules.
enum class Formulation { PerBus, Aggregated };

inline const char* to_string(Formulation f) { return f == Formulation::PerBus ? "per_bus" : "aggregated"; }

inline constexpr int kIbClass = 0;
inline constexpr int kNbClass = 1;

struct VarRegistry {
  Formulation form = Formulation::Aggregated;
  int periods = 0;

  // PerBus
  std::vector<int> x;           // x[b]; empty when the model fixes bus classes
  std::vector<char> bus_is_ib;  // class of each bus when x is empty
  std::vector<std::vector<int>> v;  // v[b][depot]
  std::vector<std::vector<int>> y;  // y[b][arc]
  std::vector<std::vector<int>> z;  // z[b][arc], -1 for arcs without coverage

  // Aggregated: flow[class][depot][arc], -1 outside the depot's commodity
  std::array<std::vector<std::vector<int>>, 2> flow;

  std::vector<int> h;  // h[trip], IB sub-model only
  std::vector<int> r;  // r[g * periods + k], -1 where the pair carries no weight

  int buses() const { return static_cast<int>(y.size()); }
  bool has_class(int cls) const { return !flow[static_cast<std::size_t>(cls)].empty(); }
  int r_var(int g, int k) const {
    return r.empty() ? -1 : r[static_cast<std::size_t>(g * periods + k)];
  }
};

struct BuiltModel {
  mip::MipModel model;
  VarRegistry reg;
};

struct ModelOptions {
  Formulation form = Formulation::Aggregated;
  bool symmetry_breaking = true;
};

namespace detail {

struct FlowConfig {
  bool with_ib = false;
  bool with_nb = false;
  bool label_vars = false;  // PerBus full model: x_b decides the class
  int buses = 0;            // PerBus bus count
  int ib_cap = 0;
  bool ib_exact = false;
  int nb_cap = 0;
  int total_cap = 0;
  std::vector<char> must_cover;  // per trip
  bool trip_reward = false;      // h variables
  bool sensing = false;          // r variables and envelope rows
};

inline bool in_commodity(const Arc& a, int dp) {
  return (a.kind != ArcKind::PullOut && a.kind != ArcKind::PullIn) || a.depot == dp;
}

// Relocation arc pairs (a, reverse) for the no-back-and-forth rows. With
// strictly positive durations no reverse arc exists in time.
inline std::vector<std::pair<int, int>> relocation_pairs(const Network& net) {
  std::map<std::tuple<int, int, int, int>, int> idx;
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const auto& arc = net.arcs[a];
    if (arc.kind == ArcKind::Relocation) idx[{arc.from_terminal, arc.from_t, arc.to_terminal, arc.to_t}] = static_cast<int>(a);
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& [key, a] : idx) {
    const auto& [fi, ft, ti, tt] = key;
    const auto it = idx.find({ti, tt, fi, ft});
    if (it != idx.end() && a < it->second) out.emplace_back(a, it->second);
  }
  return out;
}

inline std::string vname(const char* base, std::initializer_list<int> idx) {
  std::string s = base;
  for (int i : idx) s += "_" + std::to_string(i);
  return s;
}

// Envelope rows r_gk <= m_l * q_gk + c_l with q_gk given as terms.
inline void add_sensing_rows(BuiltModel& bm, const Instance& inst, const std::vector<std::vector<mip::Term>>& q_terms) {
  auto& m = bm.model;
  auto& reg = bm.reg;
  const int K = reg.periods;
  reg.r.assign(inst.grids.size() * static_cast<std::size_t>(K), -1);
  for (std::size_t g = 0; g < inst.grids.size(); ++g) {
    for (int k = 0; k < K; ++k) {
      if (inst.grids[g].weights[static_cast<std::size_t>(k)] <= 0.0) continue;
      const int r = m.add_continuous(vname("r", {static_cast<int>(g), k}), 0.0, mip::kInf);
      reg.r[g * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)] = r;
      const auto& q = q_terms[g * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
      int l = 0;
      for (const auto& seg : inst.pwl.segments) {
        std::vector<mip::Term> row{{r, 1.0}};
        for (const auto& t : q) row.push_back({t.var, -seg.slope * t.coef});
        m.add_row(std::move(row), mip::RowSense::Le, seg.intercept, vname("env", {static_cast<int>(g), k, l++}));
      }
    }
  }
}

inline BuiltModel build_per_bus(const Network& net, const Instance& inst, const FlowConfig& cfg, bool symmetry) {
  BuiltModel bm;
  auto& m = bm.model;
  auto& reg = bm.reg;
  reg.form = Formulation::PerBus;
  reg.periods = inst.periods();
  const int B = cfg.buses;
  const int D = static_cast<int>(net.depots.size());
  const int A = static_cast<int>(net.arcs.size());
  const auto& pairs = relocation_pairs(net);

  for (int b = 0; b < B; ++b) {
    if (cfg.label_vars) reg.x.push_back(m.add_binary(vname("x", {b})));
    reg.bus_is_ib.push_back(cfg.label_vars ? 0 : (cfg.with_ib ? 1 : 0));
    std::vector<int> vb;
    for (int dp = 0; dp < D; ++dp) vb.push_back(m.add_binary(vname("v", {b, dp})));
    reg.v.push_back(std::move(vb));
    std::vector<int> yb;
    for (int a = 0; a < A; ++a) yb.push_back(m.add_binary(vname("y", {b, a})));
    reg.y.push_back(std::move(yb));
    std::vector<int> zb(static_cast<std::size_t>(A), -1);
    if (cfg.label_vars && cfg.sensing) {
      for (int a = 0; a < A; ++a) {
        if (!net.arcs[static_cast<std::size_t>(a)].coverage.empty()) zb[static_cast<std::size_t>(a)] = m.add_continuous(vname("z", {b, a}), 0.0, 1.0);
      }
    }
    reg.z.push_back(std::move(zb));
  }

  for (int b = 0; b < B; ++b) {
    const auto& y = reg.y[static_cast<std::size_t>(b)];
    const auto Y = [&](int a) { return y[static_cast<std::size_t>(a)]; };
    std::vector<mip::Term> one_depot;
    for (int dp = 0; dp < D; ++dp) one_depot.push_back({reg.v[static_cast<std::size_t>(b)][static_cast<std::size_t>(dp)], 1.0});
    m.add_row(one_depot, mip::RowSense::Le, 1.0, vname("one_depot", {b}));
    for (int dp = 0; dp < D; ++dp) {
      std::vector<mip::Term> depot_dispatch{{reg.v[static_cast<std::size_t>(b)][static_cast<std::size_t>(dp)], -1.0}};
      std::vector<mip::Term> depot_return;
      for (int a = 0; a < A; ++a) {
        const auto& arc = net.arcs[static_cast<std::size_t>(a)];
        if (arc.depot != dp) continue;
        if (arc.kind == ArcKind::PullOut) {
          depot_dispatch.push_back({Y(a), 1.0});
          depot_return.push_back({Y(a), 1.0});
        } else if (arc.kind == ArcKind::PullIn) {
          depot_return.push_back({Y(a), -1.0});
        }
      }
      m.add_row(depot_dispatch, mip::RowSense::Le, 0.0, vname("depot_dispatch", {b, dp}));
      m.add_row(depot_return, mip::RowSense::Eq, 0.0, vname("depot_return", {b, dp}));
    }
    for (int node = 0; node < net.n_timed_nodes(); ++node) {
      std::vector<mip::Term> flow;
      for (int a : net.in_arcs[static_cast<std::size_t>(node)]) flow.push_back({Y(a), 1.0});
      for (int a : net.out_arcs[static_cast<std::size_t>(node)]) flow.push_back({Y(a), -1.0});
      if (!flow.empty()) m.add_row(flow, mip::RowSense::Eq, 0.0, vname("flow", {b, node}));
    }
    for (const auto& [a1, a2] : pairs) m.add_row({{Y(a1), 1.0}, {Y(a2), 1.0}}, mip::RowSense::Le, 1.0, vname("no_turnback", {b, a1}));
    if (cfg.label_vars && cfg.sensing) {
      const int x = reg.x[static_cast<std::size_t>(b)];
      for (int a = 0; a < A; ++a) {
        const int z = reg.z[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)];
        if (z < 0) continue;
        m.add_row({{z, 1.0}, {x, -1.0}}, mip::RowSense::Le, 0.0, vname("mc1", {b, a}));
        m.add_row({{z, 1.0}, {Y(a), -1.0}}, mip::RowSense::Le, 0.0, vname("mc2", {b, a}));
        m.add_row({{z, 1.0}, {x, -1.0}, {Y(a), -1.0}}, mip::RowSense::Ge, -1.0, vname("mc3", {b, a}));
      }
    }
  }

  for (std::size_t k = 0; k < inst.trips.size(); ++k) {
    if (cfg.must_cover.empty() || !cfg.must_cover[k]) continue;
    const int a = net.service_arc_of_trip[k];
    std::vector<mip::Term> row;
    for (int b = 0; b < B; ++b) row.push_back({reg.y[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)], 1.0});
    m.add_row(row, mip::RowSense::Ge, 1.0, vname("cover", {static_cast<int>(k)}));
  }
  if (cfg.label_vars) {
    std::vector<mip::Term> row;
    for (int x : reg.x) row.push_back({x, 1.0});
    m.add_row(row, cfg.ib_exact ? mip::RowSense::Eq : mip::RowSense::Le, cfg.ib_cap, "ib_cap");
  }
  if (cfg.trip_reward) {
    reg.h.assign(inst.trips.size(), -1);
    for (std::size_t k = 0; k < inst.trips.size(); ++k) {
      const int a = net.service_arc_of_trip[k];
      const int h = m.add_binary(vname("h", {static_cast<int>(k)}));
      reg.h[k] = h;
      std::vector<mip::Term> row{{h, 1.0}};
      for (int b = 0; b < B; ++b) row.push_back({reg.y[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)], -1.0});
      m.add_row(row, mip::RowSense::Le, 0.0, vname("cover_once", {static_cast<int>(k)}));
    }
  }
  if (cfg.sensing) {
    std::vector<std::vector<mip::Term>> q(inst.grids.size() * static_cast<std::size_t>(reg.periods));
    for (int b = 0; b < B; ++b) {
      if (!cfg.label_vars && !reg.bus_is_ib[static_cast<std::size_t>(b)]) continue;
      for (int a = 0; a < A; ++a) {
        const int var = cfg.label_vars ? reg.z[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)]
                                       : reg.y[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)];
        for (const auto& c : net.arcs[static_cast<std::size_t>(a)].coverage) {
          q[static_cast<std::size_t>(c.grid * reg.periods + c.period)].push_back({var, 1.0});
        }
      }
    }
    add_sensing_rows(bm, inst, q);
  }
  if (symmetry) {
    // Buses are interchangeable within a class: order IBs first and
    // dispatched buses before idle ones.
    const auto dispatched = [&](int b, double s, std::vector<mip::Term>& row) {
      for (int a = 0; a < A; ++a) {
        if (net.arcs[static_cast<std::size_t>(a)].kind == ArcKind::PullOut) row.push_back({reg.y[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)], s});
      }
    };
    for (int b = 0; b + 1 < B; ++b) {
      std::vector<mip::Term> row;
      dispatched(b, 1.0, row);
      dispatched(b + 1, -1.0, row);
      if (cfg.label_vars) {
        const int x0 = reg.x[static_cast<std::size_t>(b)];
        const int x1 = reg.x[static_cast<std::size_t>(b + 1)];
        m.add_row({{x0, 1.0}, {x1, -1.0}}, mip::RowSense::Ge, 0.0, vname("sym_x", {b}));
        row.push_back({x0, 1.0});
        row.push_back({x1, -1.0});
      }
      m.add_row(row, mip::RowSense::Ge, 0.0, vname("sym_d", {b}));
    }
  }
  return bm;
}

inline BuiltModel build_aggregated(const Network& net, const Instance& inst, const FlowConfig& cfg) {
  BuiltModel bm;
  auto& m = bm.model;
  auto& reg = bm.reg;
  reg.form = Formulation::Aggregated;
  reg.periods = inst.periods();
  const int D = static_cast<int>(net.depots.size());
  const int A = static_cast<int>(net.arcs.size());
  const auto& pairs = relocation_pairs(net);

  for (int cls : {kIbClass, kNbClass}) {
    const bool present = cls == kIbClass ? cfg.with_ib : cfg.with_nb;
    if (!present) continue;
    const int cap = std::min(cls == kIbClass ? cfg.ib_cap : cfg.nb_cap, cfg.total_cap);
    auto& fc = reg.flow[static_cast<std::size_t>(cls)];
    fc.assign(static_cast<std::size_t>(D), std::vector<int>(static_cast<std::size_t>(A), -1));
    for (int dp = 0; dp < D; ++dp) {
      for (int a = 0; a < A; ++a) {
        if (!in_commodity(net.arcs[static_cast<std::size_t>(a)], dp)) continue;
        const auto kind = cap <= 1 ? mip::VarKind::Binary : mip::VarKind::Integer;
        fc[static_cast<std::size_t>(dp)][static_cast<std::size_t>(a)] =
            m.add_var(kind, 0.0, std::max(0, cap), vname(cls == kIbClass ? "fib" : "fnb", {dp, a}));
      }
    }
    for (int dp = 0; dp < D; ++dp) {
      const auto& f = fc[static_cast<std::size_t>(dp)];
      const auto F = [&](int a) { return f[static_cast<std::size_t>(a)]; };
      std::vector<mip::Term> depot_return;
      for (int a = 0; a < A; ++a) {
        const auto& arc = net.arcs[static_cast<std::size_t>(a)];
        if (arc.depot != dp) continue;
        if (arc.kind == ArcKind::PullOut) depot_return.push_back({F(a), 1.0});
        if (arc.kind == ArcKind::PullIn) depot_return.push_back({F(a), -1.0});
      }
      m.add_row(depot_return, mip::RowSense::Eq, 0.0, vname("depot_return", {cls, dp}));
      for (int node = 0; node < net.n_timed_nodes(); ++node) {
        std::vector<mip::Term> row;
        for (int a : net.in_arcs[static_cast<std::size_t>(node)]) {
          if (F(a) >= 0) row.push_back({F(a), 1.0});
        }
        for (int a : net.out_arcs[static_cast<std::size_t>(node)]) {
          if (F(a) >= 0) row.push_back({F(a), -1.0});
        }
        if (!row.empty()) m.add_row(row, mip::RowSense::Eq, 0.0, vname("flow", {cls, dp, node}));
      }
      for (const auto& [a1, a2] : pairs) m.add_row({{F(a1), 1.0}, {F(a2), 1.0}}, mip::RowSense::Le, 1.0, vname("no_turnback", {cls, dp, a1}));
    }
  }

  const auto pullouts = [&](int cls, std::vector<mip::Term>& row) {
    const auto& fc = reg.flow[static_cast<std::size_t>(cls)];
    for (int dp = 0; dp < static_cast<int>(fc.size()); ++dp) {
      for (int a = 0; a < A; ++a) {
        const auto& arc = net.arcs[static_cast<std::size_t>(a)];
        if (arc.kind == ArcKind::PullOut && arc.depot == dp) row.push_back({fc[static_cast<std::size_t>(dp)][static_cast<std::size_t>(a)], 1.0});
      }
    }
  };
  if (cfg.with_ib) {
    std::vector<mip::Term> row;
    pullouts(kIbClass, row);
    m.add_row(row, mip::RowSense::Le, cfg.ib_cap, "ib_cap");
  }
  if (cfg.with_nb) {
    std::vector<mip::Term> row;
    pullouts(kNbClass, row);
    m.add_row(row, mip::RowSense::Le, cfg.nb_cap, "fleet_nb");
  }
  {
    std::vector<mip::Term> row;
    if (cfg.with_ib) pullouts(kIbClass, row);
    if (cfg.with_nb) pullouts(kNbClass, row);
    m.add_row(row, mip::RowSense::Le, cfg.total_cap, "fleet");
  }
  const auto arc_terms = [&](int cls, int a, double s, std::vector<mip::Term>& row) {
    for (const auto& f : reg.flow[static_cast<std::size_t>(cls)]) {
      if (f[static_cast<std::size_t>(a)] >= 0) row.push_back({f[static_cast<std::size_t>(a)], s});
    }
  };
  for (std::size_t k = 0; k < inst.trips.size(); ++k) {
    if (cfg.must_cover.empty() || !cfg.must_cover[k]) continue;
    std::vector<mip::Term> row;
    for (int cls : {kIbClass, kNbClass}) arc_terms(cls, net.service_arc_of_trip[k], 1.0, row);
    m.add_row(row, mip::RowSense::Ge, 1.0, vname("cover", {static_cast<int>(k)}));
  }
  if (cfg.trip_reward) {
    reg.h.assign(inst.trips.size(), -1);
    for (std::size_t k = 0; k < inst.trips.size(); ++k) {
      const int h = m.add_binary(vname("h", {static_cast<int>(k)}));
      reg.h[k] = h;
      std::vector<mip::Term> row{{h, 1.0}};
      arc_terms(kIbClass, net.service_arc_of_trip[k], -1.0, row);
      m.add_row(row, mip::RowSense::Le, 0.0, vname("cover_once", {static_cast<int>(k)}));
    }
  }
  if (cfg.sensing) {
    std::vector<std::vector<mip::Term>> q(inst.grids.size() * static_cast<std::size_t>(reg.periods));
    for (int a = 0; a < A; ++a) {
      for (const auto& c : net.arcs[static_cast<std::size_t>(a)].coverage) {
        arc_terms(kIbClass, a, 1.0, q[static_cast<std::size_t>(c.grid * reg.periods + c.period)]);
      }
    }
    add_sensing_rows(bm, inst, q);
  }
  return bm;
}

inline BuiltModel build_flow_model(const Network& net, const Instance& inst, const FlowConfig& cfg, const ModelOptions& opt) {
  return opt.form == Formulation::PerBus ? build_per_bus(net, inst, cfg, opt.symmetry_breaking) : build_aggregated(net, inst, cfg);
}

// Adds `w * c_a` for every traversal variable of arc a (filtered by `use`).
template <typename Pred>
void add_arc_costs(BuiltModel& bm, const Network& net, double w, Pred use) {
  auto& reg = bm.reg;
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const auto& arc = net.arcs[a];
    if (!use(arc) || arc.cost == 0.0) continue;
    for (const auto& yb : reg.y) bm.model.add_obj(yb[a], w * arc.cost);
    for (const auto& fc : reg.flow) {
      for (const auto& f : fc) {
        if (f[a] >= 0) bm.model.add_obj(f[a], w * arc.cost);
      }
    }
  }
}

inline void add_sensing_objective(BuiltModel& bm, const Instance& inst, double w) {
  const int K = bm.reg.periods;
  for (std::size_t g = 0; g < inst.grids.size(); ++g) {
    for (int k = 0; k < K; ++k) {
      const int r = bm.reg.r_var(static_cast<int>(g), k);
      if (r >= 0) bm.model.add_obj(r, w * inst.grids[g].weights[static_cast<std::size_t>(k)]);
    }
  }
}

}  // namespace detail

// min sum c*y - delta * sum mu*r over the full fleet.
inline BuiltModel build_full_model(const Network& net, const Instance& inst, const ModelOptions& opt = {}) {
  detail::FlowConfig cfg;
  cfg.with_ib = true;
  cfg.with_nb = true;
  cfg.label_vars = true;
  cfg.buses = inst.fleet.total_buses;
  cfg.ib_cap = inst.fleet.max_ib;
  cfg.ib_exact = inst.fleet.ib_exact;
  cfg.nb_cap = inst.fleet.ib_exact ? inst.fleet.total_buses - inst.fleet.max_ib : inst.fleet.total_buses;
  cfg.total_cap = inst.fleet.total_buses;
  cfg.must_cover.assign(inst.trips.size(), 1);
  cfg.sensing = inst.delta > 0.0;
  BuiltModel bm = detail::build_flow_model(net, inst, cfg, opt);
  bm.model.set_sense(mip::Sense::Minimize);
  detail::add_arc_costs(bm, net, 1.0, [](const Arc&) { return true; });
  detail::add_sensing_objective(bm, inst, -inst.delta);
  return bm;
}

// Cost-only model over all buses (no sensing term, no IB labels).
inline BuiltModel build_sp1_model(const Network& net, const Instance& inst, const ModelOptions& opt = {},
                                  std::vector<char> must_cover = {}) {
  detail::FlowConfig cfg;
  cfg.with_nb = true;
  cfg.buses = inst.fleet.total_buses;
  cfg.nb_cap = inst.fleet.total_buses;
  cfg.total_cap = inst.fleet.total_buses;
  cfg.must_cover = must_cover.empty() ? std::vector<char>(inst.trips.size(), 1) : std::move(must_cover);
  BuiltModel bm = detail::build_flow_model(net, inst, cfg, opt);
  bm.model.set_sense(mip::Sense::Minimize);
  detail::add_arc_costs(bm, net, 1.0, [](const Arc&) { return true; });
  return bm;
}

// max sum_trips c*h + omega*delta*sum mu*r - sum_relocations c*y over IBs.
inline BuiltModel build_ib_submodel(const Network& net, const Instance& inst, double omega, int ib_count,
                                    const ModelOptions& opt = {}) {
  detail::FlowConfig cfg;
  cfg.with_ib = true;
  cfg.buses = ib_count;
  cfg.ib_cap = ib_count;
  cfg.total_cap = ib_count;
  cfg.trip_reward = true;
  cfg.sensing = omega > 0.0 && inst.delta > 0.0;
  BuiltModel bm = detail::build_flow_model(net, inst, cfg, opt);
  bm.model.set_sense(mip::Sense::Maximize);
  for (std::size_t k = 0; k < inst.trips.size(); ++k) {
    bm.model.add_obj(bm.reg.h[k], net.arcs[static_cast<std::size_t>(net.service_arc_of_trip[k])].cost);
  }
  detail::add_sensing_objective(bm, inst, omega * inst.delta);
  detail::add_arc_costs(bm, net, -1.0, [](const Arc& a) { return a.kind == ArcKind::Relocation; });
  return bm;
}

// IB stage of the DS-extreme sub-problem: max sum mu*r with IBs only.
inline BuiltModel build_ds_submodel(const Network& net, const Instance& inst, int ib_count, const ModelOptions& opt = {}) {
  detail::FlowConfig cfg;
  cfg.with_ib = true;
  cfg.buses = ib_count;
  cfg.ib_cap = ib_count;
  cfg.total_cap = ib_count;
  cfg.sensing = true;
  BuiltModel bm = detail::build_flow_model(net, inst, cfg, opt);
  bm.model.set_sense(mip::Sense::Maximize);
  detail::add_sensing_objective(bm, inst, 1.0);
  return bm;
}

// min sum c*y over NBs; only trips flagged in `uncovered` must be served.
inline BuiltModel build_nb_submodel(const Network& net, const Instance& inst, const std::vector<char>& uncovered,
                                    int nb_fleet, const ModelOptions& opt = {}) {
  detail::FlowConfig cfg;
  cfg.with_nb = true;
  cfg.buses = std::max(0, nb_fleet);
  cfg.nb_cap = std::max(0, nb_fleet);
  cfg.total_cap = std::max(0, nb_fleet);
  cfg.must_cover = uncovered;
  BuiltModel bm = detail::build_flow_model(net, inst, cfg, opt);
  bm.model.set_sense(mip::Sense::Minimize);
  detail::add_arc_costs(bm, net, 1.0, [](const Arc&) { return true; });
  return bm;
}

// Per-(g,k) coverage counts implied by a solution, read from the registry.
inline CoverageCounts solution_coverage(const std::vector<double>& val, const VarRegistry& reg, const Network& net,
                                        const Instance& inst) {
  CoverageCounts q(static_cast<int>(inst.grids.size()), reg.periods);
  const auto add = [&](int a, double times) {
    const int n = static_cast<int>(std::lround(times));
    for (const auto& c : net.arcs[static_cast<std::size_t>(a)].coverage) q(c.grid, c.period) += n;
  };
  for (std::size_t b = 0; b < reg.y.size(); ++b) {
    const bool ib = reg.x.empty() ? reg.bus_is_ib[b] != 0 : val[static_cast<std::size_t>(reg.x[b])] > 0.5;
    if (!ib) continue;
    for (std::size_t a = 0; a < net.arcs.size(); ++a) add(static_cast<int>(a), val[static_cast<std::size_t>(reg.y[b][a])]);
  }
  for (const auto& f : reg.flow[kIbClass]) {
    for (std::size_t a = 0; a < net.arcs.size(); ++a) {
      if (f[a] >= 0) add(static_cast<int>(a), val[static_cast<std::size_t>(f[a])]);
    }
  }
  return q;
}

// Follows traversal variables from each depot source. Undispatched buses
// are dropped.
inline ScheduleSet extract_schedules(const mip::Solution& sol, const VarRegistry& reg, const Network& net, const Instance& inst) {
  std::vector<BusSchedule> buses;
  if (!sol.has_incumbent()) return make_schedule_set({}, net, inst);
  const auto& val = sol.values;
  const auto follow = [&](int source, int depot, std::vector<int>& remaining) {
    std::vector<int> path;
    int node = source;
    while (!net.nodes[static_cast<std::size_t>(node)].is_sink) {
      int next = -1;
      for (int a : net.out_arcs[static_cast<std::size_t>(node)]) {
        if (remaining[static_cast<std::size_t>(a)] > 0) {
          next = a;
          break;
        }
      }
      if (next < 0) throw IntegrityError("traversal values do not form a path at node " + std::to_string(node));
      --remaining[static_cast<std::size_t>(next)];
      path.push_back(next);
      node = net.arcs[static_cast<std::size_t>(next)].to;
    }
    if (net.arcs[static_cast<std::size_t>(path.back())].depot != depot) throw IntegrityError("path returns to a different depot");
    return path;
  };
  const auto drained = [&](const std::vector<int>& remaining) {
    for (int r : remaining) {
      if (r != 0) throw IntegrityError("traversal values left over after path decomposition");
    }
  };

  if (reg.form == Formulation::PerBus) {
    for (std::size_t b = 0; b < reg.y.size(); ++b) {
      std::vector<int> remaining(net.arcs.size(), 0);
      for (std::size_t a = 0; a < net.arcs.size(); ++a) remaining[a] = static_cast<int>(std::lround(val[static_cast<std::size_t>(reg.y[b][a])]));
      int depot = -1;
      for (std::size_t a = 0; a < net.arcs.size(); ++a) {
        if (net.arcs[a].kind == ArcKind::PullOut && remaining[a] > 0) {
          depot = net.arcs[a].depot;
          break;
        }
      }
      if (depot < 0) {
        drained(remaining);
        continue;
      }
      BusSchedule bs;
      bs.is_ib = reg.x.empty() ? reg.bus_is_ib[b] != 0 : val[static_cast<std::size_t>(reg.x[b])] > 0.5;
      bs.depot = depot;
      bs.arcs = follow(net.source_node(depot), depot, remaining);
      drained(remaining);
      buses.push_back(std::move(bs));
    }
  } else {
    for (int cls : {kIbClass, kNbClass}) {
      const auto& fc = reg.flow[static_cast<std::size_t>(cls)];
      for (std::size_t dp = 0; dp < fc.size(); ++dp) {
        std::vector<int> remaining(net.arcs.size(), 0);
        int starts = 0;
        for (std::size_t a = 0; a < net.arcs.size(); ++a) {
          if (fc[dp][a] < 0) continue;
          remaining[a] = static_cast<int>(std::lround(val[static_cast<std::size_t>(fc[dp][a])]));
          if (net.arcs[a].kind == ArcKind::PullOut) starts += remaining[a];
        }
        for (int s = 0; s < starts; ++s) {
          BusSchedule bs;
          bs.is_ib = cls == kIbClass;
          bs.depot = static_cast<int>(dp);
          bs.arcs = follow(net.source_node(static_cast<int>(dp)), static_cast<int>(dp), remaining);
          buses.push_back(std::move(bs));
        }
        drained(remaining);
      }
    }
  }
  return make_schedule_set(std::move(buses), net, inst);
}

// Variable assignment realizing `s` in `bm`, for use as a MIP start. Empty
// if the schedules do not fit the model's bus slots.
inline std::vector<double> assignment_from(const ScheduleSet& s, const BuiltModel& bm, const Network& net, const Instance& inst) {
  const auto& reg = bm.reg;
  std::vector<double> val(static_cast<std::size_t>(bm.model.num_vars()), 0.0);
  std::vector<std::vector<int>> ib_paths;
  if (reg.form == Formulation::PerBus) {
    std::vector<const BusSchedule*> order;
    for (const auto& b : s.buses) {
      if (b.is_ib) order.push_back(&b);
    }
    const int n_ib = static_cast<int>(order.size());
    const int idle_ib = reg.x.empty() ? 0 : std::max(0, (inst.fleet.ib_exact ? inst.fleet.max_ib : n_ib) - n_ib);
    for (int i = 0; i < idle_ib; ++i) order.push_back(nullptr);
    for (const auto& b : s.buses) {
      if (!b.is_ib) order.push_back(&b);
    }
    if (order.size() > reg.y.size()) return {};
    for (std::size_t b = 0; b < order.size(); ++b) {
      const bool ib = order[b] == nullptr || order[b]->is_ib;
      if (!reg.x.empty()) val[static_cast<std::size_t>(reg.x[b])] = ib ? 1.0 : 0.0;
      if (order[b] == nullptr) continue;
      const auto& bus = *order[b];
      val[static_cast<std::size_t>(reg.v[b][static_cast<std::size_t>(bus.depot)])] = 1.0;
      for (int a : bus.arcs) {
        val[static_cast<std::size_t>(reg.y[b][static_cast<std::size_t>(a)])] += 1.0;
        const int z = reg.z[b][static_cast<std::size_t>(a)];
        if (z >= 0 && ib) val[static_cast<std::size_t>(z)] = 1.0;
      }
      if (reg.x.empty() ? reg.bus_is_ib[b] != 0 : ib) ib_paths.push_back(bus.arcs);
    }
  } else {
    const bool both = reg.has_class(kIbClass) && reg.has_class(kNbClass);
    for (const auto& bus : s.buses) {
      const int cls = both ? (bus.is_ib ? kIbClass : kNbClass) : (reg.has_class(kIbClass) ? kIbClass : kNbClass);
      const auto& f = reg.flow[static_cast<std::size_t>(cls)][static_cast<std::size_t>(bus.depot)];
      for (int a : bus.arcs) {
        if (f[static_cast<std::size_t>(a)] < 0) return {};
        val[static_cast<std::size_t>(f[static_cast<std::size_t>(a)])] += 1.0;
      }
      if (cls == kIbClass) ib_paths.push_back(bus.arcs);
    }
  }
  std::vector<int> served(inst.trips.size(), 0);
  for (const auto& p : ib_paths) {
    for (int a : p) {
      if (net.arcs[static_cast<std::size_t>(a)].kind == ArcKind::Service) served[static_cast<std::size_t>(net.arcs[static_cast<std::size_t>(a)].trip)] = 1;
    }
  }
  for (std::size_t k = 0; k < reg.h.size(); ++k) val[static_cast<std::size_t>(reg.h[k])] = served[k];
  if (!reg.r.empty()) {
    const auto q = coverage_counts(ib_paths, net, inst);
    for (int g = 0; g < q.grids; ++g) {
      for (int k = 0; k < q.periods; ++k) {
        const int r = reg.r_var(g, k);
        if (r >= 0) val[static_cast<std::size_t>(r)] = effective_sensing_value(q(g, k), inst.pwl);
      }
    }
  }
  return val;
}

struct SolveOptions {
  ModelOptions model;
  double mipgap = 0.01;
  long node_limit = 20000;
  double time_limit_s = mip::kInf;
};

struct ModelRun {
  mip::Solution solution;
  ScheduleSet schedules;
};

inline ModelRun solve_built(const BuiltModel& bm, const Network& net, const Instance& inst, const SolveOptions& opt,
                            const ScheduleSet* start = nullptr) {
  mip::BnbOptions b;
  b.mipgap = opt.mipgap;
  b.node_limit = opt.node_limit;
  b.time_limit_s = opt.time_limit_s;
  if (start != nullptr) b.initial = assignment_from(*start, bm, net, inst);
  ModelRun run;
  run.solution = mip::branch_and_bound_solve(bm.model, b);
  run.schedules = extract_schedules(run.solution, bm.reg, net, inst);
  return run;
}

// ---- M1 line selection ----------------------------------------------------

struct SetCoverModel {
  mip::MipModel model;
  std::vector<std::string> lines;          // sorted line ids
  std::vector<std::set<int>> footprint;    // grid indices per line
  std::vector<std::vector<int>> upsilon;   // upsilon[s][line]
  std::vector<int> u;                      // u[g]
};

// Grid footprint of every line: union of its trips' traces.
inline std::vector<std::set<int>> line_footprints(const Instance& inst, const std::vector<std::string>& lines) {
  std::vector<std::set<int>> out(lines.size());
  for (const auto& trip : inst.trips) {
    const auto it = std::find(lines.begin(), lines.end(), trip.line);
    if (it == lines.end()) continue;
    for (const auto& e : trip.grid_trace) {
      if (auto g = inst.grid_index(e.grid)) out[static_cast<std::size_t>(it - lines.begin())].insert(*g);
    }
  }
  return out;
}

// max sum u_g; each sensor on at most one line; u_g needs a sensor on a line
// touching g. A small penalty on line rank breaks ties towards lower ids.
inline SetCoverModel build_m1_set_cover(const Instance& inst, int sensor_count) {
  SetCoverModel sc;
  sc.lines = inst.lines();
  sc.footprint = line_footprints(inst, sc.lines);
  auto& m = sc.model;
  m.set_sense(mip::Sense::Maximize);
  const int S = std::max(0, sensor_count);
  const int R = static_cast<int>(sc.lines.size());
  const double eps = R > 0 && S > 0 ? 0.5 / (static_cast<double>(S) * R * R) : 0.0;
  for (int s = 0; s < S; ++s) {
    std::vector<int> row;
    std::vector<mip::Term> once;
    for (int r = 0; r < R; ++r) {
      const int v = m.add_binary(detail::vname("ups", {s, r}), -eps * (r + 1));
      row.push_back(v);
      once.push_back({v, 1.0});
    }
    m.add_row(once, mip::RowSense::Le, 1.0, detail::vname("one_line", {s}));
    sc.upsilon.push_back(std::move(row));
  }
  for (std::size_t g = 0; g < inst.grids.size(); ++g) {
    const int u = m.add_binary(detail::vname("u", {static_cast<int>(g)}), 1.0);
    sc.u.push_back(u);
    std::vector<mip::Term> row{{u, 1.0}};
    for (int s = 0; s < S; ++s) {
      for (int r = 0; r < R; ++r) {
        if (sc.footprint[static_cast<std::size_t>(r)].count(static_cast<int>(g))) row.push_back({sc.upsilon[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)], -1.0});
      }
    }
    m.add_row(row, mip::RowSense::Le, 0.0, detail::vname("cover", {static_cast<int>(g)}));
  }
  return sc;
}

}  // namespace busdrive
