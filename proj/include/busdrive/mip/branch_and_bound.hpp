#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <utility>
#include <vector>

#include "model.hpp"
#include "simplex.hpp"

namespace busdrive::mip {

struct BnbOptions {
  double mipgap = 0.01;
  long node_limit = 200000;
  double time_limit_s = kInf;
  int dive_every = 64;  // nodes between dives; the root always dives
  std::vector<double> initial;  // optional MIP start
  SimplexOptions simplex;
};

namespace detail {

struct BoundChange {
  int var = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct Node {
  std::shared_ptr<const Node> parent;
  BoundChange change;
  bool has_change = false;
  double bound = -kInf;
  int depth = 0;
  long seq = 0;
};

using NodePtr = std::shared_ptr<const Node>;

struct NodeOrder {
  // Priority queue pops the "largest"; invert for best bound first, then
  // deeper nodes, then earlier insertion.
  bool operator()(const NodePtr& a, const NodePtr& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->seq > b->seq;
  }
};

inline void apply_chain(const Node* n, std::vector<double>& lo, std::vector<double>& hi) {
  for (; n != nullptr; n = n->parent.get()) {
    if (!n->has_change) continue;
    const auto v = static_cast<std::size_t>(n->change.var);
    lo[v] = std::max(lo[v], n->change.lo);
    hi[v] = std::min(hi[v], n->change.hi);
  }
}

// Most fractional integral variable, ties to the lowest id; -1 if integral.
inline int most_fractional(const MipModel& m, const std::vector<double>& x) {
  int best = -1;
  double best_f = kIntTol;
  for (const auto& v : m.vars()) {
    if (!v.is_integral()) continue;
    const double val = x[static_cast<std::size_t>(v.id)];
    const double f = std::min(val - std::floor(val), std::ceil(val) - val);
    if (f > best_f + 1e-12) {
      best_f = f;
      best = v.id;
    }
  }
  return best;
}

// Least fractional, used for diving; ties to the lowest id.
inline int least_fractional(const MipModel& m, const std::vector<double>& x) {
  int best = -1;
  double best_f = kInf;
  for (const auto& v : m.vars()) {
    if (!v.is_integral()) continue;
    const double val = x[static_cast<std::size_t>(v.id)];
    const double f = std::min(val - std::floor(val), std::ceil(val) - val);
    if (f > kIntTol && f < best_f - 1e-12) {
      best_f = f;
      best = v.id;
    }
  }
  return best;
}

inline std::vector<double> rounded(const MipModel& m, std::vector<double> x) {
  for (const auto& v : m.vars()) {
    auto& val = x[static_cast<std::size_t>(v.id)];
    if (v.is_integral()) val = std::round(val);
    val = std::clamp(val, v.lower, v.upper);
  }
  return x;
}

}  // namespace detail

inline std::vector<double> lower_bounds(const MipModel& m) {
  std::vector<double> lo;
  for (const auto& v : m.vars()) lo.push_back(v.lower);
  return lo;
}

inline std::vector<double> upper_bounds(const MipModel& m) {
  std::vector<double> hi;
  for (const auto& v : m.vars()) hi.push_back(v.upper);
  return hi;
}

// Continuous relaxation; integrality dropped, bounds kept.
inline Solution lp_relax_solve(const MipModel& m) {
  BoundedSimplex lp(m);
  const LpStatus st = lp.solve(lower_bounds(m), upper_bounds(m));
  Solution s;
  if (st == LpStatus::IterationLimit) throw NumericalError("simplex iteration limit reached after anti-cycling fallback");
  if (st == LpStatus::Infeasible) return s;
  if (st == LpStatus::Unbounded) {
    s.status = Status::Unbounded;
    return s;
  }
  const double sign = m.sense() == Sense::Maximize ? -1.0 : 1.0;
  s.status = Status::Optimal;
  s.values = lp.values();
  s.objective = sign * lp.objective();
  s.best_bound = s.objective;
  s.gap = 0.0;
  return s;
}

// Sequential LP-based branch and bound.
inline Solution branch_and_bound_solve(const MipModel& m, const BnbOptions& opt = {}) {
  using detail::Node;
  using detail::NodePtr;
  const auto t0 = std::chrono::steady_clock::now();
  const double sign = m.sense() == Sense::Maximize ? -1.0 : 1.0;
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  Solution out;
  double incumbent = kInf;  // min-form
  std::vector<double> best_x;
  const auto offer = [&](const std::vector<double>& x) {
    if (!m.is_feasible(x)) return false;
    const double v = sign * m.evaluate(x);
    if (v < incumbent - 1e-9) {
      incumbent = v;
      best_x = x;
      return true;
    }
    return false;
  };
  if (!opt.initial.empty()) offer(detail::rounded(m, opt.initial));

  const auto root_lo = lower_bounds(m);
  const auto root_hi = upper_bounds(m);
  BoundedSimplex lp(m, opt.simplex);
  const LpStatus root_st = lp.solve(root_lo, root_hi);
  if (root_st == LpStatus::IterationLimit) throw NumericalError("simplex iteration limit at root");
  if (root_st == LpStatus::Unbounded) {
    out.status = Status::Unbounded;
    return out;
  }
  const auto prune_tol = [&] { return std::isfinite(incumbent) ? std::max(1e-9, 1e-9 * std::abs(incumbent)) : 0.0; };
  const auto gap_closed = [&](double bound) {
    if (!std::isfinite(incumbent)) return false;
    if (bound >= incumbent - prune_tol()) return true;
    return opt.mipgap > 0 && relative_gap(incumbent, bound) <= opt.mipgap;
  };

  std::priority_queue<NodePtr, std::vector<NodePtr>, detail::NodeOrder> open;
  long seq = 0;
  double pruned_bound = kInf;  // smallest bound among nodes dropped by the gap rule
  long nodes = 0;
  Status limit = Status::Optimal;

  const auto dive = [&](std::vector<double> lo, std::vector<double> hi, std::vector<double> x) {
    for (int step = 0; step < 400; ++step) {
      if (elapsed() > opt.time_limit_s) return;
      const int j = detail::least_fractional(m, x);
      if (j < 0) {
        offer(detail::rounded(m, x));
        return;
      }
      const auto v = static_cast<std::size_t>(j);
      const double near = std::round(x[v]);
      const double far = x[v] < near ? std::floor(x[v]) : std::ceil(x[v]);
      bool moved = false;
      for (double target : {near, far}) {
        auto l2 = lo;
        auto h2 = hi;
        l2[v] = h2[v] = target;
        if (target < lo[v] || target > hi[v]) continue;
        const LpStatus st = lp.resolve(l2, h2, incumbent);
        if (st == LpStatus::Optimal && lp.objective() < incumbent - prune_tol()) {
          lo = std::move(l2);
          hi = std::move(h2);
          x = lp.values();
          moved = true;
          break;
        }
      }
      if (!moved) return;
    }
  };

  if (root_st == LpStatus::Optimal) {
    auto root = std::make_shared<Node>();
    root->bound = lp.objective();
    root->seq = seq++;
    open.push(root);
  }

  bool first = true;
  while (!open.empty()) {
    if (nodes >= opt.node_limit) {
      limit = Status::NodeLimit;
      break;
    }
    if (elapsed() > opt.time_limit_s) {
      limit = Status::TimeLimit;
      break;
    }
    if (gap_closed(open.top()->bound)) {
      // Best-bound order: every remaining node is at least this bound.
      pruned_bound = std::min(pruned_bound, open.top()->bound);
      break;
    }
    NodePtr node = open.top();
    open.pop();
    ++nodes;
    std::vector<double> lo = root_lo;
    std::vector<double> hi = root_hi;
    detail::apply_chain(node.get(), lo, hi);
    LpStatus st = lp.resolve(lo, hi, incumbent);
    if (st == LpStatus::Unbounded) {
      out.status = Status::Unbounded;
      return out;
    }
    if (st != LpStatus::Optimal) continue;
    const double obj = lp.objective();
    if (gap_closed(obj)) {
      pruned_bound = std::min(pruned_bound, obj);
      continue;
    }
    std::vector<double> x = lp.values();
    int j = detail::most_fractional(m, x);
    if (j < 0) {
      if (!offer(detail::rounded(m, x))) {
        // Drift: confirm with a cold solve before trusting the node.
        BoundedSimplex cold(m, opt.simplex);
        if (cold.solve(lo, hi) == LpStatus::Optimal) {
          x = cold.values();
          j = detail::most_fractional(m, x);
          if (j < 0) offer(detail::rounded(m, x));
        }
      }
      if (j < 0) continue;
    } else {
      offer(detail::rounded(m, x));
    }
    if (first || (opt.dive_every > 0 && nodes % opt.dive_every == 0)) {
      dive(lo, hi, x);
      first = false;
    }
    const auto v = static_cast<std::size_t>(j);
    for (int side = 0; side < 2; ++side) {
      auto child = std::make_shared<Node>();
      child->parent = node;
      child->has_change = true;
      child->change.var = j;
      child->change.lo = side == 0 ? lo[v] : std::ceil(x[v]);
      child->change.hi = side == 0 ? std::floor(x[v]) : hi[v];
      child->bound = obj;
      child->depth = node->depth + 1;
      child->seq = seq++;
      open.push(std::move(child));
    }
  }

  double bound = pruned_bound;
  if (!open.empty()) bound = std::min(bound, open.top()->bound);
  if (limit == Status::Optimal && open.empty() && !std::isfinite(pruned_bound)) bound = incumbent;
  out.nodes_explored = nodes;
  if (best_x.empty()) {
    out.status = limit == Status::Optimal ? Status::Infeasible : limit;
    out.best_bound = std::isfinite(bound) ? sign * bound : -sign * kInf;
    return out;
  }
  bound = std::min(bound, incumbent);
  out.values = best_x;
  out.objective = sign * incumbent;
  out.best_bound = sign * bound;
  out.gap = relative_gap(out.objective, out.best_bound);
  if (limit != Status::Optimal) {
    out.status = limit;
  } else {
    out.status = out.gap <= 1e-9 ? Status::Optimal : Status::GapReached;
  }
  return out;
}

}  // namespace busdrive::mip
