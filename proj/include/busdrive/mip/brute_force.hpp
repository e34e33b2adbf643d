#pragma once

// Exhaustive enumeration over integral variables, used as an oracle for the
// LP-based solver. Domains are pruned by activity-based bound propagation;
// leaves resolve the continuous remainder directly when every row holds at
// most one continuous variable, and by LP otherwise.

#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"
#include "simplex.hpp"

namespace busdrive::mip {

namespace detail {

class Propagator {
 public:
  explicit Propagator(const MipModel& m) : m_(m) {}

  // Tightens [lo, hi] to a fixpoint; false if a domain empties.
  bool run(std::vector<double>& lo, std::vector<double>& hi) const {
    for (int pass = 0; pass < 64; ++pass) {
      bool changed = false;
      for (const auto& row : m_.rows()) {
        if (row.sense != RowSense::Ge && !tighten(row, 1.0, row.rhs, lo, hi, changed)) return false;
        if (row.sense != RowSense::Le && !tighten(row, -1.0, -row.rhs, lo, hi, changed)) return false;
      }
      if (!changed) return true;
    }
    return true;
  }

 private:
  // Enforces s * (a.x) <= rhs.
  bool tighten(const Constraint& row, double s, double rhs, std::vector<double>& lo, std::vector<double>& hi,
               bool& changed) const {
    double min_act = 0.0;
    int n_inf = 0;
    int inf_var = -1;
    for (const auto& t : row.terms) {
      const double a = s * t.coef;
      const auto v = static_cast<std::size_t>(t.var);
      const double b = a > 0 ? lo[v] : hi[v];
      if (!std::isfinite(b)) {
        ++n_inf;
        inf_var = t.var;
      } else {
        min_act += a * b;
      }
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(rhs));
    if (n_inf == 0 && min_act > rhs + tol) return false;
    if (n_inf > 1) return true;
    for (const auto& t : row.terms) {
      const double a = s * t.coef;
      const auto v = static_cast<std::size_t>(t.var);
      double rest;
      if (n_inf == 1) {
        if (t.var != inf_var) continue;
        rest = min_act;
      } else {
        rest = min_act - a * (a > 0 ? lo[v] : hi[v]);
      }
      const double limit = (rhs - rest) / a;
      const bool integral = m_.var(t.var).is_integral();
      if (a > 0) {
        double nh = integral ? std::floor(limit + 1e-9) : limit;
        if (nh < hi[v] - 1e-9) {
          hi[v] = nh;
          changed = true;
        }
      } else {
        double nl = integral ? std::ceil(limit - 1e-9) : limit;
        if (nl > lo[v] + 1e-9) {
          lo[v] = nl;
          changed = true;
        }
      }
      if (lo[v] > hi[v] + 1e-9) return false;
      if (lo[v] > hi[v]) hi[v] = lo[v];
    }
    return true;
  }

  const MipModel& m_;
};

}  // namespace detail

inline Solution brute_force_solve(const MipModel& m, int max_binaries = 24) {
  const auto n_int = static_cast<int>(m.count_integral());
  if (n_int > max_binaries) {
    throw ModelError("brute force refused: " + std::to_string(n_int) + " integral variables exceed limit " +
                     std::to_string(max_binaries));
  }
  for (const auto& v : m.vars()) {
    if (v.is_integral() && !std::isfinite(v.upper)) throw ModelError("brute force needs finite domains: " + v.name);
  }
  const double sign = m.sense() == Sense::Maximize ? -1.0 : 1.0;
  std::vector<double> c;
  for (double v : m.objective()) c.push_back(sign * v);

  // Separable leaves: each row carries at most one continuous variable.
  bool separable = true;
  for (const auto& row : m.rows()) {
    int cont = 0;
    for (const auto& t : row.terms) cont += m.var(t.var).is_integral() ? 0 : 1;
    if (cont > 1) separable = false;
  }

  detail::Propagator prop(m);
  double best = kInf;
  std::vector<double> best_x;
  bool unbounded = false;
  long leaves = 0;

  const auto optimistic = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    double s = sign * m.offset();
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (c[j] > 0) s += c[j] * lo[j];
      else if (c[j] < 0) s += std::isfinite(hi[j]) ? c[j] * hi[j] : -kInf;
    }
    return s;
  };

  const auto leaf = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    ++leaves;
    std::vector<double> x(lo.size());
    if (separable) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (c[j] < 0) {
          if (!std::isfinite(hi[j])) {
            unbounded = true;
            return;
          }
          x[j] = hi[j];
        } else {
          x[j] = lo[j];
        }
      }
      if (!m.is_feasible(x)) return;
    } else {
      BoundedSimplex lp(m);
      const LpStatus st = lp.solve(lo, hi);
      if (st == LpStatus::Unbounded) {
        unbounded = true;
        return;
      }
      if (st != LpStatus::Optimal) return;
      x = lp.values();
      for (const auto& v : m.vars()) {
        if (v.is_integral()) x[static_cast<std::size_t>(v.id)] = std::round(x[static_cast<std::size_t>(v.id)]);
      }
    }
    const double val = sign * m.evaluate(x);
    if (val < best - 1e-9) {
      best = val;
      best_x = std::move(x);
    }
  };

  // Recursive DFS in variable-id order, values ascending.
  const auto dfs = [&](auto&& self, std::vector<double> lo, std::vector<double> hi) -> void {
    if (unbounded) return;
    if (!prop.run(lo, hi)) return;
    if (optimistic(lo, hi) >= best - 1e-9) return;
    int pick = -1;
    for (const auto& v : m.vars()) {
      const auto j = static_cast<std::size_t>(v.id);
      if (v.is_integral() && lo[j] < hi[j]) {
        pick = v.id;
        break;
      }
    }
    if (pick < 0) {
      leaf(lo, hi);
      return;
    }
    const auto j = static_cast<std::size_t>(pick);
    const auto first = static_cast<long>(std::ceil(lo[j] - 1e-9));
    const auto last = static_cast<long>(std::floor(hi[j] + 1e-9));
    for (long val = first; val <= last; ++val) {
      auto l2 = lo;
      auto h2 = hi;
      l2[j] = h2[j] = static_cast<double>(val);
      self(self, std::move(l2), std::move(h2));
    }
  };

  std::vector<double> lo;
  std::vector<double> hi;
  for (const auto& v : m.vars()) {
    lo.push_back(v.is_integral() ? std::ceil(v.lower - 1e-9) : v.lower);
    hi.push_back(v.is_integral() ? std::floor(v.upper + 1e-9) : v.upper);
  }
  dfs(dfs, lo, hi);

  Solution s;
  s.nodes_explored = leaves;
  if (unbounded) {
    s.status = Status::Unbounded;
    return s;
  }
  if (best_x.empty()) return s;
  s.status = Status::Optimal;
  s.values = std::move(best_x);
  s.objective = sign * best;
  s.best_bound = s.objective;
  s.gap = 0.0;
  return s;
}

}  // namespace busdrive::mip
