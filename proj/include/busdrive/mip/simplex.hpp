#pragma once

// Dense-tableau bounded simplex. Every row carries a slack; rows whose slack
// basis is infeasible get an artificial column for phase 1. The tableau is
// kept as B^-1 [A | I | Art], so the slack block doubles as B^-1 for
// periodic recomputation of basic values and reduced costs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "model.hpp"

namespace busdrive::mip {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Cutoff, IterationLimit };

struct SimplexOptions {
  double primal_tol = 1e-7;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-7;
  int bland_after = 1000;  // consecutive degenerate pivots before Bland's rule
  int refresh_every = 100;
  int reinvert_every = 800;
  long iteration_cap = 0;  // 0: derived from model size
};

class BoundedSimplex {
 public:
  explicit BoundedSimplex(const MipModel& model, SimplexOptions opt = {}) : opt_(opt) {
    n_ = model.num_vars();
    m_ = model.num_rows();
    const double sign = model.sense() == Sense::Maximize ? -1.0 : 1.0;
    offset_ = sign * model.offset();
    struct_cost_.resize(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) struct_cost_[static_cast<std::size_t>(j)] = sign * model.objective()[static_cast<std::size_t>(j)];
    struct_cols_.assign(static_cast<std::size_t>(n_), {});
    b_.resize(static_cast<std::size_t>(m_));
    eq_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const auto& row = model.rows()[static_cast<std::size_t>(i)];
      const double rs = row.sense == RowSense::Ge ? -1.0 : 1.0;
      b_[static_cast<std::size_t>(i)] = rs * row.rhs;
      eq_[static_cast<std::size_t>(i)] = row.sense == RowSense::Eq;
      for (const auto& t : row.terms) struct_cols_[static_cast<std::size_t>(t.var)].push_back({i, rs * t.coef});
    }
    cap_ = opt_.iteration_cap > 0 ? opt_.iteration_cap : 200L * (n_ + m_) + 20000;
  }

  // Cold start from the slack basis. lo/hi are structural bounds.
  LpStatus solve(const std::vector<double>& lo, const std::vector<double>& hi) {
    build(lo, hi);
    if (n_art_ > 0) {
      std::vector<double> phase1(static_cast<std::size_t>(ncols_), 0.0);
      for (int a = 0; a < n_art_; ++a) phase1[static_cast<std::size_t>(art0() + a)] = 1.0;
      cost_ = phase1;
      recompute_duals();
      const LpStatus st = primal_loop();
      if (st == LpStatus::IterationLimit) return finish(st);
      double infeas = 0.0;
      double scale = 1.0;
      for (int a = 0; a < n_art_; ++a) infeas += x_[static_cast<std::size_t>(art0() + a)];
      for (double v : b_) scale = std::max(scale, std::abs(v));
      if (infeas > opt_.primal_tol * scale) return finish(LpStatus::Infeasible);
      for (int a = 0; a < n_art_; ++a) {
        const auto c = static_cast<std::size_t>(art0() + a);
        hi_[c] = 0.0;
        lo_[c] = 0.0;
      }
      drive_out_artificials();
    }
    cost_ = full_cost();
    recompute_duals();
    refresh_primal();
    return finish(primal_loop());
  }

  // Warm start after a previous solve with new structural bounds. Falls back
  // to a cold start when the stored basis cannot be reused.
  LpStatus resolve(const std::vector<double>& lo, const std::vector<double>& hi, double cutoff = kInf) {
    if (!has_basis_ || pivots_since_cold_ > 40L * (m_ + 50)) return solve(lo, hi);
    for (int j = 0; j < n_; ++j) {
      const auto c = static_cast<std::size_t>(j);
      lo_[c] = lo[c];
      hi_[c] = hi[c];
      if (pos_[c] >= 0) continue;
      bool upper;
      if (lo_[c] == hi_[c]) {
        upper = false;
      } else if (d_[c] > opt_.dual_tol) {
        upper = false;
      } else if (d_[c] < -opt_.dual_tol) {
        upper = true;
      } else {
        upper = at_upper_[c] != 0;
      }
      if (upper && !std::isfinite(hi_[c])) return solve(lo, hi);
      at_upper_[c] = upper ? 1 : 0;
      x_[c] = upper ? hi_[c] : lo_[c];
    }
    refresh_primal();
    LpStatus st = dual_loop(cutoff);
    if (st == LpStatus::IterationLimit) return solve(lo, hi);
    if (st != LpStatus::Optimal) return finish(st);
    st = primal_loop();
    if (st == LpStatus::IterationLimit) return solve(lo, hi);
    return finish(st);
  }

  LpStatus status() const { return status_; }
  double objective() const {
    double s = offset_;
    for (int j = 0; j < ncols_; ++j) s += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return s;
  }
  std::vector<double> values() const { return {x_.begin(), x_.begin() + n_}; }
  long iterations() const { return iterations_; }


 private:
  int art0() const { return n_ + m_; }
  double& T(int i, int j) { return tab_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ncols_) + static_cast<std::size_t>(j)]; }
  double T(int i, int j) const { return tab_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ncols_) + static_cast<std::size_t>(j)]; }

  LpStatus finish(LpStatus st) {
    status_ = st;
    has_basis_ = st == LpStatus::Optimal || st == LpStatus::Infeasible || st == LpStatus::Cutoff;
    // A phase-1 infeasibility leaves artificials in play, so that basis is
    // not a valid warm start.
    if (st == LpStatus::Infeasible && in_phase1_) has_basis_ = false;
    return st;
  }

  std::vector<double> full_cost() const {
    std::vector<double> c(static_cast<std::size_t>(ncols_), 0.0);
    std::copy(struct_cost_.begin(), struct_cost_.end(), c.begin());
    return c;
  }

  void build(const std::vector<double>& lo, const std::vector<double>& hi) {
    if (lo.size() != static_cast<std::size_t>(n_) || hi.size() != static_cast<std::size_t>(n_)) {
      throw NumericalError("bound vector size mismatch");
    }
    pivots_since_cold_ = 0;
    since_reinvert_ = 0;
    broken_ = false;
    // Residuals with every structural at its lower bound.
    std::vector<double> resid = b_;
    for (int j = 0; j < n_; ++j) {
      if (!std::isfinite(lo[static_cast<std::size_t>(j)])) throw NumericalError("infinite lower bound");
      for (const auto& [i, a] : struct_cols_[static_cast<std::size_t>(j)]) resid[static_cast<std::size_t>(i)] -= a * lo[static_cast<std::size_t>(j)];
    }
    art_row_.clear();
    art_sign_.clear();
    std::vector<double> art_sign(static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double r = resid[static_cast<std::size_t>(i)];
      const bool need = eq_[static_cast<std::size_t>(i)] ? std::abs(r) > opt_.primal_tol : r < -opt_.primal_tol;
      if (need) {
        art_sign[static_cast<std::size_t>(i)] = r < 0 ? -1.0 : 1.0;
        art_row_.push_back(i);
        art_sign_.push_back(art_sign[static_cast<std::size_t>(i)]);
      }
    }
    n_art_ = static_cast<int>(art_row_.size());
    in_phase1_ = n_art_ > 0;
    ncols_ = n_ + m_ + n_art_;
    tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(ncols_), 0.0);
    for (int j = 0; j < n_; ++j) {
      for (const auto& [i, a] : struct_cols_[static_cast<std::size_t>(j)]) T(i, j) = a;
    }
    for (int i = 0; i < m_; ++i) T(i, n_ + i) = 1.0;
    lo_.assign(static_cast<std::size_t>(ncols_), 0.0);
    hi_.assign(static_cast<std::size_t>(ncols_), kInf);
    x_.assign(static_cast<std::size_t>(ncols_), 0.0);
    at_upper_.assign(static_cast<std::size_t>(ncols_), 0);
    pos_.assign(static_cast<std::size_t>(ncols_), -1);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    for (int j = 0; j < n_; ++j) {
      lo_[static_cast<std::size_t>(j)] = lo[static_cast<std::size_t>(j)];
      hi_[static_cast<std::size_t>(j)] = hi[static_cast<std::size_t>(j)];
      x_[static_cast<std::size_t>(j)] = lo[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      if (eq_[static_cast<std::size_t>(i)]) hi_[static_cast<std::size_t>(n_ + i)] = 0.0;
    }
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      basis_[static_cast<std::size_t>(i)] = s;
      pos_[static_cast<std::size_t>(s)] = i;
      x_[static_cast<std::size_t>(s)] = resid[static_cast<std::size_t>(i)];
    }
    for (int a = 0; a < n_art_; ++a) {
      const int i = art_row_[static_cast<std::size_t>(a)];
      const int c = art0() + a;
      const double sg = art_sign[static_cast<std::size_t>(i)];
      T(i, c) = sg;
      if (sg < 0) {
        for (int j = 0; j < ncols_; ++j) T(i, j) = -T(i, j);
      }
      const int s = n_ + i;
      pos_[static_cast<std::size_t>(s)] = -1;
      x_[static_cast<std::size_t>(s)] = 0.0;
      basis_[static_cast<std::size_t>(i)] = c;
      pos_[static_cast<std::size_t>(c)] = i;
      x_[static_cast<std::size_t>(c)] = std::abs(resid[static_cast<std::size_t>(i)]);
    }
  }

  // Column of the original system for column j, as (row, coef) pairs.
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (const auto& [i, a] : struct_cols_[static_cast<std::size_t>(j)]) f(i, a);
    } else if (j < art0()) {
      f(j - n_, 1.0);
    } else {
      const auto a = static_cast<std::size_t>(j - art0());
      f(art_row_[a], art_sign_[a]);
    }
  }

  void refresh_primal() {
    std::vector<double> rhs = b_;
    for (int j = 0; j < ncols_; ++j) {
      if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
      const double v = x_[static_cast<std::size_t>(j)];
      if (v == 0.0) continue;
      for_column(j, [&](int i, double a) { rhs[static_cast<std::size_t>(i)] -= a * v; });
    }
    for (int k = 0; k < m_; ++k) {
      double s = 0.0;
      const double* row = &tab_[static_cast<std::size_t>(k) * static_cast<std::size_t>(ncols_) + static_cast<std::size_t>(n_)];
      for (int i = 0; i < m_; ++i) s += row[i] * rhs[static_cast<std::size_t>(i)];
      x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)])] = s;
    }
  }

  void recompute_duals() {
    std::vector<double> y(static_cast<std::size_t>(m_), 0.0);
    for (int k = 0; k < m_; ++k) {
      const double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)])];
      if (cb == 0.0) continue;
      const double* row = &tab_[static_cast<std::size_t>(k) * static_cast<std::size_t>(ncols_) + static_cast<std::size_t>(n_)];
      for (int i = 0; i < m_; ++i) y[static_cast<std::size_t>(i)] += cb * row[i];
    }
    d_.assign(static_cast<std::size_t>(ncols_), 0.0);
    for (int j = 0; j < ncols_; ++j) {
      if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
      double s = cost_[static_cast<std::size_t>(j)];
      for_column(j, [&](int i, double a) { s -= y[static_cast<std::size_t>(i)] * a; });
      d_[static_cast<std::size_t>(j)] = s;
    }
  }

  void pivot(int r, int q) {
    const double piv = T(r, q);
    double* prow = &tab_[static_cast<std::size_t>(r) * static_cast<std::size_t>(ncols_)];
    nz_.clear();
    for (int j = 0; j < ncols_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] /= piv;
        if (std::abs(prow[j]) < 1e-14) {
          prow[j] = 0.0;
        } else {
          nz_.push_back(j);
        }
      }
    }
    prow[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[static_cast<std::size_t>(i) * static_cast<std::size_t>(ncols_)];
      const double f = row[q];
      if (f == 0.0) continue;
      for (int j : nz_) {
        double v = row[j] - f * prow[j];
        if (std::abs(v) < 1e-13) v = 0.0;
        row[j] = v;
      }
      row[q] = 0.0;
    }
    const double fd = d_[static_cast<std::size_t>(q)];
    if (fd != 0.0) {
      for (int j : nz_) d_[static_cast<std::size_t>(j)] -= fd * prow[j];
    }
    d_[static_cast<std::size_t>(q)] = 0.0;
    const int leaving = basis_[static_cast<std::size_t>(r)];
    pos_[static_cast<std::size_t>(leaving)] = -1;
    basis_[static_cast<std::size_t>(r)] = q;
    pos_[static_cast<std::size_t>(q)] = r;
    at_upper_[static_cast<std::size_t>(q)] = 0;
    ++iterations_;
    ++pivots_since_cold_;
    if (++since_reinvert_ >= opt_.reinvert_every) {
      since_reinvert_ = 0;
      since_refresh_ = 0;
      if (!reinvert()) {
        // Loops report IterationLimit, which forces a cold restart.
        broken_ = true;
        return;
      }
      refresh_primal();
      recompute_duals();
    } else if (++since_refresh_ >= opt_.refresh_every) {
      since_refresh_ = 0;
      refresh_primal();
      recompute_duals();
    }
  }

  // Rebuilds the tableau from the original columns of the current basis,
  // discarding rounding error accumulated by the rank-one updates.
  bool reinvert() {
    const auto M = static_cast<std::size_t>(m_);
    std::vector<double> B(M * M, 0.0);
    for (int k = 0; k < m_; ++k) {
      for_column(basis_[static_cast<std::size_t>(k)], [&](int i, double a) { B[static_cast<std::size_t>(i) * M + static_cast<std::size_t>(k)] = a; });
    }
    // Gauss-Jordan on [B | I] with partial pivoting; rows of inv follow B's.
    std::vector<double> inv(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i) inv[i * M + i] = 1.0;
    for (std::size_t c = 0; c < M; ++c) {
      std::size_t p = c;
      for (std::size_t i = c + 1; i < M; ++i) {
        if (std::abs(B[i * M + c]) > std::abs(B[p * M + c])) p = i;
      }
      if (std::abs(B[p * M + c]) < 1e-11) return false;
      if (p != c) {
        std::swap_ranges(B.begin() + static_cast<std::ptrdiff_t>(p * M), B.begin() + static_cast<std::ptrdiff_t>((p + 1) * M),
                         B.begin() + static_cast<std::ptrdiff_t>(c * M));
        std::swap_ranges(inv.begin() + static_cast<std::ptrdiff_t>(p * M), inv.begin() + static_cast<std::ptrdiff_t>((p + 1) * M),
                         inv.begin() + static_cast<std::ptrdiff_t>(c * M));
      }
      const double piv = B[c * M + c];
      double* brow = &B[c * M];
      double* irow = &inv[c * M];
      for (std::size_t j = 0; j < M; ++j) {
        brow[j] /= piv;
        irow[j] /= piv;
      }
      for (std::size_t i = 0; i < M; ++i) {
        if (i == c) continue;
        const double f = B[i * M + c];
        if (f == 0.0) continue;
        double* bi = &B[i * M];
        double* ii = &inv[i * M];
        for (std::size_t j = c; j < M; ++j) bi[j] -= f * brow[j];
        for (std::size_t j = 0; j < M; ++j) ii[j] -= f * irow[j];
      }
    }
    // After elimination, row k of inv is row k of B^-1 (basis position k).
    std::fill(tab_.begin(), tab_.end(), 0.0);
    for (int j = 0; j < ncols_; ++j) {
      for_column(j, [&](int i, double a) {
        for (std::size_t k = 0; k < M; ++k) {
          const double v = inv[k * M + static_cast<std::size_t>(i)];
          if (v != 0.0) T(static_cast<int>(k), j) += v * a;
        }
      });
    }
    for (std::size_t k = 0; k < M; ++k) {
      double* row = &tab_[k * static_cast<std::size_t>(ncols_)];
      for (int j = 0; j < ncols_; ++j) {
        if (std::abs(row[j]) < 1e-13) row[j] = 0.0;
      }
      row[basis_[k]] = 1.0;
    }
    return true;
  }

  bool fixed(int j) const { return hi_[static_cast<std::size_t>(j)] - lo_[static_cast<std::size_t>(j)] <= 0.0; }

  LpStatus primal_loop() {
    int degenerate = 0;
    long iters = 0;
    while (true) {
      if (++iters > cap_ || broken_) return LpStatus::IterationLimit;
      const bool bland = degenerate >= opt_.bland_after;
      int q = -1;
      double best = 0.0;
      for (int j = 0; j < ncols_; ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0 || fixed(j)) continue;
        const double dj = d_[static_cast<std::size_t>(j)];
        const double score = at_upper_[static_cast<std::size_t>(j)] ? dj : -dj;
        if (score <= opt_.dual_tol) continue;
        if (bland) {
          q = j;
          break;
        }
        if (score > best) {
          best = score;
          q = j;
        }
      }
      if (q < 0) return LpStatus::Optimal;
      const double dir = at_upper_[static_cast<std::size_t>(q)] ? -1.0 : 1.0;
      double t = hi_[static_cast<std::size_t>(q)] - lo_[static_cast<std::size_t>(q)];
      int r = -1;
      double r_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (std::abs(a) < opt_.pivot_tol) continue;
        const double rate = -a * dir;
        const int k = basis_[static_cast<std::size_t>(i)];
        double lim;
        if (rate < 0) {
          lim = (x_[static_cast<std::size_t>(k)] - lo_[static_cast<std::size_t>(k)]) / -rate;
        } else {
          if (!std::isfinite(hi_[static_cast<std::size_t>(k)])) continue;
          lim = (hi_[static_cast<std::size_t>(k)] - x_[static_cast<std::size_t>(k)]) / rate;
        }
        lim = std::max(lim, 0.0);
        const double eps = 1e-12;
        bool take = false;
        if (lim < t - eps) {
          take = true;
        } else if (r >= 0 && lim <= t + eps) {
          take = bland ? k < basis_[static_cast<std::size_t>(r)] : std::abs(a) > std::abs(r_alpha);
        }
        if (take) {
          t = std::min(t, lim);
          r = i;
          r_alpha = a;
        }
      }
      if (r < 0 && !std::isfinite(t)) return LpStatus::Unbounded;
      degenerate = t <= 1e-12 ? degenerate + 1 : 0;
      x_[static_cast<std::size_t>(q)] += dir * t;
      if (t != 0.0) {
        for (int i = 0; i < m_; ++i) {
          const double a = T(i, q);
          if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * dir * t;
        }
      }
      if (r < 0) {
        at_upper_[static_cast<std::size_t>(q)] = dir > 0 ? 1 : 0;
        x_[static_cast<std::size_t>(q)] = dir > 0 ? hi_[static_cast<std::size_t>(q)] : lo_[static_cast<std::size_t>(q)];
        continue;
      }
      const int k = basis_[static_cast<std::size_t>(r)];
      const bool to_lower = -r_alpha * dir < 0;
      x_[static_cast<std::size_t>(k)] = to_lower ? lo_[static_cast<std::size_t>(k)] : hi_[static_cast<std::size_t>(k)];
      pivot(r, q);
      at_upper_[static_cast<std::size_t>(k)] = to_lower ? 0 : 1;
    }
  }

  LpStatus dual_loop(double cutoff) {
    int degenerate = 0;
    long iters = 0;
    while (true) {
      if (++iters > cap_ || broken_) return LpStatus::IterationLimit;
      if (std::isfinite(cutoff) && iters % 8 == 0 && objective() > cutoff) return LpStatus::Cutoff;
      const bool bland = degenerate >= opt_.bland_after;
      int r = -1;
      double worst = 0.0;
      for (int i = 0; i < m_; ++i) {
        const int k = basis_[static_cast<std::size_t>(i)];
        const double v = x_[static_cast<std::size_t>(k)];
        const double tol = opt_.primal_tol * std::max(1.0, std::abs(v));
        double viol = 0.0;
        if (v < lo_[static_cast<std::size_t>(k)] - tol) viol = lo_[static_cast<std::size_t>(k)] - v;
        else if (v > hi_[static_cast<std::size_t>(k)] + tol) viol = v - hi_[static_cast<std::size_t>(k)];
        if (viol <= 0.0) continue;
        if (bland) {
          if (r < 0 || k < basis_[static_cast<std::size_t>(r)]) r = i;
        } else if (viol > worst) {
          worst = viol;
          r = i;
        }
      }
      if (r < 0) return LpStatus::Optimal;
      const int k = basis_[static_cast<std::size_t>(r)];
      const bool below = x_[static_cast<std::size_t>(k)] < lo_[static_cast<std::size_t>(k)];
      const double target = below ? lo_[static_cast<std::size_t>(k)] : hi_[static_cast<std::size_t>(k)];
      int q = -1;
      double best = kInf;
      double q_alpha = 0.0;
      for (int j = 0; j < ncols_; ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0 || fixed(j)) continue;
        const double a = T(r, j);
        if (std::abs(a) < opt_.pivot_tol) continue;
        const bool up = at_upper_[static_cast<std::size_t>(j)] != 0;
        // x_k moves by -a * dx_j; it must move towards target.
        const bool ok = below ? (up ? a > 0 : a < 0) : (up ? a < 0 : a > 0);
        if (!ok) continue;
        const double dj = d_[static_cast<std::size_t>(j)];
        const double ratio = std::max(0.0, up ? -dj : dj) / std::abs(a);
        const double eps = 1e-12;
        bool take = false;
        if (ratio < best - eps) {
          take = true;
        } else if (q >= 0 && ratio <= best + eps) {
          take = bland ? false : std::abs(a) > std::abs(q_alpha);
        }
        if (take) {
          best = std::min(best, ratio);
          q = j;
          q_alpha = a;
        }
      }
      if (q < 0) return LpStatus::Infeasible;
      degenerate = best <= 1e-12 ? degenerate + 1 : 0;
      const double delta = (x_[static_cast<std::size_t>(k)] - target) / q_alpha;
      x_[static_cast<std::size_t>(q)] += delta;
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (a != 0.0 && i != r) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * delta;
      }
      x_[static_cast<std::size_t>(k)] = target;
      pivot(r, q);
      at_upper_[static_cast<std::size_t>(k)] = below ? 0 : 1;
    }
  }

  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      const int k = basis_[static_cast<std::size_t>(r)];
      if (k < art0()) continue;
      int q = -1;
      double best = 1e-7;
      for (int j = 0; j < art0(); ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
        const double a = std::abs(T(r, j));
        if (a > best) {
          best = a;
          q = j;
        }
      }
      if (q < 0) continue;  // redundant row; the artificial stays basic at 0
      const double delta = (x_[static_cast<std::size_t>(k)] - 0.0) / T(r, q);
      x_[static_cast<std::size_t>(q)] += delta;
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (a != 0.0 && i != r) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * delta;
      }
      x_[static_cast<std::size_t>(k)] = 0.0;
      pivot(r, q);
    }
    in_phase1_ = false;
  }

  SimplexOptions opt_;
  int n_ = 0;
  int m_ = 0;
  int n_art_ = 0;
  int ncols_ = 0;
  long cap_ = 0;
  double offset_ = 0.0;
  std::vector<double> struct_cost_;
  std::vector<std::vector<std::pair<int, double>>> struct_cols_;
  std::vector<double> b_;
  std::vector<char> eq_;
  std::vector<int> art_row_;
  std::vector<double> art_sign_;

  std::vector<double> tab_;
  std::vector<double> cost_;
  std::vector<double> d_;
  std::vector<double> lo_, hi_, x_;
  std::vector<char> at_upper_;
  std::vector<int> pos_, basis_;
  std::vector<int> nz_;

  LpStatus status_ = LpStatus::Infeasible;
  bool has_basis_ = false;
  bool in_phase1_ = false;
  long iterations_ = 0;
  long pivots_since_cold_ = 0;
  int since_refresh_ = 0;
  int since_reinvert_ = 0;
  bool broken_ = false;
};

}  // namespace busdrive::mip
