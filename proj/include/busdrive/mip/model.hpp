#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace busdrive::mip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kIntTol = 1e-6;
inline constexpr double kFeasTol = 1e-6;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VarKind { Binary, Integer, Continuous };
enum class Sense { Minimize, Maximize };
enum class RowSense { Le, Ge, Eq };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Variable {
  int id = 0;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
  std::string name;

  bool is_integral() const { return kind != VarKind::Continuous; }
};

struct Constraint {
  std::vector<Term> terms;  // sorted by var, no duplicates, no zeros
  RowSense sense = RowSense::Le;
  double rhs = 0.0;
  std::string name;

  double activity(const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.coef * x[static_cast<std::size_t>(t.var)];
    return s;
  }
};

class MipModel {
 public:
  int add_var(VarKind kind, double lower, double upper, std::string name, double obj = 0.0) {
    if (kind == VarKind::Binary) {
      lower = std::max(lower, 0.0);
      upper = std::min(upper, 1.0);
    }
    if (!std::isfinite(lower)) throw ModelError("variable " + name + ": lower bound must be finite");
    if (upper < lower) throw ModelError("variable " + name + ": empty domain");
    Variable v;
    v.id = static_cast<int>(vars_.size());
    v.kind = kind;
    v.lower = lower;
    v.upper = upper;
    v.name = std::move(name);
    vars_.push_back(std::move(v));
    obj_.push_back(obj);
    return vars_.back().id;
  }
  int add_binary(std::string name, double obj = 0.0) { return add_var(VarKind::Binary, 0.0, 1.0, std::move(name), obj); }
  int add_continuous(std::string name, double lower, double upper, double obj = 0.0) {
    return add_var(VarKind::Continuous, lower, upper, std::move(name), obj);
  }

  void set_obj(int var, double c) { obj_.at(static_cast<std::size_t>(var)) = c; }
  void add_obj(int var, double c) { obj_.at(static_cast<std::size_t>(var)) += c; }
  void set_sense(Sense s) { sense_ = s; }
  void set_offset(double c) { offset_ = c; }

  int add_row(std::vector<Term> terms, RowSense sense, double rhs, std::string name = {}) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    for (const auto& t : terms) {
      if (t.var < 0 || t.var >= num_vars()) throw ModelError("row " + name + ": undeclared variable " + std::to_string(t.var));
      if (!merged.empty() && merged.back().var == t.var) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    rows_.push_back(Constraint{std::move(merged), sense, rhs, std::move(name)});
    return static_cast<int>(rows_.size()) - 1;
  }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<Variable>& vars() const { return vars_; }
  const Variable& var(int i) const { return vars_.at(static_cast<std::size_t>(i)); }
  const std::vector<Constraint>& rows() const { return rows_; }
  const std::vector<double>& objective() const { return obj_; }
  Sense sense() const { return sense_; }
  double offset() const { return offset_; }

  std::size_t count(VarKind k) const {
    return static_cast<std::size_t>(std::count_if(vars_.begin(), vars_.end(), [k](const Variable& v) { return v.kind == k; }));
  }
  std::size_t count_integral() const { return count(VarKind::Binary) + count(VarKind::Integer); }

  double evaluate(const std::vector<double>& x) const {
    double s = offset_;
    for (std::size_t j = 0; j < obj_.size(); ++j) s += obj_[j] * x[j];
    return s;
  }

  // First violated bound, integrality or row, empty if x is feasible.
  std::string violation(const std::vector<double>& x, double tol = kFeasTol) const {
    if (x.size() != vars_.size()) return "assignment size mismatch";
    for (const auto& v : vars_) {
      const double val = x[static_cast<std::size_t>(v.id)];
      if (val < v.lower - tol || val > v.upper + tol) return "bound violated: " + v.name;
      if (v.is_integral() && std::abs(val - std::round(val)) > kIntTol) return "integrality violated: " + v.name;
    }
    for (const auto& r : rows_) {
      const double a = r.activity(x);
      const double scale = std::max(1.0, std::abs(r.rhs));
      const bool ok = r.sense == RowSense::Le   ? a <= r.rhs + tol * scale
                      : r.sense == RowSense::Ge ? a >= r.rhs - tol * scale
                                                : std::abs(a - r.rhs) <= tol * scale;
      if (!ok) return "row violated: " + (r.name.empty() ? std::string("<unnamed>") : r.name);
    }
    return {};
  }
  bool is_feasible(const std::vector<double>& x, double tol = kFeasTol) const { return violation(x, tol).empty(); }

 private:
  std::vector<Variable> vars_;
  std::vector<double> obj_;
  std::vector<Constraint> rows_;
  Sense sense_ = Sense::Minimize;
  double offset_ = 0.0;
};

enum class Status { Optimal, GapReached, Infeasible, Unbounded, NodeLimit, TimeLimit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::GapReached: return "GapReached";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::NodeLimit: return "NodeLimit";
    case Status::TimeLimit: return "TimeLimit";
  }
  return "?";
}

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> values;  // empty when no incumbent
  double objective = kInf;     // in the model's own sense
  double best_bound = -kInf;
  double gap = kInf;
  long nodes_explored = 0;

  bool has_incumbent() const { return !values.empty(); }
  double value(int var) const { return values.at(static_cast<std::size_t>(var)); }
};

inline double relative_gap(double objective, double bound) {
  return std::abs(objective - bound) / std::max(1e-9, std::abs(objective));
}

}  // namespace busdrive::mip
