#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "model.hpp"

namespace busdrive::mip {

namespace detail {

inline std::string lp_name(const MipModel& m, int var) {
  const auto& n = m.var(var).name;
  return n.empty() ? "v" + std::to_string(var) : n;
}

inline void write_expr(std::ostream& os, const MipModel& m, const std::vector<Term>& terms) {
  if (terms.empty()) {
    os << " 0";
    return;
  }
  char buf[64];
  for (const auto& t : terms) {
    std::snprintf(buf, sizeof(buf), " %c %.12g ", t.coef < 0 ? '-' : '+', std::abs(t.coef));
    os << buf << lp_name(m, t.var);
  }
}

}  // namespace detail

// CPLEX-LP style text: objective, constraints, bounds, integer sections.
inline void write_lp(std::ostream& os, const MipModel& m) {
  os << (m.sense() == Sense::Minimize ? "Minimize\n" : "Maximize\n") << " obj:";
  std::vector<Term> obj;
  for (int j = 0; j < m.num_vars(); ++j) {
    if (m.objective()[static_cast<std::size_t>(j)] != 0.0) obj.push_back({j, m.objective()[static_cast<std::size_t>(j)]});
  }
  detail::write_expr(os, m, obj);
  if (m.offset() != 0.0) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), " %c %.12g", m.offset() < 0 ? '-' : '+', std::abs(m.offset()));
    os << buf;
  }
  os << "\nSubject To\n";
  int idx = 0;
  for (const auto& r : m.rows()) {
    os << ' ' << (r.name.empty() ? "c" + std::to_string(idx) : r.name) << ':';
    detail::write_expr(os, m, r.terms);
    char buf[48];
    std::snprintf(buf, sizeof(buf), " %s %.12g\n", r.sense == RowSense::Le ? "<=" : r.sense == RowSense::Ge ? ">=" : "=", r.rhs);
    os << buf;
    ++idx;
  }
  os << "Bounds\n";
  for (const auto& v : m.vars()) {
    if (v.kind == VarKind::Binary) continue;
    char buf[96];
    if (std::isfinite(v.upper)) {
      std::snprintf(buf, sizeof(buf), " %.12g <= ", v.lower);
      os << buf << detail::lp_name(m, v.id);
      std::snprintf(buf, sizeof(buf), " <= %.12g\n", v.upper);
      os << buf;
    } else {
      os << ' ' << detail::lp_name(m, v.id);
      std::snprintf(buf, sizeof(buf), " >= %.12g\n", v.lower);
      os << buf;
    }
  }
  const auto section = [&](const char* title, VarKind k) {
    if (m.count(k) == 0) return;
    os << title << '\n';
    for (const auto& v : m.vars()) {
      if (v.kind == k) os << ' ' << detail::lp_name(m, v.id) << '\n';
    }
  };
  section("Binaries", VarKind::Binary);
  section("Generals", VarKind::Integer);
  os << "End\n";
}

}  // namespace busdrive::mip
