#include <gtest/gtest.h>

#include <busdrive/mip/branch_and_bound.hpp>
#include <busdrive/mip/brute_force.hpp>
#include <busdrive/mip/lp_format.hpp>

#include <random>
#include <sstream>

using namespace busdrive::mip;

namespace {

// Random model with up to 12 integral variables and 20 rows. `binary_only`
// drops continuous and general integer columns.
MipModel random_model(std::mt19937_64& rng, bool binary_only) {
  MipModel m;
  std::uniform_int_distribution<int> nv(2, 12), nr(1, 20), co(-5, 9);
  const int n = nv(rng);
  for (int j = 0; j < n; ++j) {
    const auto roll = rng() % 6;
    if (!binary_only && roll == 0) {
      m.add_continuous("c" + std::to_string(j), 0, 5, co(rng));
    } else if (!binary_only && roll == 1) {
      m.add_var(VarKind::Integer, 0, 3, "i" + std::to_string(j), co(rng));
    } else {
      m.add_binary("b" + std::to_string(j), co(rng));
    }
  }
  if (rng() % 2) m.set_sense(Sense::Maximize);
  const int r = nr(rng);
  for (int i = 0; i < r; ++i) {
    std::vector<Term> t;
    for (int j = 0; j < n; ++j) {
      if (rng() % 3 == 0) t.push_back({j, static_cast<double>(co(rng))});
    }
    const auto s = rng() % 3;
    const RowSense sense = s == 0 ? RowSense::Le : s == 1 ? RowSense::Ge : RowSense::Eq;
    m.add_row(t, sense, static_cast<double>(co(rng) + (s == 2 ? 0 : 3)));
  }
  return m;
}

// Plain enumeration of every 0/1 vector.
std::optional<double> enumerate_binary(const MipModel& m) {
  const int n = m.num_vars();
  std::optional<double> best;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (long mask = 0; mask < (1L << n); ++mask) {
    for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1;
    if (!m.is_feasible(x, 1e-9)) continue;
    const double v = m.evaluate(x);
    if (!best || (m.sense() == Sense::Minimize ? v < *best : v > *best)) best = v;
  }
  return best;
}

BnbOptions exact() {
  BnbOptions o;
  o.mipgap = 0.0;
  return o;
}

}  // namespace

TEST(LpRelax, LowerBoundActive) {
  MipModel m;
  const int x = m.add_continuous("x", 0, 10, 1);
  m.add_row({{x, 1}}, RowSense::Ge, 3);
  const auto s = lp_relax_solve(m);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.value(x), 3.0, 1e-9);
  EXPECT_NEAR(s.objective, 3.0, 1e-9);
}

TEST(LpRelax, InfeasiblePair) {
  MipModel m;
  const int x = m.add_continuous("x", 0, 10, 1);
  m.add_row({{x, 1}}, RowSense::Ge, 2);
  m.add_row({{x, 1}}, RowSense::Le, 1);
  EXPECT_EQ(lp_relax_solve(m).status, Status::Infeasible);
  EXPECT_EQ(branch_and_bound_solve(m).status, Status::Infeasible);
  EXPECT_EQ(brute_force_solve(m).status, Status::Infeasible);
}

TEST(LpRelax, Unbounded) {
  MipModel m;
  const int x = m.add_continuous("x", 0, kInf, 1);
  m.set_sense(Sense::Maximize);
  m.add_row({{x, 1}}, RowSense::Ge, 1);
  EXPECT_EQ(lp_relax_solve(m).status, Status::Unbounded);
}

TEST(BranchAndBound, PureLpMatchesRelaxation) {
  MipModel m;
  const int x = m.add_continuous("x", 0, 4, -1);
  const int y = m.add_continuous("y", 0, 4, -2);
  m.add_row({{x, 1}, {y, 1}}, RowSense::Le, 5);
  m.add_row({{x, 1}, {y, -1}}, RowSense::Ge, -2);
  const auto lp = lp_relax_solve(m);
  const auto bb = branch_and_bound_solve(m, exact());
  ASSERT_EQ(bb.status, Status::Optimal);
  EXPECT_NEAR(bb.objective, lp.objective, 1e-9);
  EXPECT_NEAR(bb.objective, -8.5, 1e-9);
}

TEST(BranchAndBound, ThreeItemKnapsack) {
  // max 5a + 4b + 3c, 2a + 3b + c <= 4; enumeration of the 8 assignments gives a + c = 8.
  MipModel m;
  m.set_sense(Sense::Maximize);
  const int a = m.add_binary("a", 5);
  const int b = m.add_binary("b", 4);
  const int c = m.add_binary("c", 3);
  m.add_row({{a, 2}, {b, 3}, {c, 1}}, RowSense::Le, 4);
  const auto s = branch_and_bound_solve(m, exact());
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.objective, 8.0, 1e-9);
  EXPECT_NEAR(s.value(a), 1.0, 1e-9);
  EXPECT_NEAR(s.value(b), 0.0, 1e-9);
  EXPECT_NEAR(s.value(c), 1.0, 1e-9);
  EXPECT_NEAR(brute_force_solve(m).objective, 8.0, 1e-9);
}

TEST(BranchAndBound, MatchesEnumerationOnFiftyBinaryModels) {
  std::mt19937_64 rng(11);
  int feasible = 0;
  for (int it = 0; it < 50; ++it) {
    const auto m = random_model(rng, true);
    ASSERT_LE(m.count_integral(), 12u);
    ASSERT_LE(m.num_rows(), 20);
    const auto bb = branch_and_bound_solve(m, exact());
    const auto ref = enumerate_binary(m);
    ASSERT_EQ(bb.has_incumbent(), ref.has_value()) << "model " << it;
    if (ref) {
      ++feasible;
      EXPECT_NEAR(bb.objective, *ref, 1e-6) << "model " << it;
      EXPECT_TRUE(m.is_feasible(bb.values));
    }
  }
  EXPECT_GT(feasible, 5);
}

TEST(BranchAndBound, MatchesBruteForceOnMixedModels) {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 300; ++it) {
    const auto m = random_model(rng, false);
    BnbOptions o = exact();
    o.simplex.reinvert_every = 1 + it % 4;
    const auto bb = branch_and_bound_solve(m, o);
    const auto bf = brute_force_solve(m, 12);
    ASSERT_EQ(bb.has_incumbent(), bf.has_incumbent()) << "model " << it;
    if (bf.has_incumbent()) {
      EXPECT_NEAR(bb.objective, bf.objective, 1e-6) << "model " << it;
    }
  }
}

TEST(BranchAndBound, RelaxationSandwich) {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 100; ++it) {
    auto m = random_model(rng, false);
    m.set_sense(Sense::Minimize);
    const auto bf = brute_force_solve(m, 12);
    if (!bf.has_incumbent()) continue;
    const auto lp = lp_relax_solve(m);
    const auto bb = branch_and_bound_solve(m);
    EXPECT_LE(lp.objective, bf.objective + 1e-6);
    EXPECT_LE(bf.objective, bb.objective + 1e-6);
    EXPECT_LE(bb.gap, 0.01 + 1e-12);
  }
}

TEST(BranchAndBound, GapSemantics) {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 100; ++it) {
    const auto m = random_model(rng, false);
    const auto s = branch_and_bound_solve(m);
    if (s.status != Status::Optimal && s.status != Status::GapReached) continue;
    EXPECT_NEAR(s.gap, relative_gap(s.objective, s.best_bound), 1e-12);
    EXPECT_TRUE(m.is_feasible(s.values));
  }
}

TEST(BranchAndBound, Deterministic) {
  std::mt19937_64 rng(9);
  for (int it = 0; it < 30; ++it) {
    const auto m = random_model(rng, false);
    const auto a = branch_and_bound_solve(m);
    const auto b = branch_and_bound_solve(m);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.nodes_explored, b.nodes_explored);
  }
}

TEST(BranchAndBound, NodeLimitKeepsIncumbent) {
  MipModel m;
  std::vector<Term> row;
  for (int j = 0; j < 14; ++j) {
    const int v = m.add_binary("b" + std::to_string(j), -(3.0 + j % 5));
    row.push_back({v, 2.0 + (j * 7) % 5});
  }
  m.add_row(row, RowSense::Le, 17.5);
  BnbOptions o = exact();
  o.node_limit = 2;
  const auto s = branch_and_bound_solve(m, o);
  EXPECT_TRUE(s.status == Status::NodeLimit || s.status == Status::Optimal);
  ASSERT_TRUE(s.has_incumbent());
  EXPECT_TRUE(m.is_feasible(s.values));
  EXPECT_LE(s.best_bound, s.objective + 1e-9);
}

TEST(BranchAndBound, StartIsUsed) {
  MipModel m;
  const int a = m.add_binary("a", 1);
  const int b = m.add_binary("b", 2);
  m.add_row({{a, 1}, {b, 1}}, RowSense::Ge, 1);
  BnbOptions o = exact();
  o.initial = {1.0, 0.0};
  const auto s = branch_and_bound_solve(m, o);
  EXPECT_NEAR(s.objective, 1.0, 1e-9);
  (void)b;
}

TEST(BruteForce, NoIntegralsEqualsRelaxation) {
  MipModel m;
  const int x = m.add_continuous("x", 0, 4, 2);
  const int y = m.add_continuous("y", 1, 4, 1);
  m.add_row({{x, 1}, {y, 1}}, RowSense::Ge, 3);
  EXPECT_NEAR(brute_force_solve(m).objective, lp_relax_solve(m).objective, 1e-9);
}

TEST(BruteForce, RefusesLargeModels) {
  MipModel m;
  for (int j = 0; j < 25; ++j) m.add_binary("b" + std::to_string(j), 1);
  EXPECT_THROW(brute_force_solve(m), ModelError);
  EXPECT_NO_THROW(brute_force_solve(m, 25));
}

TEST(Model, RejectsUndeclaredVariable) {
  MipModel m;
  m.add_binary("a");
  EXPECT_THROW(m.add_row({{3, 1.0}}, RowSense::Le, 1), ModelError);
}

TEST(Model, BinaryBoundsClamped) {
  MipModel m;
  const int a = m.add_var(VarKind::Binary, -2, 5, "a");
  EXPECT_EQ(m.var(a).lower, 0.0);
  EXPECT_EQ(m.var(a).upper, 1.0);
}

TEST(LpFormat, HasAllSections) {
  MipModel m;
  const int a = m.add_binary("a", 1);
  const int x = m.add_continuous("x", 0, 3, -1);
  const int k = m.add_var(VarKind::Integer, 0, 4, "k", 2);
  m.add_row({{a, 1}, {x, 2}, {k, 1}}, RowSense::Le, 4, "cap");
  std::ostringstream os;
  write_lp(os, m);
  const auto s = os.str();
  for (const char* part : {"Minimize", "Subject To", "cap:", "Bounds", "Binaries", "Generals", "End"}) {
    EXPECT_NE(s.find(part), std::string::npos) << part;
  }
}
