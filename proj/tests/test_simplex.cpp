#include <gtest/gtest.h>

#include <random>

#include "olp/core.hpp"
#include "olp/generators.hpp"
#include "olp/simplex.hpp"
#include "test_support.hpp"

namespace olp {
namespace {

void expect_certificate(const Instance& inst, const LpSolution& sol) {
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  const auto& b = inst.capacity();
  double bmax = 0;
  for (double v : b) bmax = std::max(bmax, std::abs(v));
  RealVector ax(inst.m(), 0.0);
  for (Index j = 0; j < inst.n(); ++j) {
    EXPECT_GE(sol.primal[j], -1e-9);
    EXPECT_LE(sol.primal[j], 1 + 1e-9);
    for (Index i = 0; i < inst.m(); ++i) ax[i] += inst.coeff(i, j) * sol.primal[j];
  }
  for (Index i = 0; i < inst.m(); ++i) {
    EXPECT_LE(ax[i], b[i] + 1e-7 * (1 + bmax));
    EXPECT_GE(sol.duals[i], 0.0);
    // complementary slackness on capacity rows
    EXPECT_LE(std::abs(sol.duals[i] * (b[i] - ax[i])), 1e-6);
  }
  double dual_obj = 0;
  for (Index i = 0; i < inst.m(); ++i) dual_obj += b[i] * sol.duals[i];
  for (Index j = 0; j < inst.n(); ++j) {
    dual_obj += sol.reduced_bounds_duals[j];
    const double lhs = detail::dot(inst.column(j), sol.duals) + sol.reduced_bounds_duals[j];
    EXPECT_GE(lhs, inst.reward(j) - 1e-6);
    EXPECT_LE(std::abs(sol.reduced_bounds_duals[j] * (1 - sol.primal[j])), 1e-6);
  }
  EXPECT_LE(std::abs(sol.objective - dual_obj), 1e-6 * (1 + std::abs(sol.objective)));
}

TEST(SolveRelaxation, SingleVariable) {
  Instance inst({1.0}, {1.0}, {0.5});
  auto sol = solve_relaxation(inst);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.primal[0], 0.5, 1e-12);
  EXPECT_NEAR(sol.objective, 0.5, 1e-12);
  EXPECT_NEAR(sol.duals[0], 1.0, 1e-12);
  expect_certificate(inst, sol);
}

TEST(SolveRelaxation, TwoItemsOneRow) {
  Instance inst({2.0, 1.0}, {1.0, 1.0}, {1.0});
  auto sol = solve_relaxation(inst);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.primal[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.primal[1], 0.0, 1e-12);
  EXPECT_NEAR(sol.objective, 2.0, 1e-12);
  EXPECT_NEAR(sol.objective, oracle::lp_optimum_by_primal_vertices(testing::to_lp(inst)), 1e-12);
  EXPECT_NEAR(sol.duals[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.reduced_bounds_duals[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.reduced_bounds_duals[1], 0.0, 1e-12);
  expect_certificate(inst, sol);
}

TEST(SolveRelaxation, NonpositiveRewardsRejectEverything) {
  Instance inst({-1.0, 0.0, -3.0}, {1, 2, -1, 0.5, 2, 2}, {1.0, 1.0});
  auto sol = solve_relaxation(inst);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_EQ(sol.objective, 0.0);
  for (double x : sol.primal) EXPECT_EQ(x, 0.0);
}

TEST(SolveBoxLp, InfeasibleWithNegativeRhs) {
  RealVector r{1.0}, a{1.0}, rhs{-1.0};
  EXPECT_EQ(solve_box_lp(r, a, rhs).status, LpStatus::Infeasible);
}

TEST(SolveBoxLp, PhaseOneFindsFeasiblePoint) {
  // -x <= -0.5 forces x >= 0.5; maximizing -x lands on x = 0.5.
  RealVector r{-1.0}, a{-1.0}, rhs{-0.5};
  auto sol = solve_box_lp(r, a, rhs);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(sol.primal[0], 0.5, 1e-12);
  EXPECT_NEAR(sol.objective, -0.5, 1e-12);
  EXPECT_NEAR(sol.duals[0], 1.0, 1e-12);
}

TEST(SolveBoxLp, PhaseOneMatchesPrimalVertexOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int feasible_seen = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 6, m = 2;
    oracle::Lp lp;
    lp.r.resize(n);
    lp.a.assign(m, oracle::Vec(n));
    lp.b.resize(m);
    for (auto& v : lp.r) v = u(rng);
    for (auto& row : lp.a)
      for (auto& v : row) v = u(rng);
    for (auto& v : lp.b) v = u(rng);
    RealVector cols(n * m);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) cols[j * m + i] = lp.a[i][j];
    auto sol = solve_box_lp(lp.r, cols, lp.b);
    const double ref = oracle::lp_optimum_by_primal_vertices(lp);
    if (std::isinf(ref)) {
      EXPECT_EQ(sol.status, LpStatus::Infeasible);
    } else {
      ++feasible_seen;
      ASSERT_EQ(sol.status, LpStatus::Optimal);
      EXPECT_NEAR(sol.objective, ref, 1e-7);
    }
  }
  EXPECT_GT(feasible_seen, 50);
}

TEST(SolveScaled, FullPrefixEqualsRelaxation) {
  std::mt19937_64 rng(8);
  auto inst = testing::to_instance(oracle::random_lp(rng, 25, 3, true));
  auto full = solve_relaxation(inst);
  auto scaled = solve_scaled(inst, inst.n());
  EXPECT_NEAR(full.objective, scaled.objective, 1e-9);
}

TEST(SolveScaled, SingleColumnPrefix) {
  Instance inst({1.0, 5.0}, {1.0, 1.0}, {1.0});  // d = 0.5
  auto sol = solve_scaled(inst, 1);
  EXPECT_NEAR(sol.primal[0], 0.5, 1e-12);
  EXPECT_NEAR(sol.objective, 0.5, 1e-12);
}

TEST(SolveScaled, MatchesDualVertexEnumeration) {
  std::mt19937_64 rng(12);
  auto inst = testing::to_instance(oracle::random_lp(rng, 30, 3, true));
  const Index s = 10;
  auto sol = solve_scaled(inst, s);
  oracle::Lp prefix = testing::to_lp(inst);
  prefix.r.resize(s);
  for (auto& row : prefix.a) row.resize(s);
  for (Index i = 0; i < 3; ++i) prefix.b[i] = s * inst.budget()[i];
  EXPECT_NEAR(sol.objective, oracle::lp_optimum_by_dual_vertices(prefix), 1e-7);
}

TEST(SolveScaled, RelaxationAddsCapacity) {
  Instance inst({1.0, 1.0}, {1.0, 1.0}, {1.0});
  RealVector relax{0.25};
  auto sol = solve_scaled(inst, 1, relax);
  EXPECT_NEAR(sol.objective, 0.75, 1e-12);
  RealVector bad{-1.0};
  EXPECT_THROW(solve_scaled(inst, 1, bad), DataError);
  EXPECT_THROW(solve_scaled(inst, 0), DataError);
  EXPECT_THROW(solve_scaled(inst, 3), DataError);
}

TEST(SolveRelaxation, RandomInstancesCertified) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 60; ++rep) {
    const Index n = 5 + rep % 40;
    const Index m = 1 + rep % 4;
    auto lp = oracle::random_lp(rng, n, m, rep % 2 == 0);
    auto inst = testing::to_instance(lp);
    auto sol = solve_relaxation(inst);
    expect_certificate(inst, sol);
    EXPECT_NEAR(sol.objective, oracle::lp_optimum_by_dual_vertices(lp), 1e-7);
    const auto st = compute_stats(inst);
    EXPECT_LE(detail::norm2(sol.duals), st.r_bar / st.d_lo + 1e-6);
  }
}

TEST(SolveRelaxation, LargerUniformInstance) {
  GeneratorSpec spec;
  spec.n = 2000;
  spec.m = 10;
  spec.seed = 1;
  auto inst = gen_uniform(spec);
  auto sol = solve_relaxation(inst);
  expect_certificate(inst, sol);
}

TEST(SolveRelaxation, HeavilyDegenerateInstance) {
  // Identical columns and a tight capacity: many ties in every ratio test.
  const Index n = 60, m = 3;
  RealVector r(n, 1.0), cols(n * m, 1.0);
  Instance inst(r, cols, RealVector(m, 7.0));
  SimplexOptions opts;
  opts.refactor_interval = 5;
  auto sol = solve_relaxation(inst, opts);
  expect_certificate(inst, sol);
  EXPECT_NEAR(sol.objective, 7.0, 1e-9);
}

TEST(SolveRelaxation, Deterministic) {
  std::mt19937_64 rng(99);
  auto inst = testing::to_instance(oracle::random_lp(rng, 40, 4, true));
  auto a = solve_relaxation(inst);
  auto b = solve_relaxation(inst);
  EXPECT_EQ(a.primal, b.primal);
  EXPECT_EQ(a.duals, b.duals);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(SolveBinaryExact, Examples) {
  Instance two({2.0, 1.0}, {1.0, 1.0}, {1.0});
  auto sol = solve_binary_exact(two);
  EXPECT_EQ(sol.objective, 2.0);
  EXPECT_EQ(sol.x, (std::vector<int>{1, 0}));

  Instance neg({-1.0}, {1.0}, {1.0});
  auto z = solve_binary_exact(neg);
  EXPECT_EQ(z.objective, 0.0);
  EXPECT_EQ(z.x, (std::vector<int>{0}));
}

TEST(SolveBinaryExact, RefusesLargeN) {
  Instance big(RealVector(26, 1.0), RealVector(26, 1.0), {5.0});
  EXPECT_THROW(solve_binary_exact(big), DataError);
}

TEST(SolveBinaryExact, WeakDualityAgainstRelaxation) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = testing::to_instance(oracle::random_lp(rng, 12, 2, true));
    auto exact = solve_binary_exact(inst);
    auto relax = solve_relaxation(inst);
    EXPECT_LE(exact.objective, relax.objective + 1e-7);
    EXPECT_EQ(violation_norm(inst, exact.x), 0.0);
  }
}

}  // namespace
}  // namespace olp
