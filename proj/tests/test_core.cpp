#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "olp/core.hpp"
#include "olp/generators.hpp"
#include "olp/simplex.hpp"
#include "test_support.hpp"

namespace olp {
namespace {

Instance tiny() {
  // n=2, m=1, r=(1,-3), a=(2),(-1), b=(1)
  return Instance({1.0, -3.0}, {2.0, -1.0}, {1.0});
}

TEST(Instance, RejectsBadShapes) {
  EXPECT_THROW(Instance({}, {}, {1.0}), DataError);
  EXPECT_THROW(Instance({1.0}, {1.0}, {}), DataError);
  EXPECT_THROW(Instance({1.0, 2.0}, {1.0}, {1.0}), DataError);
  EXPECT_THROW(Instance({1.0}, {1.0}, {0.0}), DataError);
  EXPECT_THROW(Instance({1.0}, {1.0}, {-2.0}), DataError);
}

TEST(Instance, BudgetIsCapacityOverN) {
  Instance inst({1, 2, 3, 4}, {1, 1, 1, 1}, {2.0});
  EXPECT_DOUBLE_EQ(inst.budget()[0], 0.5);
}

TEST(ComputeStats, HandExample) {
  auto s = compute_stats(tiny());
  EXPECT_EQ(s.r_bar, 3.0);
  EXPECT_EQ(s.a_bar, 2.0);
  EXPECT_EQ(s.d_lo, 0.5);
  EXPECT_EQ(s.d_hi, 0.5);
}

TEST(ComputeStats, ZeroRewards) {
  const Index n = 5;
  Instance inst(RealVector(n, 0.0), RealVector(n * 2, 0.5), {n * 0.4, n * 0.4});
  auto s = compute_stats(inst);
  EXPECT_EQ(s.r_bar, 0.0);
  EXPECT_EQ(s.a_bar, 0.5);
  EXPECT_DOUBLE_EQ(s.d_lo, 0.4);
}

TEST(ComputeStats, MatchesFullScanOnGeneratedInstance) {
  GeneratorSpec spec;
  spec.n = 20;
  spec.m = 5;
  spec.seed = 7;
  auto inst = gen_uniform(spec);
  auto lp = testing::to_lp(inst);
  double r_bar = 0, a_bar = 0, d_lo = 1e300, d_hi = -1e300;
  for (double r : lp.r) r_bar = std::max(r_bar, std::fabs(r));
  for (auto& row : lp.a)
    for (double a : row) a_bar = std::max(a_bar, std::fabs(a));
  for (double b : lp.b) {
    d_lo = std::min(d_lo, b / 20.0);
    d_hi = std::max(d_hi, b / 20.0);
  }
  auto s = compute_stats(inst);
  EXPECT_EQ(s.r_bar, r_bar);
  EXPECT_EQ(s.a_bar, a_bar);
  EXPECT_EQ(s.d_lo, d_lo);
  EXPECT_EQ(s.d_hi, d_hi);
  EXPECT_EQ(compute_stats(inst), s);
}

TEST(ViolationNorm, ZeroDecisionsAreFeasible) {
  std::vector<int> x(2, 0);
  EXPECT_EQ(violation_norm(tiny(), x), 0.0);
}

TEST(ViolationNorm, PositivePartThenNorm) {
  // Ax - b = (3, -1): a = (4, 1), b = (1, 2), x = (1)
  Instance inst({1.0}, {4.0, 1.0}, {1.0, 2.0});
  std::vector<int> x{1};
  EXPECT_DOUBLE_EQ(violation_norm(inst, x), 3.0);
}

TEST(ViolationNorm, MatchesElementwiseOracle) {
  std::mt19937_64 rng(11);
  auto lp = oracle::random_lp(rng, 10, 3, true);
  auto inst = testing::to_instance(lp);
  std::bernoulli_distribution coin(0.7);
  std::vector<int> x(10);
  for (auto& v : x) v = coin(rng);
  double acc = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    double s = -lp.b[i];
    for (std::size_t j = 0; j < 10; ++j) s += lp.a[i][j] * x[j];
    acc += s > 0 ? s * s : 0.0;
  }
  EXPECT_NEAR(violation_norm(inst, x), std::sqrt(acc), 1e-12);
}

TEST(ViolationNorm, DimensionMismatchThrows) {
  std::vector<int> x(3, 0);
  EXPECT_THROW(violation_norm(tiny(), x), DataError);
}

TEST(DualSaa, AtZeroPrice) {
  auto inst = tiny();
  RealVector p{0.0};
  EXPECT_DOUBLE_EQ(dual_saa_objective(inst, p), 0.5);  // (1 + 0) / 2
}

TEST(DualSaa, SingleColumn) {
  Instance inst({1.0}, {1.0}, {0.5});
  RealVector p{2.0};
  EXPECT_DOUBLE_EQ(dual_saa_objective(inst, p), 1.0);
}

TEST(DualSaa, NegativePriceThrows) {
  RealVector p{-0.1};
  EXPECT_THROW(dual_saa_objective(tiny(), p), DataError);
}

TEST(DualSaa, EqualsSimplexDualObjectiveOverN) {
  std::mt19937_64 rng(4);
  auto inst = testing::to_instance(oracle::random_lp(rng, 12, 4, true));
  auto sol = solve_relaxation(inst);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_NEAR(dual_saa_objective(inst, sol.duals), sol.objective / 12.0, 1e-8);
}

TEST(DualSaa, ConvexAlongSegments) {
  std::mt19937_64 rng(5);
  auto inst = testing::to_instance(oracle::random_lp(rng, 30, 3, true));
  std::uniform_real_distribution<double> u(0.0, 3.0), lam(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    RealVector p1(3), p2(3), mid(3);
    for (auto& v : p1) v = u(rng);
    for (auto& v : p2) v = u(rng);
    const double l = lam(rng);
    for (int i = 0; i < 3; ++i) mid[i] = l * p1[i] + (1 - l) * p2[i];
    EXPECT_LE(dual_saa_objective(inst, mid),
              l * dual_saa_objective(inst, p1) + (1 - l) * dual_saa_objective(inst, p2) + 1e-9);
  }
}

TEST(Threshold, TieRejects) {
  RealVector a{1.0}, p{1.0};
  EXPECT_EQ(threshold_decision(1.0, a, p), 0);
}

TEST(Threshold, ZeroPriceAcceptsPositiveReward) {
  RealVector a{3.0}, p{0.0};
  EXPECT_EQ(threshold_decision(1.0, a, p), 1);
  EXPECT_EQ(threshold_decision(-0.5, a, p), 0);
}

TEST(Threshold, NonincreasingInPricesForNonnegativeColumns) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0), bump(0.0, 0.5);
  std::uniform_int_distribution<int> coord(0, 3);
  for (int rep = 0; rep < 2000; ++rep) {
    RealVector a(4), p(4);
    for (auto& v : a) v = u(rng);
    for (auto& v : p) v = u(rng) * 0.3;
    const double r = u(rng);
    const int before = threshold_decision(r, a, p);
    p[coord(rng)] += bump(rng);
    EXPECT_LE(threshold_decision(r, a, p), before);
  }
}

TEST(DualState, ProjectionAndRunningMax) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  DualState dual(3, StepSchedule::OneOverSqrtT, 100);
  RealVector d{0.5, 0.5, 0.5};
  double last_max = 0.0;
  for (int t = 0; t < 100; ++t) {
    RealVector g(3);
    for (auto& v : g) v = u(rng);
    dual.step(g, d);
    for (double p : dual.prices()) EXPECT_GE(p, 0.0);
    EXPECT_GE(dual.max_norm_seen(), last_max);
    EXPECT_GE(dual.max_norm_seen(), dual.norm());
    last_max = dual.max_norm_seen();
  }
  EXPECT_EQ(dual.step_index(), 100u);
}

TEST(StepSize, Schedules) {
  EXPECT_DOUBLE_EQ(step_size(StepSchedule::OneOverSqrtN, 3, 16), 0.25);
  EXPECT_DOUBLE_EQ(step_size(StepSchedule::OneOverSqrtT, 4, 16), 0.5);
  EXPECT_DOUBLE_EQ(step_size(StepSchedule::ConstantUnit, 4, 16), 1.0);
  EXPECT_EQ(parse_schedule("sqrt_t"), StepSchedule::OneOverSqrtT);
  EXPECT_THROW(parse_schedule("log"), DataError);
}

TEST(DualNormBound, Formula) {
  InstanceStats s{2.0, 2.0, 0.5, 1.0};
  // (2*2 + 3*9)/0.5 + 3*3
  EXPECT_DOUBLE_EQ(dual_norm_bound(s, 3), 62.0 + 9.0);
}

TEST(TextFormat, LayoutAndRoundTrip) {
  Instance inst({0.1, 1.0 / 3.0}, {1.0, 2.0, 3.0, 4.0}, {5.0, 6.0});
  std::stringstream ss;
  write_instance(ss, inst);
  EXPECT_EQ(ss.str().substr(0, 4), "2 2\n");
  EXPECT_NE(ss.str().find("\n1 3\n2 4\n5 6\n"), std::string::npos);
  EXPECT_EQ(read_instance(ss), inst);
}

TEST(TextFormat, RoundTripIsBitExactOnRandomData) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = testing::to_instance(oracle::random_lp(rng, 17, 3, true));
    std::stringstream ss;
    write_instance(ss, inst);
    EXPECT_EQ(read_instance(ss), inst);
  }
}

TEST(TextFormat, Malformed) {
  std::stringstream truncated("2 1\n1 2\n3\n");
  EXPECT_THROW(read_instance(truncated), DataError);
  std::stringstream junk("1 1\nx\n1\n1\n");
  EXPECT_THROW(read_instance(junk), DataError);
}

TEST(Accrue, TraceConsistency) {
  auto inst = tiny();
  std::vector<int> x{1, 1};
  auto [obj, cons] = accrue(inst, x);
  EXPECT_EQ(obj, -2.0);
  EXPECT_EQ(cons[0], 1.0);
}

}  // namespace
}  // namespace olp
