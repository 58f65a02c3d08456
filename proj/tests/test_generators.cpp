#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "olp/algorithms.hpp"
#include "olp/generators.hpp"
#include "olp/simplex.hpp"

namespace olp {
namespace {

GeneratorSpec spec_for(Family f, Index n, Index m, std::uint64_t seed = 1) {
  GeneratorSpec s;
  s.family = f;
  s.n = n;
  s.m = m;
  s.seed = seed;
  return s;
}

double mean_entry(const Instance& inst) {
  double s = 0;
  for (double a : inst.columns()) s += a;
  return s / static_cast<double>(inst.columns().size());
}

TEST(GenUniform, RangesAndBudget) {
  auto inst = gen_uniform(spec_for(Family::UniformIID, 500, 10));
  auto st = compute_stats(inst);
  EXPECT_LE(st.a_bar, 2.0);
  EXPECT_LE(st.r_bar, 2.0);
  EXPECT_GE(st.d_lo, 1.0 / 3.0);
  EXPECT_LE(st.d_hi, 2.0 / 3.0);
  for (double a : inst.columns()) EXPECT_GE(a, 0.0);
  for (Index i = 0; i < inst.m(); ++i) {
    EXPECT_DOUBLE_EQ(inst.capacity()[i], 500 * inst.budget()[i]);
  }
}

TEST(GenUniform, SeedDeterminism) {
  auto s = spec_for(Family::UniformIID, 50, 4, 9);
  EXPECT_EQ(gen_uniform(s), gen_uniform(s));
  auto t = s;
  t.seed = 10;
  EXPECT_FALSE(gen_uniform(s) == gen_uniform(t));
}

TEST(GenUniform, EmpiricalMean) {
  auto inst = gen_uniform(spec_for(Family::UniformIID, 10000, 10));
  EXPECT_NEAR(mean_entry(inst), 1.0, 0.02);
}

TEST(GenUniform, FixedBudgetWhenRangeCollapses) {
  auto s = spec_for(Family::UniformIID, 10, 3);
  s.d_lo = s.d_hi = 0.25;
  auto inst = gen_uniform(s);
  for (double d : inst.budget()) EXPECT_DOUBLE_EQ(d, 0.25);
  s.d_lo = 0.5;
  EXPECT_THROW(gen_uniform(s), DataError);
}

TEST(GenGaussian, RewardBelowColumnSum) {
  auto inst = gen_gaussian(spec_for(Family::GaussianIID, 10000, 10, 4));
  for (Index j = 0; j < inst.n(); ++j) {
    double s = 0;
    for (double a : inst.column(j)) s += a;
    EXPECT_LE(inst.reward(j), s);
    EXPECT_GE(inst.reward(j), s - 10.0);
  }
  EXPECT_NEAR(mean_entry(inst), 1.0, 0.02);
  EXPECT_EQ(inst, gen_gaussian(spec_for(Family::GaussianIID, 10000, 10, 4)));
}

TEST(GenTruncCauchy, BoundAndVariance) {
  auto loose = spec_for(Family::TruncCauchyIID, 2000, 5, 3);
  loose.tau = 1e6;
  auto tight = loose;
  tight.tau = 10.0;
  auto a = gen_trunc_cauchy(loose);
  auto b = gen_trunc_cauchy(tight);
  for (double v : b.columns()) EXPECT_LE(std::abs(v), 10.0);
  auto var = [](const Instance& inst) {
    const double mu = mean_entry(inst);
    double s = 0;
    for (double v : inst.columns()) s += (v - mu) * (v - mu);
    return s / static_cast<double>(inst.columns().size() - 1);
  };
  EXPECT_GT(var(a), var(b));
  EXPECT_EQ(b, gen_trunc_cauchy(tight));
  tight.tau = 0.0;
  EXPECT_THROW(gen_trunc_cauchy(tight), DataError);
}

TEST(GenMixed, GroupsAndRewards) {
  auto inst = gen_mixed_four_groups(spec_for(Family::MixedFourGroups, 400, 6, 2));
  for (Index j = 0; j < inst.n(); ++j) {
    EXPECT_GE(inst.reward(j), 0.0);
    EXPECT_LE(inst.reward(j), 1.0);
  }
  std::set<double> last;
  for (Index j = 300; j < 400; ++j) {
    for (double a : inst.column(j)) last.insert(a);
  }
  EXPECT_EQ(last, (std::set<double>{-1.0, 1.0, 3.0}));
  for (Index j = 0; j < 100; ++j) {
    for (double a : inst.column(j)) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 2.0);
    }
  }
  EXPECT_EQ(inst, gen_mixed_four_groups(spec_for(Family::MixedFourGroups, 400, 6, 2)));
}

TEST(GenMixed, TruncatesToMultipleOfFour) {
  auto inst = gen_mixed_four_groups(spec_for(Family::MixedFourGroups, 103, 2));
  EXPECT_EQ(inst.n(), 100u);
  EXPECT_NE(inst.notes().find("103->100"), std::string::npos);
  EXPECT_THROW(gen_mixed_four_groups(spec_for(Family::MixedFourGroups, 3, 2)), DataError);
}

TEST(GenAdversarial, IsMultiSecretaryExample) {
  auto inst = gen_adversarial(spec_for(Family::Adversarial, 10, 1));
  EXPECT_EQ(inst.capacity()[0], 5.0);
  for (Index j = 0; j < 10; ++j) {
    EXPECT_EQ(inst.reward(j), j < 5 ? 1.0 : 2.0);
    EXPECT_EQ(inst.coeff(0, j), 1.0);
  }
}

TEST(GenAdversarial, UnpermutedSoaTakesEarlyLowRewards) {
  // Prices start at zero, so the low half is mostly accepted and the gap to
  // R* does not shrink relative to n.
  std::vector<double> gaps;
  for (Index n : {100, 1000}) {
    auto inst = gen_adversarial(spec_for(Family::Adversarial, n, 1));
    auto tr = run_soa(inst, make_config(AlgorithmKind::SOA, StepSchedule::OneOverSqrtN, 0));
    Index early = 0;
    for (Index j = 0; j < n / 2; ++j) early += tr.decisions[j];
    EXPECT_GT(early, n / 4);
    const double lp = solve_relaxation(inst).objective;
    gaps.push_back((lp - tr.objective) / lp);
  }
  EXPECT_GE(gaps[1], gaps[0] * 0.9);
}

TEST(Generate, Dispatch) {
  for (auto f : {Family::UniformIID, Family::GaussianIID, Family::TruncCauchyIID,
                 Family::MixedFourGroups, Family::Adversarial}) {
    auto s = spec_for(f, 40, 3);
    EXPECT_EQ(generate(s).n(), 40u);
    EXPECT_EQ(parse_family(to_string(f)), f);
  }
  EXPECT_THROW(gen_uniform(spec_for(Family::GaussianIID, 4, 1)), DataError);
  EXPECT_THROW(parse_family("poisson"), DataError);
}

TEST(Permute, IdentityInverseAndLpInvariance) {
  auto inst = gen_uniform(spec_for(Family::UniformIID, 200, 5, 8));
  EXPECT_EQ(permute(inst, PermutationPlan::identity(200)), inst);
  auto plan = PermutationPlan::random(200, 77);
  EXPECT_TRUE(plan.is_bijection());
  auto shuffled = permute(inst, plan);
  EXPECT_FALSE(shuffled == inst);
  EXPECT_EQ(permute(shuffled, plan.inverse()), inst);
  EXPECT_EQ(shuffled.capacity(), inst.capacity());
  EXPECT_NEAR(solve_relaxation(shuffled).objective, solve_relaxation(inst).objective, 1e-9);
  EXPECT_EQ(shuffled.reward(0), inst.reward(plan.order[0]));
  EXPECT_THROW(permute(inst, PermutationPlan::identity(10)), DataError);
}

TEST(Permute, PreservesColumnMultiset) {
  auto inst = gen_gaussian(spec_for(Family::GaussianIID, 60, 3, 5));
  auto shuffled = permute(inst, PermutationPlan::random(60, 3));
  auto pairs = [](const Instance& x) {
    std::multiset<std::vector<double>> s;
    for (Index j = 0; j < x.n(); ++j) {
      std::vector<double> v{x.reward(j)};
      for (double a : x.column(j)) v.push_back(a);
      s.insert(v);
    }
    return s;
  };
  EXPECT_EQ(pairs(inst), pairs(shuffled));
}

TEST(Mknap, HandWrittenProblem) {
  std::stringstream in("1\n2 1 10\n10 7\n5 4\n8\n");
  auto probs = parse_mknap(in);
  ASSERT_EQ(probs.size(), 1u);
  const auto& inst = probs[0].instance;
  EXPECT_EQ(inst.rewards(), (RealVector{10, 7}));
  EXPECT_EQ(inst.coeff(0, 0), 5.0);
  EXPECT_EQ(inst.coeff(0, 1), 4.0);
  EXPECT_EQ(inst.capacity(), (RealVector{8}));
  EXPECT_EQ(probs[0].known_optimum, 10.0);
}

TEST(Mknap, ZeroOptimumIsUnknownAndNegativeWeightsWarn) {
  std::stringstream in("1\n2 1 0\n1 1\n-1 2\n3\n");
  auto probs = parse_mknap(in);
  EXPECT_FALSE(probs[0].known_optimum);
  EXPECT_EQ(probs[0].warnings.size(), 1u);
}

TEST(Mknap, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    std::stringstream in(text);
    try {
      parse_mknap(in, "f");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message("1\n2 1 10\n10 x\n5 4\n8\n"), "f:3: non-numeric token 'x'");
  EXPECT_EQ(message("1\n2.5 1 10\n"), "f:2: malformed item count");
  EXPECT_EQ(message("1\n2 1 10\n10 7\n5 4\n"), "f:4: unexpected end of file");
  EXPECT_EQ(message("1\n2 1 10\n10 7\n5 4\n8\n9\n"), "f:6: trailing data");
  EXPECT_THROW(read_mknap("/nonexistent/file"), DataError);
}

TEST(Mknap, RoundTrip) {
  auto probs = read_mknap(std::string(OLP_TEST_DATA) + "/mknap_small.txt");
  std::stringstream ss;
  write_mknap(ss, probs);
  auto again = parse_mknap(ss);
  ASSERT_EQ(again.size(), probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    EXPECT_EQ(again[k].instance, probs[k].instance);
    EXPECT_EQ(again[k].known_optimum, probs[k].known_optimum);
    std::stringstream txt;
    write_instance(txt, probs[k].instance);
    EXPECT_EQ(read_instance(txt), probs[k].instance);
  }
}

TEST(Mknap, RelaxationDominatesStatedOptimum) {
  auto probs = read_mknap(std::string(OLP_TEST_DATA) + "/mknap_small.txt");
  ASSERT_EQ(probs.size(), 2u);
  for (const auto& p : probs) {
    ASSERT_TRUE(p.known_optimum);
    EXPECT_GE(solve_relaxation(p.instance).objective, *p.known_optimum - 1e-9);
    EXPECT_EQ(solve_binary_exact(p.instance).objective, *p.known_optimum);
  }
}

TEST(Mknap, BenchmarkSizedFile) {
  auto probs = read_mknap(std::string(OLP_TEST_DATA) + "/mknap_5x500.txt");
  ASSERT_EQ(probs.size(), 1u);
  const auto& inst = probs[0].instance;
  EXPECT_EQ(inst.n(), 500u);
  EXPECT_EQ(inst.m(), 5u);
  EXPECT_TRUE(probs[0].warnings.empty());
  auto sol = solve_relaxation(inst);
  ASSERT_EQ(sol.status, LpStatus::Optimal);
  EXPECT_GT(sol.objective, 0.0);
}

}  // namespace
}  // namespace olp
