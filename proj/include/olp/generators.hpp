/**
 * @file generators.hpp
 * @brief Seeded instance families, random-order shuffling and the
 * multi-knapsack benchmark file format.
 */

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "olp/core.hpp"

namespace olp {

enum class Family { UniformIID, GaussianIID, TruncCauchyIID, MixedFourGroups, Adversarial };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::UniformIID: return "uniform";
    case Family::GaussianIID: return "gaussian";
    case Family::TruncCauchyIID: return "trunc_cauchy";
    case Family::MixedFourGroups: return "mixed";
    case Family::Adversarial: return "adversarial";
  }
  return "?";
}

inline Family parse_family(std::string_view text) {
  for (auto f : {Family::UniformIID, Family::GaussianIID, Family::TruncCauchyIID,
                 Family::MixedFourGroups, Family::Adversarial}) {
    if (text == to_string(f)) return f;
  }
  throw DataError("unknown generator family '" + std::string(text) + "'");
}

/// Two-phase low/high reward stream; with the defaults and m = 1 this is
/// the multi-secretary example with b = n/2.
struct AdversarialParams {
  double low_reward = 1.0;
  double high_reward = 2.0;
  /// d_i for every row (b = n * budget).
  double budget = 0.5;
  /// false: every a_ij = 1. true: a_ij ~ Unif[0, 2].
  bool random_weights = false;
};

struct GeneratorSpec {
  Family family = Family::UniformIID;
  Index n = 100;
  Index m = 10;
  double d_lo = 1.0 / 3.0;
  double d_hi = 2.0 / 3.0;
  /// Magnitude bound for the truncated Cauchy family.
  double tau = 10.0;
  AdversarialParams adversarial;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || m < 1) throw DataError("generator needs n, m >= 1");
    if (!(d_lo > 0.0) || d_hi < d_lo) throw DataError("need 0 < d_lo <= d_hi");
  }
};

namespace detail {

inline RealVector draw_budget(const GeneratorSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(spec.d_lo, spec.d_hi);
  RealVector d(spec.m);
  for (auto& v : d) v = spec.d_lo == spec.d_hi ? spec.d_lo : unif(rng);
  return d;
}

inline RealVector capacity_from_budget(const RealVector& d, Index n) {
  RealVector b(d.size());
  for (Index i = 0; i < d.size(); ++i) b[i] = static_cast<double>(n) * d[i];
  return b;
}

inline void expect_family(const GeneratorSpec& spec, Family f) {
  spec.validate();
  if (spec.family != f) {
    throw DataError("spec family is " + std::string(to_string(spec.family)) +
                    ", expected " + std::string(to_string(f)));
  }
}

// Column entries drawn by `entry`, rewards r_j = sum_i a_ij - eps_j with
// eps_j ~ Unif(0, m).
template <class Entry>
Instance column_sum_rewards(const GeneratorSpec& spec, std::mt19937_64& rng,
                            Entry&& entry, std::string notes) {
  const RealVector d = draw_budget(spec, rng);
  std::uniform_real_distribution<double> noise(0.0, static_cast<double>(spec.m));
  RealVector columns(spec.n * spec.m);
  RealVector rewards(spec.n);
  for (Index j = 0; j < spec.n; ++j) {
    double sum = 0.0;
    for (Index i = 0; i < spec.m; ++i) {
      const double a = entry(rng);
      columns[j * spec.m + i] = a;
      sum += a;
    }
    rewards[j] = sum - noise(rng);
  }
  return Instance(std::move(rewards), std::move(columns),
                  capacity_from_budget(d, spec.n), std::move(notes));
}

}  // namespace detail

/// a_ij, r_j i.i.d. Unif[0, 2]; d_i i.i.d. Unif[d_lo, d_hi].
inline Instance gen_uniform(const GeneratorSpec& spec) {
  detail::expect_family(spec, Family::UniformIID);
  std::mt19937_64 rng(spec.seed);
  const RealVector d = detail::draw_budget(spec, rng);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  RealVector columns(spec.n * spec.m);
  RealVector rewards(spec.n);
  for (Index j = 0; j < spec.n; ++j) {
    rewards[j] = unif(rng);
    for (Index i = 0; i < spec.m; ++i) columns[j * spec.m + i] = unif(rng);
  }
  return Instance(std::move(rewards), std::move(columns),
                  detail::capacity_from_budget(d, spec.n), "uniform");
}

/// a_ij i.i.d. N(1, 1); r_j = sum_i a_ij - eps_j, eps_j ~ Unif(0, m).
inline Instance gen_gaussian(const GeneratorSpec& spec) {
  detail::expect_family(spec, Family::GaussianIID);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(1.0, 1.0);
  return detail::column_sum_rewards(spec, rng, normal, "gaussian");
}

/**
 * a_ij i.i.d. Cauchy(1, 1) conditioned on |a_ij| <= tau (rejection, not
 * clipping); rewards as in the Gaussian family.
 */
inline Instance gen_trunc_cauchy(const GeneratorSpec& spec) {
  detail::expect_family(spec, Family::TruncCauchyIID);
  if (!(spec.tau > 0.0)) throw DataError("truncation threshold must be positive");
  std::mt19937_64 rng(spec.seed);
  std::cauchy_distribution<double> cauchy(1.0, 1.0);
  const double tau = spec.tau;
  auto draw = [&cauchy, tau](std::mt19937_64& g) {
    for (;;) {
      const double v = cauchy(g);
      if (std::abs(v) <= tau) return v;
    }
  };
  return detail::column_sum_rewards(spec, rng, draw,
                                    "trunc_cauchy two-sided rejection tau=" +
                                        detail::format_real(tau));
}

/**
 * Four equal blocks with a_ij from Unif[0,2], N(1,1), N(0,1) and the uniform
 * law on {-1, 1, 3}; r_j ~ Unif[0, 1] throughout. Blocks are laid out in that
 * order; n is truncated to a multiple of 4 (noted in Instance::notes()).
 */
inline Instance gen_mixed_four_groups(const GeneratorSpec& spec) {
  detail::expect_family(spec, Family::MixedFourGroups);
  const Index n = spec.n - spec.n % 4;
  if (n == 0) throw DataError("mixed family needs n >= 4");
  std::mt19937_64 rng(spec.seed);
  const RealVector d = detail::draw_budget(spec, rng);
  std::uniform_real_distribution<double> unif02(0.0, 2.0);
  std::normal_distribution<double> shifted(1.0, 1.0);
  std::normal_distribution<double> centered(0.0, 1.0);
  std::uniform_int_distribution<int> three(0, 2);
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  const Index group = n / 4;
  RealVector columns(n * spec.m);
  RealVector rewards(n);
  for (Index j = 0; j < n; ++j) {
    const Index g = j / group;
    for (Index i = 0; i < spec.m; ++i) {
      double a = 0.0;
      switch (g) {
        case 0: a = unif02(rng); break;
        case 1: a = shifted(rng); break;
        case 2: a = centered(rng); break;
        default: a = -1.0 + 2.0 * three(rng); break;
      }
      columns[j * spec.m + i] = a;
    }
    rewards[j] = reward(rng);
  }
  std::string notes = "mixed";
  if (n != spec.n) notes += " truncated n=" + std::to_string(spec.n) + "->" + std::to_string(n);
  return Instance(std::move(rewards), std::move(columns),
                  detail::capacity_from_budget(d, n), std::move(notes));
}

/// First floor(n/2) arrivals carry the low reward, the rest the high reward.
inline Instance gen_adversarial(const GeneratorSpec& spec) {
  detail::expect_family(spec, Family::Adversarial);
  const auto& p = spec.adversarial;
  if (!(p.budget > 0.0)) throw DataError("adversarial budget must be positive");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  RealVector columns(spec.n * spec.m, 1.0);
  if (p.random_weights) {
    for (auto& a : columns) a = unif(rng);
  }
  RealVector rewards(spec.n);
  for (Index j = 0; j < spec.n; ++j) {
    rewards[j] = j < spec.n / 2 ? p.low_reward : p.high_reward;
  }
  RealVector d(spec.m, p.budget);
  return Instance(std::move(rewards), std::move(columns),
                  detail::capacity_from_budget(d, spec.n), "adversarial");
}

inline Instance generate(const GeneratorSpec& spec) {
  switch (spec.family) {
    case Family::UniformIID: return gen_uniform(spec);
    case Family::GaussianIID: return gen_gaussian(spec);
    case Family::TruncCauchyIID: return gen_trunc_cauchy(spec);
    case Family::MixedFourGroups: return gen_mixed_four_groups(spec);
    case Family::Adversarial: return gen_adversarial(spec);
  }
  throw DataError("unknown generator family");
}

// ---------------------------------------------------------------------------
// Random order
// ---------------------------------------------------------------------------

/// order[t] is the original index of the column that arrives t-th (0-based).
struct PermutationPlan {
  Index n = 0;
  std::uint64_t seed = 0;
  std::vector<Index> order;

  static PermutationPlan identity(Index n) {
    PermutationPlan plan;
    plan.n = n;
    plan.order.resize(n);
    std::iota(plan.order.begin(), plan.order.end(), Index{0});
    return plan;
  }

  static PermutationPlan random(Index n, std::uint64_t seed) {
    PermutationPlan plan = identity(n);
    plan.seed = seed;
    std::mt19937_64 rng(seed);
    for (Index i = n; i > 1; --i) {
      std::uniform_int_distribution<Index> pick(0, i - 1);
      std::swap(plan.order[i - 1], plan.order[pick(rng)]);
    }
    return plan;
  }

  PermutationPlan inverse() const {
    PermutationPlan inv;
    inv.n = n;
    inv.seed = seed;
    inv.order.resize(n);
    for (Index t = 0; t < n; ++t) inv.order[order[t]] = t;
    return inv;
  }

  bool is_bijection() const {
    if (order.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (Index v : order) {
      if (v >= n || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  }
};

inline Instance permute(const Instance& inst, const PermutationPlan& plan) {
  if (plan.n != inst.n() || !plan.is_bijection()) {
    throw DataError("permutation does not match instance size");
  }
  const Index m = inst.m();
  RealVector rewards(inst.n());
  RealVector columns(inst.n() * m);
  for (Index t = 0; t < inst.n(); ++t) {
    const Index src = plan.order[t];
    rewards[t] = inst.reward(src);
    auto a = inst.column(src);
    std::copy(a.begin(), a.end(), columns.begin() + static_cast<std::ptrdiff_t>(t * m));
  }
  return Instance(std::move(rewards), std::move(columns), inst.capacity(), inst.notes());
}

// ---------------------------------------------------------------------------
// Multi-knapsack benchmark files
// ---------------------------------------------------------------------------

struct MknapProblem {
  Instance instance;
  /// Stated integer optimum; absent when the file says 0.
  std::optional<double> known_optimum;
  std::vector<std::string> warnings;
};

/**
 * Parses the OR-Library multi-knapsack layout: problem count, then per
 * problem `n m optimum`, n profits, m rows of n weights, m capacities.
 * Errors name the offending line.
 */
inline std::vector<MknapProblem> parse_mknap(std::istream& in,
                                             const std::string& source = "<input>") {
  struct Token {
    std::string text;
    Index line;
  };
  std::vector<Token> tokens;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos > start) tokens.push_back({line.substr(start, pos - start), line_no});
    }
  }
  Index cursor = 0;
  auto fail = [&](Index at, const std::string& what) -> DataError {
    return DataError(source + ":" + std::to_string(at) + ": " + what);
  };
  auto number = [&]() -> double {
    if (cursor >= tokens.size()) {
      throw fail(line_no, "unexpected end of file");
    }
    const Token& tok = tokens[cursor++];
    try {
      return detail::parse_real(tok.text);
    } catch (const DataError&) {
      throw fail(tok.line, "non-numeric token '" + tok.text + "'");
    }
  };
  auto count = [&](const char* what) -> Index {
    const Index at = cursor < tokens.size() ? tokens[cursor].line : line_no;
    const double v = number();
    if (v < 1 || v != std::floor(v)) {
      throw fail(at, std::string("malformed ") + what + " count");
    }
    return static_cast<Index>(v);
  };

  std::vector<MknapProblem> problems;
  const Index k = count("problem");
  for (Index p = 0; p < k; ++p) {
    const Index header_line = cursor < tokens.size() ? tokens[cursor].line : line_no;
    const Index n = count("item");
    const Index m = count("constraint");
    const double optimum = number();
    RealVector profits(n);
    for (auto& v : profits) v = number();
    RealVector columns(n * m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) columns[j * m + i] = number();
    }
    RealVector capacity(m);
    for (auto& v : capacity) v = number();

    std::vector<std::string> warnings;
    if (std::any_of(columns.begin(), columns.end(), [](double a) { return a < 0.0; })) {
      warnings.push_back("problem " + std::to_string(p + 1) + " has negative weights");
    }
    try {
      problems.push_back({Instance(std::move(profits), std::move(columns),
                                   std::move(capacity), source),
                          optimum != 0.0 ? std::optional<double>(optimum) : std::nullopt,
                          std::move(warnings)});
    } catch (const DataError& e) {
      throw fail(header_line, e.what());
    }
  }
  if (cursor != tokens.size()) throw fail(tokens[cursor].line, "trailing data");
  return problems;
}

inline std::vector<MknapProblem> read_mknap(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mknap file '" + path + "'");
  return parse_mknap(in, path);
}

/**
 * Rescales rewards by 1/max|r_j| and every constraint row (weights and
 * capacity) by 1/max_j |a_ij|. The feasible set and the ranking of
 * solutions are unchanged; the dual step sizes then act on O(1) data.
 */
inline Instance normalize_units(const Instance& inst) {
  const Index n = inst.n(), m = inst.m();
  double r_scale = 0.0;
  for (double r : inst.rewards()) r_scale = std::max(r_scale, std::abs(r));
  if (r_scale == 0.0) r_scale = 1.0;
  RealVector row_scale(m, 0.0);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) row_scale[i] = std::max(row_scale[i], std::abs(inst.coeff(i, j)));
  }
  for (auto& s : row_scale) s = s == 0.0 ? 1.0 : s;
  RealVector rewards(n), columns(n * m), capacity(m);
  for (Index j = 0; j < n; ++j) {
    rewards[j] = inst.reward(j) / r_scale;
    for (Index i = 0; i < m; ++i) columns[j * m + i] = inst.coeff(i, j) / row_scale[i];
  }
  for (Index i = 0; i < m; ++i) capacity[i] = inst.capacity()[i] / row_scale[i];
  return Instance(std::move(rewards), std::move(columns), std::move(capacity), inst.notes());
}

inline void write_mknap(std::ostream& os, const std::vector<MknapProblem>& problems) {
  os << problems.size() << '\n';
  for (const auto& p : problems) {
    const Instance& inst = p.instance;
    os << inst.n() << ' ' << inst.m() << ' '
       << detail::format_real(p.known_optimum.value_or(0.0)) << '\n';
    for (Index j = 0; j < inst.n(); ++j) {
      os << (j ? " " : "") << detail::format_real(inst.reward(j));
    }
    os << '\n';
    for (Index i = 0; i < inst.m(); ++i) {
      for (Index j = 0; j < inst.n(); ++j) {
        os << (j ? " " : "") << detail::format_real(inst.coeff(i, j));
      }
      os << '\n';
    }
    for (Index i = 0; i < inst.m(); ++i) {
      os << (i ? " " : "") << detail::format_real(inst.capacity()[i]);
    }
    os << '\n';
  }
}

}  // namespace olp
