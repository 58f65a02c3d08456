/**
 * @file algorithms.hpp
 * @brief One-pass dual subgradient algorithms, the LP-resolving baselines,
 * and randomized feasibility repair.
 *
 * Every algorithm consumes the instance columns in stored order (apply
 * generators' permute() beforehand for random-order input) and returns a
 * RunTrace whose objective and consumption are consistent with its
 * decisions.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "olp/core.hpp"
#include "olp/simplex.hpp"

namespace olp {

enum class AlgorithmKind { SOA, SFA, SNA, MultiSOA, DLA, PBD };

inline std::string_view to_string(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::SOA: return "soa";
    case AlgorithmKind::SFA: return "sfa";
    case AlgorithmKind::SNA: return "sna";
    case AlgorithmKind::MultiSOA: return "multi_soa";
    case AlgorithmKind::DLA: return "dla";
    case AlgorithmKind::PBD: return "pbd";
  }
  return "?";
}

inline AlgorithmKind parse_algorithm(std::string_view text) {
  for (auto k : {AlgorithmKind::SOA, AlgorithmKind::SFA, AlgorithmKind::SNA,
                 AlgorithmKind::MultiSOA, AlgorithmKind::DLA, AlgorithmKind::PBD}) {
    if (text == to_string(k)) return k;
  }
  throw DataError("unknown algorithm '" + std::string(text) + "'");
}

inline bool uses_subgradient(AlgorithmKind k) {
  return k == AlgorithmKind::SOA || k == AlgorithmKind::SFA ||
         k == AlgorithmKind::SNA || k == AlgorithmKind::MultiSOA;
}

struct AlgorithmConfig {
  AlgorithmKind kind = AlgorithmKind::SOA;
  /// Required for subgradient algorithms, ignored by DLA and PBD.
  std::optional<StepSchedule> schedule;
  std::uint64_t rng_seed = 0;
  bool record_dual_history = false;
  SimplexOptions solver;

  /// "soa:sqrt_n", "dla", ...
  std::string label() const {
    std::string out(to_string(kind));
    if (schedule && uses_subgradient(kind)) {
      out += ':';
      out += to_string(*schedule);
    }
    return out;
  }

  void validate() const {
    if (uses_subgradient(kind) && !schedule) {
      throw DataError(std::string(to_string(kind)) + " needs a step schedule");
    }
    if (kind == AlgorithmKind::MultiSOA && *schedule != StepSchedule::OneOverSqrtN) {
      throw DataError("multi_soa only runs with the 1/sqrt(n) step size");
    }
  }
};

inline AlgorithmConfig make_config(AlgorithmKind kind,
                                   std::optional<StepSchedule> schedule = std::nullopt,
                                   std::uint64_t seed = 0) {
  AlgorithmConfig cfg;
  cfg.kind = kind;
  if (uses_subgradient(kind)) cfg.schedule = schedule;
  cfg.rng_seed = seed;
  return cfg;
}

/// Parses "soa:sqrt_n", "sfa:sqrt_t", "dla", "multi_soa" (defaults to sqrt_n).
inline AlgorithmConfig parse_algorithm_config(std::string_view text) {
  const auto colon = text.find(':');
  AlgorithmConfig cfg;
  cfg.kind = parse_algorithm(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    if (!uses_subgradient(cfg.kind)) {
      throw DataError(std::string(to_string(cfg.kind)) + " takes no step schedule");
    }
    cfg.schedule = parse_schedule(text.substr(colon + 1));
  } else if (cfg.kind == AlgorithmKind::MultiSOA) {
    cfg.schedule = StepSchedule::OneOverSqrtN;
  }
  cfg.validate();
  return cfg;
}

struct RepairConfig {
  bool enabled = false;
  /// Replaces min_i d_i in the removal-count formula; must be positive.
  std::optional<double> d_lo_override;
  /// Leave already-feasible traces untouched. Off by default.
  bool skip_if_feasible = false;
};

namespace detail {

class TraceRecorder {
public:
  TraceRecorder(Index n, Index m, bool history) : history_(history) {
    trace_.decisions.assign(n, 0);
    trace_.consumption.assign(m, 0.0);
    if (history_) trace_.dual_norm_history.reserve(n + 1);
  }

  void prices(std::span<const double> p) {
    const double norm = norm2(p);
    trace_.max_dual_norm = std::max(trace_.max_dual_norm, norm);
    if (history_) trace_.dual_norm_history.push_back(norm);
  }

  void take(Index t, int decision, double reward, std::span<const double> a) {
    trace_.decisions[t] = decision;
    trace_.objective += reward;
    for (Index i = 0; i < a.size(); ++i) trace_.consumption[i] += a[i];
  }

  RunTrace finish(std::span<const double> final_prices, std::uint64_t seed) {
    trace_.final_prices.assign(final_prices.begin(), final_prices.end());
    trace_.rng_seed = seed;
    return std::move(trace_);
  }

private:
  RunTrace trace_;
  bool history_;
};

inline void expect_kind(const AlgorithmConfig& cfg, AlgorithmKind kind) {
  if (cfg.kind != kind) {
    throw DataError("configuration is for " + std::string(to_string(cfg.kind)) +
                    ", not " + std::string(to_string(kind)));
  }
  cfg.validate();
}

inline const LpSolution& require_optimal(const LpSolution& sol) {
  if (sol.status != LpStatus::Optimal) {
    throw SolverError("scaled LP is " + std::string(to_string(sol.status)));
  }
  return sol;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subgradient family
// ---------------------------------------------------------------------------

/// Simple online algorithm: threshold at p_t, then p_{t+1} = (p_t + g_t(a_t x_t - d))^+.
inline RunTrace run_soa(const Instance& inst, const AlgorithmConfig& cfg) {
  detail::expect_kind(cfg, AlgorithmKind::SOA);
  const Index n = inst.n();
  DualState dual(inst.m(), *cfg.schedule, n);
  detail::TraceRecorder rec(n, inst.m(), cfg.record_dual_history);
  rec.prices(dual.prices());
  for (Index t = 0; t < n; ++t) {
    auto a = inst.column(t);
    const int x = threshold_decision(inst.reward(t), a, dual.prices());
    if (x) rec.take(t, 1, inst.reward(t), a);
    dual.step(x ? a : std::span<const double>{}, inst.budget());
    rec.prices(dual.prices());
  }
  return rec.finish(dual.prices(), cfg.rng_seed);
}

/**
 * Simple feasible algorithm. The dual follows the tentative decision (the
 * update happens before the capacity gate); the realized decision is the
 * tentative one only while cumulative consumption stays within b in every
 * coordinate.
 */
inline RunTrace run_sfa(const Instance& inst, const AlgorithmConfig& cfg) {
  detail::expect_kind(cfg, AlgorithmKind::SFA);
  const Index n = inst.n();
  const Index m = inst.m();
  const auto& b = inst.capacity();
  DualState dual(m, *cfg.schedule, n);
  detail::TraceRecorder rec(n, m, cfg.record_dual_history);
  RealVector used(m, 0.0);
  rec.prices(dual.prices());
  for (Index t = 0; t < n; ++t) {
    auto a = inst.column(t);
    const int tentative = threshold_decision(inst.reward(t), a, dual.prices());
    dual.step(tentative ? a : std::span<const double>{}, inst.budget());
    rec.prices(dual.prices());
    if (!tentative) continue;
    bool permitted = true;
    for (Index i = 0; i < m && permitted; ++i) permitted = used[i] + a[i] <= b[i];
    if (!permitted) continue;
    for (Index i = 0; i < m; ++i) used[i] += a[i];
    rec.take(t, 1, inst.reward(t), a);
  }
  return rec.finish(dual.prices(), cfg.rng_seed);
}

/**
 * Simple nonstationary algorithm: the subgradient target is the remaining
 * budget rate b_t / (n - t). The update after the last arrival is never used
 * and is skipped, so final_prices holds p_n.
 */
inline RunTrace run_sna(const Instance& inst, const AlgorithmConfig& cfg) {
  detail::expect_kind(cfg, AlgorithmKind::SNA);
  const Index n = inst.n();
  const Index m = inst.m();
  if (n < 2) throw DataError("sna needs n >= 2");
  DualState dual(m, *cfg.schedule, n);
  detail::TraceRecorder rec(n, m, cfg.record_dual_history);
  RealVector remaining(inst.capacity());
  RealVector target(m);
  rec.prices(dual.prices());
  for (Index t = 0; t < n; ++t) {
    auto a = inst.column(t);
    const int x = threshold_decision(inst.reward(t), a, dual.prices());
    if (x) {
      rec.take(t, 1, inst.reward(t), a);
      for (Index i = 0; i < m; ++i) remaining[i] -= a[i];
    }
    const Index left = n - (t + 1);
    if (left == 0) break;
    for (Index i = 0; i < m; ++i) target[i] = remaining[i] / static_cast<double>(left);
    dual.step(x ? a : std::span<const double>{}, target);
    rec.prices(dual.prices());
  }
  return rec.finish(dual.prices(), cfg.rng_seed);
}

/**
 * Multi-choice variant: take the alternative with the largest positive
 * priced margin r_tl - a_tl^T p, breaking exact ties uniformly at random.
 * decisions[t] is the 1-based alternative or 0.
 */
inline RunTrace run_multi_soa(const MultiInstance& inst, const AlgorithmConfig& cfg) {
  detail::expect_kind(cfg, AlgorithmKind::MultiSOA);
  const Index n = inst.n();
  const Index k = inst.k();
  std::mt19937_64 rng(cfg.rng_seed);
  DualState dual(inst.m(), StepSchedule::OneOverSqrtN, n);
  detail::TraceRecorder rec(n, inst.m(), cfg.record_dual_history);
  RealVector margin(k);
  std::vector<Index> ties;
  ties.reserve(k);
  rec.prices(dual.prices());
  for (Index t = 0; t < n; ++t) {
    double best = 0.0;
    for (Index l = 0; l < k; ++l) {
      margin[l] = inst.reward(t, l) - detail::dot(inst.column(t, l), dual.prices());
      if (l == 0 || margin[l] > best) best = margin[l];
    }
    std::span<const double> used;
    if (best > 0.0) {
      ties.clear();
      for (Index l = 0; l < k; ++l) {
        if (margin[l] == best) ties.push_back(l);
      }
      Index pick = ties.front();
      if (ties.size() > 1) {
        std::uniform_int_distribution<Index> choose(0, ties.size() - 1);
        pick = ties[choose(rng)];
      }
      used = inst.column(t, pick);
      rec.take(t, static_cast<int>(pick + 1), inst.reward(t, pick), used);
    }
    dual.step(used, inst.budget());
    rec.prices(dual.prices());
  }
  return rec.finish(dual.prices(), cfg.rng_seed);
}

// ---------------------------------------------------------------------------
// LP-resolving baselines
// ---------------------------------------------------------------------------

/**
 * Dynamic learning: threshold at p_t, where p_{t+1} is the optimal dual of
 * the scaled LP over the first t columns. Each LP is solved from scratch.
 */
inline RunTrace run_dla(const Instance& inst, const AlgorithmConfig& cfg) {
  detail::expect_kind(cfg, AlgorithmKind::DLA);
  const Index n = inst.n();
  detail::TraceRecorder rec(n, inst.m(), cfg.record_dual_history);
  RealVector prices(inst.m(), 0.0);
  rec.prices(prices);
  for (Index t = 0; t < n; ++t) {
    auto a = inst.column(t);
    if (threshold_decision(inst.reward(t), a, prices)) rec.take(t, 1, inst.reward(t), a);
    if (t + 1 == n) break;
    prices = detail::require_optimal(solve_scaled(inst, t + 1, {}, cfg.solver)).duals;
    rec.prices(prices);
  }
  return rec.finish(prices, cfg.rng_seed);
}

/**
 * Primal-beats-dual: accept arrival t with probability equal to its value in
 * the fractional optimum of the scaled LP over the first t columns. One
 * uniform draw is consumed per step.
 */
inline RunTrace run_pbd(const Instance& inst, const AlgorithmConfig& cfg) {
  detail::expect_kind(cfg, AlgorithmKind::PBD);
  const Index n = inst.n();
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  detail::TraceRecorder rec(n, inst.m(), cfg.record_dual_history);
  RealVector prices(inst.m(), 0.0);
  for (Index t = 0; t < n; ++t) {
    const auto sol = solve_scaled(inst, t + 1, {}, cfg.solver);
    detail::require_optimal(sol);
    const double frac = std::clamp(sol.primal[t], 0.0, 1.0);
    const double u = unit(rng);
    if (u < frac) rec.take(t, 1, inst.reward(t), inst.column(t));
    prices = sol.duals;
    rec.prices(prices);
  }
  return rec.finish(prices, cfg.rng_seed);
}

/// Dispatches on cfg.kind; MultiSOA runs on the k = 1 lift of `inst`.
inline RunTrace run_algorithm(const Instance& inst, const AlgorithmConfig& cfg) {
  switch (cfg.kind) {
    case AlgorithmKind::SOA: return run_soa(inst, cfg);
    case AlgorithmKind::SFA: return run_sfa(inst, cfg);
    case AlgorithmKind::SNA: return run_sna(inst, cfg);
    case AlgorithmKind::MultiSOA: return run_multi_soa(MultiInstance::from_instance(inst), cfg);
    case AlgorithmKind::DLA: return run_dla(inst, cfg);
    case AlgorithmKind::PBD: return run_pbd(inst, cfg);
  }
  throw DataError("unknown algorithm kind");
}

// ---------------------------------------------------------------------------
// Post-processing
// ---------------------------------------------------------------------------

/**
 * Size of the removal set:
 *   min( floor(2 v n_plus log n / (d_lo sqrt n)) + 1, n_plus ),
 * with v = max_i (excess_i)^+ / (sqrt(n) log n) clamped below at 1 and
 * natural logarithms throughout.
 */
inline Index repair_removal_count(Index n, Index n_plus, double max_excess, double d_lo) {
  if (n_plus == 0) return 0;
  const double nn = static_cast<double>(n);
  const double log_n = std::log(nn);
  const double root_n = std::sqrt(nn);
  const double v = std::max(std::max(max_excess, 0.0) / (root_n * log_n), 1.0);
  const double raw = 2.0 * v * static_cast<double>(n_plus) * log_n / (d_lo * root_n);
  const double count = std::floor(raw) + 1.0;
  return count >= static_cast<double>(n_plus) ? n_plus : static_cast<Index>(count);
}

/**
 * Zeroes a uniformly drawn subset of the accepted arrivals, sized by the
 * observed maximum overshoot. Removal happens even for feasible traces unless
 * cfg.skip_if_feasible is set.
 */
inline RunTrace repair_feasibility(const Instance& inst, const RunTrace& trace,
                                   const RepairConfig& cfg, std::uint64_t rng_seed) {
  if (!cfg.enabled) return trace;
  const Index n = inst.n();
  if (n < 3) throw DataError("feasibility repair needs n >= 3");
  if (cfg.d_lo_override && !(*cfg.d_lo_override > 0.0)) {
    throw DataError("d_lo override must be positive");
  }
  std::vector<Index> accepted;
  for (Index t = 0; t < n; ++t) {
    if (trace.decisions[t] != 0) accepted.push_back(t);
  }
  if (accepted.empty()) return trace;

  auto [objective, consumption] = accrue(inst, trace.decisions);
  double max_excess = 0.0;
  for (Index i = 0; i < inst.m(); ++i) {
    max_excess = std::max(max_excess, consumption[i] - inst.capacity()[i]);
  }
  if (cfg.skip_if_feasible && max_excess <= 0.0) return trace;

  const double d_lo = cfg.d_lo_override.value_or(compute_stats(inst).d_lo);
  const Index removals = repair_removal_count(n, accepted.size(), max_excess, d_lo);

  std::mt19937_64 rng(rng_seed);
  for (Index i = 0; i < removals; ++i) {
    std::uniform_int_distribution<Index> pick(i, accepted.size() - 1);
    std::swap(accepted[i], accepted[pick(rng)]);
  }
  RunTrace out = trace;
  for (Index i = 0; i < removals; ++i) out.decisions[accepted[i]] = 0;
  recompute_totals(inst, out);
  return out;
}

/**
 * Rejects every arrival from the first one whose acceptance would overrun
 * some capacity onwards (the "stop when a constraint is exhausted" benchmark
 * protocol).
 */
inline RunTrace truncate_at_exhaustion(const Instance& inst, const RunTrace& trace) {
  RunTrace out = trace;
  RealVector used(inst.m(), 0.0);
  bool stopped = false;
  for (Index t = 0; t < inst.n(); ++t) {
    if (out.decisions[t] == 0) continue;
    auto a = inst.column(t);
    for (Index i = 0; i < inst.m() && !stopped; ++i) {
      stopped = used[i] + a[i] > inst.capacity()[i];
    }
    if (stopped) {
      out.decisions[t] = 0;
      continue;
    }
    for (Index i = 0; i < inst.m(); ++i) used[i] += a[i];
  }
  recompute_totals(inst, out);
  return out;
}

}  // namespace olp
