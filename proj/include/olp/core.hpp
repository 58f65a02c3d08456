/**
 * @file core.hpp
 * @brief Instance data, dual state and run traces shared by every online
 * algorithm, generator and metric.
 *
 * A binary integer LP is stored as
 *
 *     max  r^T x   s.t.  A x <= b,  x in {0,1}^n
 *
 * with A kept column-major so that column j (the j-th arriving request)
 * is a contiguous span of length m. The per-period budget d = b / n is
 * computed once at construction and never recomputed.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace olp {

using Index = std::size_t;
using RealVector = std::vector<double>;

/// Raised when input data breaks a structural invariant.
class DataError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (Index i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// Shortest decimal form that parses back to the identical double.
inline std::string format_real(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError("not a number: '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instance
// ---------------------------------------------------------------------------

/**
 * @brief Immutable binary ILP data (r, A, b) with precomputed d = b / n.
 *
 * Invariants: n >= 1, m >= 1, dimensions consistent, every d_i > 0.
 */
class Instance {
public:
  Instance(RealVector rewards, RealVector columns, RealVector capacity,
           std::string notes = {})
      : rewards_(std::move(rewards)),
        columns_(std::move(columns)),
        capacity_(std::move(capacity)),
        notes_(std::move(notes)) {
    const Index n = rewards_.size();
    const Index m = capacity_.size();
    if (n == 0) throw DataError("instance needs at least one column");
    if (m == 0) throw DataError("instance needs at least one constraint");
    if (columns_.size() != n * m) {
      throw DataError("column storage holds " + std::to_string(columns_.size()) +
                      " entries, expected n*m = " + std::to_string(n * m));
    }
    budget_.resize(m);
    for (Index i = 0; i < m; ++i) {
      budget_[i] = capacity_[i] / static_cast<double>(n);
      if (!(budget_[i] > 0.0)) {
        throw DataError("per-period budget d_" + std::to_string(i) +
                        " must be positive");
      }
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(rewards_.begin(), rewards_.end(), finite) ||
        !std::all_of(columns_.begin(), columns_.end(), finite) ||
        !std::all_of(capacity_.begin(), capacity_.end(), finite)) {
      throw DataError("instance contains non-finite values");
    }
  }

  Index n() const { return rewards_.size(); }
  Index m() const { return capacity_.size(); }

  const RealVector& rewards() const { return rewards_; }
  double reward(Index j) const { return rewards_[j]; }

  /// Column j of A, i.e. the resource request a_j.
  std::span<const double> column(Index j) const {
    return {columns_.data() + j * m(), m()};
  }
  double coeff(Index i, Index j) const { return columns_[j * m() + i]; }

  /// Column-major storage of A.
  const RealVector& columns() const { return columns_; }
  const RealVector& capacity() const { return capacity_; }
  /// d = b / n.
  const RealVector& budget() const { return budget_; }

  const std::string& notes() const { return notes_; }

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.rewards_ == b.rewards_ && a.columns_ == b.columns_ &&
           a.capacity_ == b.capacity_;
  }

private:
  RealVector rewards_;
  RealVector columns_;
  RealVector capacity_;
  RealVector budget_;
  std::string notes_;
};

/// Bounds r_bar = max|r|, a_bar = max|a_ij|, d_lo = min d, d_hi = max d.
struct InstanceStats {
  double r_bar = 0.0;
  double a_bar = 0.0;
  double d_lo = 0.0;
  double d_hi = 0.0;

  friend bool operator==(const InstanceStats&, const InstanceStats&) = default;
};

inline InstanceStats compute_stats(const Instance& inst) {
  InstanceStats s;
  for (double r : inst.rewards()) s.r_bar = std::max(s.r_bar, std::abs(r));
  for (double a : inst.columns()) s.a_bar = std::max(s.a_bar, std::abs(a));
  const auto& d = inst.budget();
  auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  s.d_lo = *lo;
  s.d_hi = *hi;
  return s;
}

/**
 * Almost-sure bound on every dual iterate of the subgradient algorithms
 * when gamma_t <= 1:
 *   (2 r_bar + m (a_bar + d_hi)^2) / d_lo + m (a_bar + d_hi).
 */
inline double dual_norm_bound(const InstanceStats& s, Index m) {
  const double md = static_cast<double>(m);
  const double spread = s.a_bar + s.d_hi;
  return (2.0 * s.r_bar + md * spread * spread) / s.d_lo + md * spread;
}

// ---------------------------------------------------------------------------
// Multi-dimensional instance
// ---------------------------------------------------------------------------

/**
 * @brief Data for the multi-choice extension where each arrival offers k
 * alternatives and at most one may be taken.
 *
 * Rewards are stored as n blocks of k values; matrices A_j as n blocks of
 * m*k values, column-major within a block (alternative l of arrival j is the
 * contiguous span a_{jl} of length m).
 */
class MultiInstance {
public:
  MultiInstance(Index k, RealVector rewards, RealVector columns,
                RealVector capacity)
      : k_(k),
        rewards_(std::move(rewards)),
        columns_(std::move(columns)),
        capacity_(std::move(capacity)) {
    if (k_ == 0) throw DataError("multi instance needs k >= 1");
    if (rewards_.empty() || rewards_.size() % k_ != 0) {
      throw DataError("reward blocks must hold n*k values with n >= 1");
    }
    n_ = rewards_.size() / k_;
    if (capacity_.empty()) throw DataError("multi instance needs m >= 1");
    if (columns_.size() != n_ * m() * k_) {
      throw DataError("column blocks must hold n*m*k values");
    }
    budget_.resize(m());
    for (Index i = 0; i < m(); ++i) {
      budget_[i] = capacity_[i] / static_cast<double>(n_);
      if (!(budget_[i] > 0.0)) {
        throw DataError("per-period budget must be positive");
      }
    }
  }

  /// Lifts a one-dimensional instance to k = 1.
  static MultiInstance from_instance(const Instance& inst) {
    return MultiInstance(1, inst.rewards(), inst.columns(), inst.capacity());
  }

  Index n() const { return n_; }
  Index m() const { return capacity_.size(); }
  Index k() const { return k_; }

  double reward(Index j, Index l) const { return rewards_[j * k_ + l]; }
  std::span<const double> column(Index j, Index l) const {
    return {columns_.data() + (j * k_ + l) * m(), m()};
  }
  const RealVector& capacity() const { return capacity_; }
  const RealVector& budget() const { return budget_; }

private:
  Index k_ = 1;
  Index n_ = 0;
  RealVector rewards_;
  RealVector columns_;
  RealVector capacity_;
  RealVector budget_;
};

// ---------------------------------------------------------------------------
// Dual state
// ---------------------------------------------------------------------------

enum class StepSchedule {
  OneOverSqrtN,  ///< gamma_t = 1 / sqrt(n)
  OneOverSqrtT,  ///< gamma_t = 1 / sqrt(t)
  ConstantUnit,  ///< gamma_t = 1
};

inline std::string_view to_string(StepSchedule s) {
  switch (s) {
    case StepSchedule::OneOverSqrtN: return "sqrt_n";
    case StepSchedule::OneOverSqrtT: return "sqrt_t";
    case StepSchedule::ConstantUnit: return "unit";
  }
  return "?";
}

inline StepSchedule parse_schedule(std::string_view text) {
  if (text == "sqrt_n" || text == "1/sqrt(n)") return StepSchedule::OneOverSqrtN;
  if (text == "sqrt_t" || text == "1/sqrt(t)") return StepSchedule::OneOverSqrtT;
  if (text == "unit" || text == "1") return StepSchedule::ConstantUnit;
  throw DataError("unknown step schedule '" + std::string(text) + "'");
}

/// Step size for 1-based step t of a horizon of n steps.
inline double step_size(StepSchedule s, Index t, Index n) {
  switch (s) {
    case StepSchedule::OneOverSqrtN: return 1.0 / std::sqrt(static_cast<double>(n));
    case StepSchedule::OneOverSqrtT: return 1.0 / std::sqrt(static_cast<double>(t));
    case StepSchedule::ConstantUnit: return 1.0;
  }
  return 0.0;
}

/**
 * @brief Dual price vector driven by projected subgradient steps.
 *
 * Every call to step() performs p <- max(p + gamma_t * g, 0) and keeps the
 * running maximum of ||p||_2.
 */
class DualState {
public:
  DualState(Index m, StepSchedule schedule, Index horizon)
      : prices_(m, 0.0), schedule_(schedule), horizon_(horizon) {}

  const RealVector& prices() const { return prices_; }
  Index step_index() const { return step_index_; }
  StepSchedule schedule() const { return schedule_; }
  double max_norm_seen() const { return max_norm_seen_; }
  double norm() const { return detail::norm2(prices_); }

  /// Step size that the next call to step() will use.
  double next_step_size() const {
    return step_size(schedule_, step_index_ + 1, horizon_);
  }

  /// p <- max(p + gamma * (consumed - target), 0).
  /// `consumed` may be empty, meaning a zero vector.
  void step(std::span<const double> consumed, std::span<const double> target) {
    const double gamma = next_step_size();
    for (Index i = 0; i < prices_.size(); ++i) {
      const double used = consumed.empty() ? 0.0 : consumed[i];
      prices_[i] = std::max(prices_[i] + gamma * (used - target[i]), 0.0);
    }
    ++step_index_;
    max_norm_seen_ = std::max(max_norm_seen_, norm());
  }

private:
  RealVector prices_;
  StepSchedule schedule_;
  Index horizon_;
  Index step_index_ = 0;
  double max_norm_seen_ = 0.0;
};

// ---------------------------------------------------------------------------
// Run trace
// ---------------------------------------------------------------------------

/**
 * @brief Output of one pass of an online algorithm.
 *
 * decisions[t] is 0/1 for binary algorithms; for the multi-choice variant
 * it is the 1-based alternative taken, 0 meaning reject.
 */
struct RunTrace {
  std::vector<int> decisions;
  double objective = 0.0;
  RealVector consumption;
  /// ||p_t||_2 for t = 1..n+1 when requested; empty otherwise.
  RealVector dual_norm_history;
  /// p_{n+1}, the price vector after the final update (empty for LP-based runs).
  RealVector final_prices;
  double max_dual_norm = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Objective and consumption recomputed from binary decisions.
inline std::pair<double, RealVector> accrue(const Instance& inst,
                                            std::span<const int> decisions) {
  if (decisions.size() != inst.n()) {
    throw DataError("decision vector has length " + std::to_string(decisions.size()) +
                    ", expected " + std::to_string(inst.n()));
  }
  double objective = 0.0;
  RealVector consumption(inst.m(), 0.0);
  for (Index j = 0; j < inst.n(); ++j) {
    if (decisions[j] == 0) continue;
    objective += inst.reward(j);
    auto a = inst.column(j);
    for (Index i = 0; i < inst.m(); ++i) consumption[i] += a[i];
  }
  return {objective, std::move(consumption)};
}

/// Re-derives objective and consumption of `trace` from its decisions.
inline void recompute_totals(const Instance& inst, RunTrace& trace) {
  auto [obj, cons] = accrue(inst, trace.decisions);
  trace.objective = obj;
  trace.consumption = std::move(cons);
}

// ---------------------------------------------------------------------------
// Instance-level arithmetic
// ---------------------------------------------------------------------------

/// ||(A x - b)^+||_2; zero iff x is feasible.
inline double violation_norm(const Instance& inst, std::span<const int> x) {
  auto [obj, cons] = accrue(inst, x);
  double acc = 0.0;
  for (Index i = 0; i < inst.m(); ++i) {
    const double over = std::max(cons[i] - inst.capacity()[i], 0.0);
    acc += over * over;
  }
  return std::sqrt(acc);
}

/**
 * Sample-average dual objective
 *   f_n(p) = d^T p + (1/n) sum_j (r_j - a_j^T p)^+
 * defined on p >= 0.
 */
inline double dual_saa_objective(const Instance& inst, std::span<const double> p) {
  if (p.size() != inst.m()) throw DataError("price vector has wrong length");
  for (double v : p) {
    if (v < 0.0) throw DataError("prices must be non-negative");
  }
  double tail = 0.0;
  for (Index j = 0; j < inst.n(); ++j) {
    tail += std::max(inst.reward(j) - detail::dot(inst.column(j), p), 0.0);
  }
  return detail::dot(inst.budget(), p) + tail / static_cast<double>(inst.n());
}

/// Accept iff r > a^T p; ties reject.
inline int threshold_decision(double reward, std::span<const double> column,
                              std::span<const double> prices) {
  return reward > detail::dot(column, prices) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/**
 * Writes the plain-text matrix format:
 *   line 1: n m
 *   line 2: n rewards
 *   m lines: rows of A
 *   last line: m capacities
 */
inline void write_instance(std::ostream& os, const Instance& inst) {
  os << inst.n() << ' ' << inst.m() << '\n';
  auto emit_row = [&os](auto&& get, Index count) {
    for (Index j = 0; j < count; ++j) {
      if (j) os << ' ';
      os << detail::format_real(get(j));
    }
    os << '\n';
  };
  emit_row([&](Index j) { return inst.reward(j); }, inst.n());
  for (Index i = 0; i < inst.m(); ++i) {
    emit_row([&](Index j) { return inst.coeff(i, j); }, inst.n());
  }
  emit_row([&](Index i) { return inst.capacity()[i]; }, inst.m());
}

inline Instance read_instance(std::istream& is) {
  std::vector<std::string> tokens;
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  Index pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw DataError("instance text truncated");
    return tokens[pos++];
  };
  auto count = [&](const std::string& s) {
    double v = detail::parse_real(s);
    if (v < 1 || v != std::floor(v)) throw DataError("bad dimension '" + s + "'");
    return static_cast<Index>(v);
  };
  const Index n = count(next());
  const Index m = count(next());
  RealVector rewards(n);
  for (auto& r : rewards) r = detail::parse_real(next());
  RealVector columns(n * m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) columns[j * m + i] = detail::parse_real(next());
  }
  RealVector capacity(m);
  for (auto& b : capacity) b = detail::parse_real(next());
  if (pos != tokens.size()) throw DataError("trailing data after instance");
  return Instance(std::move(rewards), std::move(columns), std::move(capacity));
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open instance file '" + path + "'");
  return read_instance(in);
}

}  // namespace olp
