/**
 * @file simplex.hpp
 * @brief Dense bounded-variable primal simplex for the LP relaxation
 *
 *     max r^T x  s.t.  A x <= b,  0 <= x <= 1
 *
 * and its scaled prefix variants, plus an exhaustive binary oracle for tiny
 * instances.
 *
 * Box constraints are variable bounds, so the basis is always m x m. The
 * solver keeps an explicit basis inverse updated by eta transformations and
 * refactored from the original data every `refactor_interval` pivots and
 * again before the optimality certificate is accepted. Dantzig pricing is
 * used until 3*(n+m) consecutive degenerate pivots occur, after which the
 * phase continues under Bland's rule.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "olp/core.hpp"

namespace olp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-7;
  /// Reduced-cost threshold for an improving column.
  double opt_tol = 1e-9;
  Index refactor_interval = 64;
  /// 0 selects 100 * (n + m) + 1000.
  Index max_iterations = 0;
};

struct LpSolution {
  RealVector primal;
  /// Prices p for the capacity rows.
  RealVector duals;
  /// Prices s for the x <= 1 rows, s_j = (r_j - a_j^T p)^+.
  RealVector reduced_bounds_duals;
  double objective = 0.0;
  LpStatus status = LpStatus::Optimal;
  Index iterations = 0;
};

namespace detail {

class BoxSimplex {
public:
  BoxSimplex(std::span<const double> rewards, std::span<const double> columns,
             std::span<const double> rhs, const SimplexOptions& opts)
      : n_(rewards.size()),
        m_(rhs.size()),
        rewards_(rewards),
        columns_(columns),
        rhs_(rhs),
        opts_(opts) {
    const Index total = n_ + 2 * m_;
    lower_.assign(total, 0.0);
    upper_.assign(total, kInf);
    for (Index j = 0; j < n_; ++j) upper_[j] = 1.0;
    value_.assign(total, 0.0);
    state_.assign(total, State::AtLower);
    basis_.resize(m_);
    binv_.assign(m_ * m_, 0.0);
    for (Index i = 0; i < m_; ++i) {
      const Index slack = n_ + i;
      const Index art = n_ + m_ + i;
      if (rhs_[i] >= 0.0) {
        basis_[i] = slack;
        value_[slack] = rhs_[i];
        upper_[art] = 0.0;
        binv_[i * m_ + i] = 1.0;
      } else {
        basis_[i] = art;
        value_[art] = -rhs_[i];
        binv_[i * m_ + i] = -1.0;
        needs_phase_one_ = true;
      }
    }
    for (Index r = 0; r < m_; ++r) state_[basis_[r]] = State::Basic;
    max_iterations_ = opts_.max_iterations ? opts_.max_iterations
                                           : 100 * (n_ + m_) + 1000;
  }

  LpSolution solve() {
    LpSolution sol;
    if (needs_phase_one_) {
      costs_.assign(n_ + 2 * m_, 0.0);
      for (Index i = 0; i < m_; ++i) costs_[n_ + m_ + i] = -1.0;
      if (run_phase() == LpStatus::Unbounded) {
        throw SolverError("phase one reported unbounded");
      }
      double infeasibility = 0.0;
      for (Index i = 0; i < m_; ++i) infeasibility += value_[n_ + m_ + i];
      double scale = 1.0;
      for (double b : rhs_) scale = std::max(scale, std::abs(b));
      if (infeasibility > opts_.feas_tol * scale) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iterations_;
        return sol;
      }
      for (Index i = 0; i < m_; ++i) {
        const Index art = n_ + m_ + i;
        upper_[art] = 0.0;
        value_[art] = 0.0;
      }
    }
    costs_.assign(n_ + 2 * m_, 0.0);
    for (Index j = 0; j < n_; ++j) costs_[j] = rewards_[j];
    bland_ = false;
    degenerate_run_ = 0;
    if (run_phase() == LpStatus::Unbounded) {
      sol.status = LpStatus::Unbounded;
      sol.iterations = iterations_;
      return sol;
    }
    extract(sol);
    return sol;
  }

private:
  enum class State : std::uint8_t { Basic, AtLower, AtUpper };
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  // Entry i of the column of variable j.
  double entry(Index j, Index i) const {
    if (j < n_) return columns_[j * m_ + i];
    if (j < n_ + m_) return (j - n_) == i ? 1.0 : 0.0;
    return (j - n_ - m_) == i ? -1.0 : 0.0;
  }

  double reduced_cost(Index j) const {
    if (j < n_) return costs_[j] - dot(columns_.subspan(j * m_, m_), duals_);
    if (j < n_ + m_) return costs_[j] - duals_[j - n_];
    return costs_[j] + duals_[j - n_ - m_];
  }

  void compute_duals() {
    duals_.assign(m_, 0.0);
    for (Index r = 0; r < m_; ++r) {
      const double c = costs_[basis_[r]];
      if (c == 0.0) continue;
      const double* row = &binv_[r * m_];
      for (Index k = 0; k < m_; ++k) duals_[k] += c * row[k];
    }
  }

  // alpha = B^{-1} a_q
  void compute_alpha(Index q) {
    alpha_.assign(m_, 0.0);
    if (q < n_) {
      auto col = columns_.subspan(q * m_, m_);
      for (Index r = 0; r < m_; ++r) {
        const double* row = &binv_[r * m_];
        double acc = 0.0;
        for (Index k = 0; k < m_; ++k) acc += row[k] * col[k];
        alpha_[r] = acc;
      }
    } else {
      const Index i = q < n_ + m_ ? q - n_ : q - n_ - m_;
      const double sign = q < n_ + m_ ? 1.0 : -1.0;
      for (Index r = 0; r < m_; ++r) alpha_[r] = sign * binv_[r * m_ + i];
    }
  }

  // Rebuilds B^{-1} from the original columns and recomputes basic values.
  void refactor() {
    std::vector<double> work(m_ * 2 * m_, 0.0);
    const Index w = 2 * m_;
    for (Index r = 0; r < m_; ++r) {
      for (Index i = 0; i < m_; ++i) work[i * w + r] = entry(basis_[r], i);
      work[r * w + m_ + r] = 1.0;
    }
    for (Index c = 0; c < m_; ++c) {
      Index piv = c;
      for (Index i = c + 1; i < m_; ++i) {
        if (std::abs(work[i * w + c]) > std::abs(work[piv * w + c])) piv = i;
      }
      if (std::abs(work[piv * w + c]) < 1e-13) {
        throw SolverError("singular basis during refactorization");
      }
      if (piv != c) {
        for (Index k = 0; k < w; ++k) std::swap(work[c * w + k], work[piv * w + k]);
      }
      const double inv = 1.0 / work[c * w + c];
      for (Index k = 0; k < w; ++k) work[c * w + k] *= inv;
      for (Index i = 0; i < m_; ++i) {
        if (i == c) continue;
        const double f = work[i * w + c];
        if (f == 0.0) continue;
        for (Index k = 0; k < w; ++k) work[i * w + k] -= f * work[c * w + k];
      }
    }
    for (Index r = 0; r < m_; ++r) {
      for (Index k = 0; k < m_; ++k) binv_[r * m_ + k] = work[r * w + m_ + k];
    }
    // x_B = B^{-1} (b - N x_N)
    std::vector<double> resid(rhs_.begin(), rhs_.end());
    for (Index j = 0; j < n_ + 2 * m_; ++j) {
      if (state_[j] == State::Basic || value_[j] == 0.0) continue;
      for (Index i = 0; i < m_; ++i) resid[i] -= entry(j, i) * value_[j];
    }
    for (Index r = 0; r < m_; ++r) {
      double acc = 0.0;
      for (Index k = 0; k < m_; ++k) acc += binv_[r * m_ + k] * resid[k];
      value_[basis_[r]] = acc;
    }
    since_refactor_ = 0;
  }

  LpStatus run_phase() {
    bool fresh = false;
    const Index degenerate_limit = 3 * (n_ + m_);
    for (;;) {
      if (since_refactor_ >= opts_.refactor_interval) refactor();
      compute_duals();

      Index entering = kNone;
      double best = 0.0;
      for (Index j = 0; j < n_ + 2 * m_; ++j) {
        if (state_[j] == State::Basic || lower_[j] == upper_[j]) continue;
        const double d = reduced_cost(j);
        const bool improving = (state_[j] == State::AtLower && d > opts_.opt_tol) ||
                               (state_[j] == State::AtUpper && d < -opts_.opt_tol);
        if (!improving) continue;
        if (bland_) {
          entering = j;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
        }
      }
      if (entering == kNone) {
        if (fresh) return LpStatus::Optimal;
        refactor();
        fresh = true;
        continue;
      }
      fresh = false;
      if (++iterations_ > max_iterations_) {
        throw SolverError("simplex iteration limit exceeded");
      }

      compute_alpha(entering);
      const double dir = state_[entering] == State::AtLower ? 1.0 : -1.0;

      // Ratio test. Basic variable r moves by -dir * theta * alpha_r.
      double theta = upper_[entering] - lower_[entering];
      Index leave_row = kNone;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (Index r = 0; r < m_; ++r) {
        const double delta = -dir * alpha_[r];
        if (std::abs(delta) <= opts_.pivot_tol) continue;
        const Index k = basis_[r];
        double limit;
        bool to_upper;
        if (delta < 0.0) {
          limit = (value_[k] - lower_[k]) / -delta;
          to_upper = false;
        } else {
          if (upper_[k] == kInf) continue;
          limit = (upper_[k] - value_[k]) / delta;
          to_upper = true;
        }
        limit = std::max(limit, 0.0);
        bool take = false;
        if (limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12 && leave_row != kNone) {
          take = bland_ ? k < basis_[leave_row]
                        : std::abs(alpha_[r]) > std::abs(leave_pivot);
        }
        // A tie with the entering variable's own bound flip keeps the flip.
        if (take) {
          theta = limit;
          leave_row = r;
          leave_to_upper = to_upper;
          leave_pivot = alpha_[r];
        }
      }
      if (theta == kInf) return LpStatus::Unbounded;

      degenerate_run_ = theta <= 1e-12 ? degenerate_run_ + 1 : 0;
      if (degenerate_run_ > degenerate_limit) bland_ = true;

      value_[entering] += dir * theta;
      for (Index r = 0; r < m_; ++r) value_[basis_[r]] -= dir * theta * alpha_[r];

      if (leave_row == kNone) {
        state_[entering] = state_[entering] == State::AtLower ? State::AtUpper
                                                              : State::AtLower;
        value_[entering] = state_[entering] == State::AtLower ? lower_[entering]
                                                              : upper_[entering];
        continue;
      }

      const Index leaving = basis_[leave_row];
      state_[leaving] = leave_to_upper ? State::AtUpper : State::AtLower;
      value_[leaving] = leave_to_upper ? upper_[leaving] : lower_[leaving];
      basis_[leave_row] = entering;
      state_[entering] = State::Basic;

      // Eta update of B^{-1}.
      double* prow = &binv_[leave_row * m_];
      const double inv = 1.0 / alpha_[leave_row];
      for (Index k = 0; k < m_; ++k) prow[k] *= inv;
      for (Index r = 0; r < m_; ++r) {
        if (r == leave_row || alpha_[r] == 0.0) continue;
        double* row = &binv_[r * m_];
        const double f = alpha_[r];
        for (Index k = 0; k < m_; ++k) row[k] -= f * prow[k];
      }
      ++since_refactor_;
    }
  }

  void extract(LpSolution& sol) {
    refactor();
    compute_duals();
    sol.status = LpStatus::Optimal;
    sol.iterations = iterations_;
    sol.primal.resize(n_);
    sol.objective = 0.0;
    for (Index j = 0; j < n_; ++j) {
      sol.primal[j] = std::clamp(value_[j], 0.0, 1.0);
      sol.objective += rewards_[j] * sol.primal[j];
    }
    sol.duals.resize(m_);
    for (Index i = 0; i < m_; ++i) sol.duals[i] = std::max(duals_[i], 0.0);
    sol.reduced_bounds_duals.resize(n_);
    for (Index j = 0; j < n_; ++j) {
      const double priced = dot(columns_.subspan(j * m_, m_), sol.duals);
      sol.reduced_bounds_duals[j] = std::max(rewards_[j] - priced, 0.0);
    }
  }

  static constexpr Index kNone = static_cast<Index>(-1);

  Index n_;
  Index m_;
  std::span<const double> rewards_;
  std::span<const double> columns_;
  std::span<const double> rhs_;
  SimplexOptions opts_;

  std::vector<double> lower_, upper_, value_, costs_;
  std::vector<State> state_;
  std::vector<Index> basis_;
  std::vector<double> binv_;
  std::vector<double> duals_, alpha_;
  bool needs_phase_one_ = false;
  bool bland_ = false;
  Index degenerate_run_ = 0;
  Index since_refactor_ = 0;
  Index iterations_ = 0;
  Index max_iterations_ = 0;
};

}  // namespace detail

/**
 * Solves max r^T x s.t. A x <= rhs, 0 <= x <= 1 for raw data. `columns` is
 * column-major with rhs.size() rows. Unlike Instance, rhs may be negative,
 * in which case a phase-one pass decides feasibility.
 */
inline LpSolution solve_box_lp(std::span<const double> rewards,
                               std::span<const double> columns,
                               std::span<const double> rhs,
                               const SimplexOptions& opts = {}) {
  if (rhs.empty()) throw DataError("LP needs at least one row");
  if (columns.size() != rewards.size() * rhs.size()) {
    throw DataError("LP column storage does not match n*m");
  }
  detail::BoxSimplex solver(rewards, columns, rhs, opts);
  return solver.solve();
}

/// LP relaxation of the full instance; objective is R_n*.
inline LpSolution solve_relaxation(const Instance& inst,
                                   const SimplexOptions& opts = {}) {
  return solve_box_lp(inst.rewards(), inst.columns(), inst.capacity(), opts);
}

/**
 * LP over the first s columns with capacity s*d + relax. With relax = 0 the
 * objective is R_s*.
 */
inline LpSolution solve_scaled(const Instance& inst, Index s,
                               std::span<const double> relax = {},
                               const SimplexOptions& opts = {}) {
  if (s < 1 || s > inst.n()) {
    throw DataError("prefix length must lie in [1, n]");
  }
  if (!relax.empty() && relax.size() != inst.m()) {
    throw DataError("relaxation vector has wrong length");
  }
  RealVector rhs(inst.m());
  for (Index i = 0; i < inst.m(); ++i) {
    const double extra = relax.empty() ? 0.0 : relax[i];
    if (extra < 0.0) throw DataError("relaxation must be non-negative");
    rhs[i] = static_cast<double>(s) * inst.budget()[i] + extra;
  }
  std::span<const double> rewards(inst.rewards().data(), s);
  std::span<const double> columns(inst.columns().data(), s * inst.m());
  return solve_box_lp(rewards, columns, rhs, opts);
}

struct BinarySolution {
  /// -infinity when no assignment is feasible.
  double objective = -std::numeric_limits<double>::infinity();
  std::vector<int> x;
};

inline constexpr Index kMaxExactColumns = 25;

/// Exhaustive search over all 2^n binary assignments (Gray-code order).
inline BinarySolution solve_binary_exact(const Instance& inst) {
  const Index n = inst.n();
  const Index m = inst.m();
  if (n > kMaxExactColumns) {
    throw DataError("exact binary search refuses n > " +
                    std::to_string(kMaxExactColumns));
  }
  const auto& b = inst.capacity();
  std::vector<int> x(n, 0);
  RealVector used(m, 0.0);
  double value = 0.0;

  BinarySolution best;
  auto consider = [&] {
    for (Index i = 0; i < m; ++i) {
      if (used[i] > b[i] + 1e-9 * (1.0 + std::abs(b[i]))) return;
    }
    // Confirm with an exact recomputation before accepting a candidate.
    auto [obj, cons] = accrue(inst, x);
    if (!best.x.empty() && obj <= best.objective) return;
    for (Index i = 0; i < m; ++i) {
      if (cons[i] > b[i]) return;
    }
    best.objective = obj;
    best.x = x;
  };

  consider();
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    const Index j = static_cast<Index>(std::countr_zero(g));
    const double sign = x[j] ? -1.0 : 1.0;
    x[j] ^= 1;
    value += sign * inst.reward(j);
    auto a = inst.column(j);
    for (Index i = 0; i < m; ++i) used[i] += sign * a[i];
    if (best.x.empty() || value > best.objective - 1e-9 * (1.0 + std::abs(value))) {
      consider();
    }
  }
  return best;
}

}  // namespace olp
