/**
 * @file metrics.hpp
 * @brief Regret, violation and competitiveness of single runs, aggregation
 * over seeded trials, and log-log scaling fits.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "olp/core.hpp"
#include "olp/simplex.hpp"

namespace olp {

struct TrialResult {
  std::string algorithm;
  Index n = 0;
  Index m = 0;
  Index trial = 0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  /// R_n*, the LP relaxation optimum.
  double offline_lp_opt = 0.0;
  double regret = 0.0;
  double violation = 0.0;
  /// objective / R_n*; NaN when R_n* <= 0.
  double competitiveness = std::numeric_limits<double>::quiet_NaN();
  /// ||b||_2, the normalizer for violation.
  double capacity_norm = 0.0;
  double max_dual_norm = 0.0;
  double wall_time = 0.0;
  /// "ok" or the failure message.
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
  bool competitiveness_defined() const { return offline_lp_opt > 0.0; }
};

inline TrialResult evaluate_trial(const Instance& inst, const RunTrace& trace,
                                  std::optional<double> lp_opt = std::nullopt,
                                  const SimplexOptions& opts = {}) {
  if (!lp_opt) {
    const auto sol = solve_relaxation(inst, opts);
    if (sol.status != LpStatus::Optimal) {
      throw SolverError("offline LP is " + std::string(to_string(sol.status)));
    }
    lp_opt = sol.objective;
  }
  TrialResult res;
  res.n = inst.n();
  res.m = inst.m();
  res.seed = trace.rng_seed;
  res.objective = accrue(inst, trace.decisions).first;
  res.offline_lp_opt = *lp_opt;
  res.regret = res.offline_lp_opt - res.objective;
  res.violation = violation_norm(inst, trace.decisions);
  if (res.competitiveness_defined()) res.competitiveness = res.objective / res.offline_lp_opt;
  res.capacity_norm = detail::norm2(inst.capacity());
  res.max_dual_norm = trace.max_dual_norm;
  return res;
}

struct Stat {
  double mean = 0.0;
  /// Sample standard deviation / sqrt(count); 0 for a single value.
  double stderr_ = 0.0;
  Index count = 0;
};

namespace detail {

inline Stat mean_stderr(const std::vector<double>& xs) {
  Stat s;
  s.count = xs.size();
  if (xs.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return s;
}

}  // namespace detail

struct Summary {
  std::string algorithm;
  Index n = 0;
  Index m = 0;
  Index trials = 0;
  Stat objective;
  Stat regret;
  Stat violation;
  Stat competitiveness;
  /// regret / R_n*, per trial.
  Stat normalized_regret;
  /// violation / ||b||_2, per trial.
  Stat normalized_violation;
  Stat max_dual_norm;
  Stat wall_time;
  /// Set when some trial had R_n* <= 0 (competitiveness undefined there).
  bool competitiveness_flagged = false;
};

/**
 * Mean and standard error over one (algorithm, n, m) group. Rows are sorted
 * by (trial, seed) before reduction so the result does not depend on input
 * order.
 */
inline Summary aggregate(std::vector<TrialResult> results) {
  if (results.empty()) throw DataError("cannot aggregate an empty result list");
  const auto& head = results.front();
  for (const auto& r : results) {
    if (r.algorithm != head.algorithm || r.n != head.n || r.m != head.m) {
      throw DataError("aggregate needs a homogeneous (algorithm, n, m) group");
    }
  }
  std::sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
    return std::tie(a.trial, a.seed) < std::tie(b.trial, b.seed);
  });

  Summary s;
  s.algorithm = head.algorithm;
  s.n = head.n;
  s.m = head.m;
  s.trials = results.size();
  std::vector<double> obj, reg, vio, comp, nreg, nvio, dual, wall;
  for (const auto& r : results) {
    obj.push_back(r.objective);
    reg.push_back(r.regret);
    vio.push_back(r.violation);
    dual.push_back(r.max_dual_norm);
    wall.push_back(r.wall_time);
    nvio.push_back(r.violation / r.capacity_norm);
    if (r.competitiveness_defined()) {
      comp.push_back(r.competitiveness);
      nreg.push_back(r.regret / r.offline_lp_opt);
    } else {
      s.competitiveness_flagged = true;
    }
  }
  s.objective = detail::mean_stderr(obj);
  s.regret = detail::mean_stderr(reg);
  s.violation = detail::mean_stderr(vio);
  s.competitiveness = detail::mean_stderr(comp);
  s.normalized_regret = detail::mean_stderr(nreg);
  s.normalized_violation = detail::mean_stderr(nvio);
  s.max_dual_norm = detail::mean_stderr(dual);
  s.wall_time = detail::mean_stderr(wall);
  return s;
}

struct ScalingPoint {
  Index n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<ScalingPoint> points;
  /// n values dropped because their mean was not positive.
  std::vector<Index> excluded;
};

/// Least-squares fit of log(mean) = intercept + exponent * log(n).
inline ScalingFit fit_scaling(const std::vector<ScalingPoint>& points) {
  ScalingFit fit;
  for (const auto& p : points) {
    if (p.mean > 0.0 && p.n > 0) {
      fit.points.push_back(p);
    } else {
      fit.excluded.push_back(p.n);
    }
  }
  if (fit.points.size() < 3) {
    throw DataError("scaling fit needs at least 3 positive means");
  }
  auto [lo, hi] = std::minmax_element(
      fit.points.begin(), fit.points.end(),
      [](const ScalingPoint& a, const ScalingPoint& b) { return a.n < b.n; });
  if (static_cast<double>(hi->n) < 10.0 * static_cast<double>(lo->n)) {
    throw DataError("scaling fit needs n values spanning at least one decade");
  }
  const double k = static_cast<double>(fit.points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : fit.points) {
    sx += std::log(static_cast<double>(p.n));
    sy += std::log(p.mean);
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : fit.points) {
    const double dx = std::log(static_cast<double>(p.n)) - mx;
    const double dy = std::log(p.mean) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace olp
