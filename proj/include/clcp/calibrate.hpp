#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "clcp/core.hpp"
#include "clcp/error.hpp"

namespace clcp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Rank of the conformal quantile in a multiset of `total` values:
// k = ceil((1-delta) * total). The small downward nudge absorbs rounding
// noise when (1-delta)*total lands on an integer.
inline std::size_t quantile_rank(std::size_t total, double delta) {
  double x = (1.0 - delta) * static_cast<double>(total);
  double k = std::ceil(x - 1e-12);
  if (k < 1.0) return 1;
  if (k > static_cast<double>(total)) return total;
  return static_cast<std::size_t>(k);
}

namespace detail {

// k-th smallest (1-based) of a scratch copy.
inline double kth_smallest(std::vector<double> v, std::size_t k) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

}  // namespace detail

// The 1-delta conformal quantile of values ∪ {augment}: the k-th smallest of
// the augmented multiset with k = ceil((1-delta)(n+1)).
inline double conformal_quantile(const std::vector<double>& values, double augment,
                                 double delta) {
  if (values.empty()) throw error(errc::empty_input, "conformal quantile of no values");
  if (!(delta > 0.0 && delta < 1.0))
    throw error(errc::invalid_argument, "delta must lie in (0,1)");
  const std::size_t n = values.size();
  const std::size_t k = quantile_rank(n + 1, delta);
  if (k == n + 1) {
    double mx = *std::max_element(values.begin(), values.end());
    return std::max(mx, augment);
  }
  std::vector<double> v;
  v.reserve(n + 1);
  v = values;
  v.push_back(augment);
  return detail::kth_smallest(std::move(v), k);
}

// ICP quantile: augment with infinity; returns infinity when k = n+1.
inline double icp_quantile(const std::vector<double>& scores, double delta) {
  return conformal_quantile(scores, kInfinity, delta);
}

// Quantile of the full (n+1)-sample without augmentation. Used as the
// proof-side oracle in tests.
inline double augmented_quantile_oracle(const std::vector<double>& values, double delta) {
  if (values.empty()) throw error(errc::empty_input, "quantile of no values");
  if (values.size() < 2)
    throw error(errc::invalid_argument, "oracle needs at least two values");
  if (!(delta > 0.0 && delta < 1.0))
    throw error(errc::invalid_argument, "delta must lie in (0,1)");
  const std::size_t k = quantile_rank(values.size(), delta);
  return detail::kth_smallest(values, k);
}

// ---------------------------------------------------------------------------
// Feasibility: min over lambda of max over rows <= alpha. With monotone rows
// the minimum is attained at the last column, so lambda_max is the witness.
// ---------------------------------------------------------------------------

struct FeasibilityReport {
  bool feasible = false;
  double witness_lambda = 0.0;  // lambda_max when feasible
  double min_max_loss = 0.0;    // max over rows at the last column
};

inline FeasibilityReport check_feasibility(const LossMatrix& m, double alpha) {
  const auto& last = m.column(m.num_cols() - 1);
  double worst = *std::max_element(last.begin(), last.end());
  return {worst <= alpha, m.grid().back(), worst};
}

// ---------------------------------------------------------------------------
// Lambda searches.
// ---------------------------------------------------------------------------

namespace detail {

// Shared scan over columns provided by a callback (j, out) filling n losses.
// Column quantiles are non-increasing in lambda, so the ascending scan stops
// at the first success. The per-column test counts values above alpha, which
// decides "k-th smallest <= alpha" without a selection pass; the achieved
// quantile is computed only for the accepted column.
template <class ColumnFn>
CalibrationResult clcp_scan(std::size_t n, const LambdaGrid& grid, double bound,
                            const ControlConfig& config, ColumnFn&& column) {
  config.validate();
  if (!(config.delta > 1.0 / static_cast<double>(n + 1)))
    throw error(errc::delta_too_small, "delta must exceed 1/(n+1)");
  const std::size_t k = quantile_rank(n + 1, config.delta);
  // Q(lambda) <= alpha iff at most n+1-k of the augmented values exceed alpha.
  const std::size_t allowed_above = n + 1 - k;
  std::vector<double> buf(n);
  CalibrationResult res;
  double min_quantile = kInfinity;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    column(j, buf);
    std::size_t above = bound > config.alpha ? 1 : 0;
    for (double v : buf)
      if (v > config.alpha) ++above;
    ++res.scanned;
    if (above <= allowed_above) {
      buf.push_back(bound);
      double q = detail::kth_smallest(buf, k);
      res.lambda_star = grid[j];
      res.quantile_at_lambda_star = q;
      res.feasible = true;
      return res;
    }
    // Track the best quantile for the infeasible diagnostic (last column is
    // the minimizer, but compute honestly in case rows are not monotone).
    std::vector<double> aug = buf;
    aug.push_back(bound);
    min_quantile = std::min(min_quantile, detail::kth_smallest(std::move(aug), k));
  }
  res.feasible = false;
  res.lambda_star = grid.back();
  res.quantile_at_lambda_star = min_quantile;
  return res;
}

}  // namespace detail

// CLCP: the smallest grid lambda whose conformal loss quantile is <= alpha.
// An infeasible search returns feasible=false carrying the minimum achieved
// quantile; delta <= 1/(n+1) is a hard error.
inline CalibrationResult clcp_search(const LossMatrix& m, const ControlConfig& config) {
  return detail::clcp_scan(
      m.num_rows(), m.grid(), m.bound(), config,
      [&](std::size_t j, std::vector<double>& out) { out = m.column(j); });
}

// CRC baseline: the smallest grid lambda with (n/(n+1)) R_hat(lambda) + B/(n+1)
// <= alpha, where R_hat is the column mean.
struct CrcResult {
  double lambda_hat = 0.0;
  double achieved = 0.0;  // inflated mean at lambda_hat (minimum seen when infeasible)
  bool feasible = false;
};

inline CrcResult crc_search(const LossMatrix& m, double alpha) {
  const double n = static_cast<double>(m.num_rows());
  CrcResult res;
  double best = kInfinity;
  for (std::size_t j = 0; j < m.num_cols(); ++j) {
    const auto& col = m.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= n;
    double inflated = (n / (n + 1.0)) * mean + m.bound() / (n + 1.0);
    best = std::min(best, inflated);
    if (inflated <= alpha) {
      res.lambda_hat = m.grid()[j];
      res.achieved = inflated;
      res.feasible = true;
      return res;
    }
  }
  res.feasible = false;
  res.lambda_hat = m.grid().back();
  res.achieved = best;
  return res;
}

// ---------------------------------------------------------------------------
// Two-step coarse-to-fine search over a descending ladder.
// ---------------------------------------------------------------------------

struct TwoStepResult {
  CalibrationResult result;
  bool degenerate = false;  // the smallest ladder value already satisfied
};

// losses_at(lambda) returns the n calibration losses at that lambda. Finds
// adjacent ladder values lambda_1 > lambda_2 with Q(lambda_1) <= alpha and
// Q(lambda_2) > alpha, then scans refine_points equally spaced values from
// lambda_2 up to lambda_1 and returns the smallest satisfying one.
inline TwoStepResult two_step_search(
    const std::function<std::vector<double>(double)>& losses_at,
    const ControlConfig& config, const std::vector<double>& coarse_ladder,
    std::size_t refine_points, double bound) {
  config.validate();
  if (coarse_ladder.size() < 2)
    throw error(errc::invalid_argument, "ladder needs at least two values");
  for (std::size_t i = 0; i + 1 < coarse_ladder.size(); ++i)
    if (!(coarse_ladder[i] > coarse_ladder[i + 1]))
      throw error(errc::invalid_argument, "ladder must be strictly descending");
  if (refine_points < 2)
    throw error(errc::invalid_argument, "refine_points must be at least 2");

  auto quantile_at = [&](double lambda) {
    return conformal_quantile(losses_at(lambda), bound, config.delta);
  };

  TwoStepResult out;
  double q_top = quantile_at(coarse_ladder.front());
  ++out.result.scanned;
  if (q_top > config.alpha) {
    out.result.feasible = false;
    out.result.lambda_star = coarse_ladder.front();
    out.result.quantile_at_lambda_star = q_top;
    return out;
  }

  std::size_t fail_idx = coarse_ladder.size();  // first ladder index failing
  for (std::size_t i = 1; i < coarse_ladder.size(); ++i) {
    double q = quantile_at(coarse_ladder[i]);
    ++out.result.scanned;
    if (q > config.alpha) {
      fail_idx = i;
      break;
    }
  }
  if (fail_idx == coarse_ladder.size()) {
    // Even the smallest ladder value satisfies the condition.
    out.degenerate = true;
    out.result.feasible = true;
    out.result.lambda_star = coarse_ladder.back();
    out.result.quantile_at_lambda_star = quantile_at(coarse_ladder.back());
    return out;
  }

  const double hi = coarse_ladder[fail_idx - 1];
  const double lo = coarse_ladder[fail_idx];
  const double step = (hi - lo) / static_cast<double>(refine_points - 1);
  for (std::size_t t = 0; t < refine_points; ++t) {
    double lambda = lo + static_cast<double>(t) * step;
    if (t + 1 == refine_points) lambda = hi;  // land exactly on the known-good end
    double q = quantile_at(lambda);
    ++out.result.scanned;
    if (q <= config.alpha) {
      out.result.feasible = true;
      out.result.lambda_star = lambda;
      out.result.quantile_at_lambda_star = q;
      return out;
    }
  }
  // Unreachable when the quantile is monotone: hi satisfies by construction.
  out.result.feasible = true;
  out.result.lambda_star = hi;
  out.result.quantile_at_lambda_star = quantile_at(hi);
  return out;
}

}  // namespace clcp
