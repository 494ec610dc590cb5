#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "clcp/calibrate.hpp"
#include "clcp/core.hpp"
#include "clcp/losses.hpp"
#include "clcp/models.hpp"
#include "clcp/predictors.hpp"
#include "clcp/random.hpp"

namespace clcp {

// ---------------------------------------------------------------------------
// Synthetic exchangeable datasets.
// ---------------------------------------------------------------------------

struct ClassificationDataset {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;  // 1-based
  std::vector<double> class_losses;  // penalties drawn uniformly on (0,1)
};

// I.i.d. Gaussian mixture: class k sits at separation * (unit direction k).
inline ClassificationDataset gen_classification(std::uint64_t seed, std::size_t n_total,
                                                std::size_t num_classes, std::size_t dim,
                                                double separation) {
  if (num_classes < 2) throw error(errc::invalid_argument, "need at least two classes");
  if (dim < 1) throw error(errc::invalid_argument, "need at least one feature");
  Rng rng(seed);
  ClassificationDataset ds;
  ds.num_classes = num_classes;
  ds.dim = dim;
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim));
  for (auto& c : centers) {
    double norm = 0.0;
    for (auto& v : c) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : c) v = separation * v / norm;
  }
  ds.class_losses.resize(num_classes);
  for (auto& l : ds.class_losses) l = rng.uniform_open01();
  ds.features.reserve(n_total);
  ds.labels.reserve(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    auto k = static_cast<std::size_t>(rng.below(num_classes));
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = centers[k][j] + rng.normal();
    ds.features.push_back(std::move(x));
    ds.labels.push_back(static_cast<int>(k) + 1);
  }
  return ds;
}

struct GridFieldDataset {
  std::size_t rows = 0, cols = 0;
  std::vector<Field> inputs;   // forecast-like fields fed to the model
  std::vector<Field> labels;   // real observed fields
  std::vector<GridMask> events;  // label >= event_threshold, at least one positive
  double event_threshold = 0.0;
};

namespace detail {

inline Field smooth_field(const Field& f, std::size_t passes) {
  Field cur = f;
  Field next(f.rows, f.cols);
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (std::size_t p = 0; p < f.rows; ++p) {
      for (std::size_t q = 0; q < f.cols; ++q) {
        double sum = 0.0;
        int cnt = 0;
        for (int dp = -1; dp <= 1; ++dp) {
          for (int dq = -1; dq <= 1; ++dq) {
            auto pp = static_cast<long>(p) + dp;
            auto qq = static_cast<long>(q) + dq;
            if (pp < 0 || qq < 0 || pp >= static_cast<long>(f.rows) ||
                qq >= static_cast<long>(f.cols))
              continue;
            sum += cur.at(static_cast<std::size_t>(pp), static_cast<std::size_t>(qq));
            ++cnt;
          }
        }
        next.at(p, q) = sum / cnt;
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

inline void standardize(Field& f) {
  double mean = 0.0;
  for (double v : f.data) mean += v;
  mean /= static_cast<double>(f.size());
  double var = 0.0;
  for (double v : f.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(f.size());
  double sd = std::sqrt(std::max(var, 1e-12));
  for (auto& v : f.data) v = (v - mean) / sd;
}

inline Field noise_field(Rng& rng, std::size_t rows, std::size_t cols) {
  Field f(rows, cols);
  for (auto& v : f.data) v = rng.normal();
  return f;
}

}  // namespace detail

// Smooth correlated fields; labels are the input field plus smoothed noise,
// event masks mark label cells at or above the threshold. Samples whose mask
// is all zero are redrawn; generation stops with FILTER_EXHAUSTED after
// 100 * n_total attempts.
inline GridFieldDataset gen_grid_fields(std::uint64_t seed, std::size_t n_total,
                                        std::size_t rows, std::size_t cols,
                                        std::size_t smoothness, double event_threshold) {
  if (rows < 2 || cols < 2) throw error(errc::invalid_argument, "grid must be at least 2x2");
  Rng rng(seed);
  GridFieldDataset ds;
  ds.rows = rows;
  ds.cols = cols;
  ds.event_threshold = event_threshold;
  const std::size_t max_draws = 100 * n_total;
  std::size_t draws = 0;
  while (ds.inputs.size() < n_total) {
    if (draws >= max_draws)
      throw error(errc::filter_exhausted, "could not draw enough samples with events");
    ++draws;
    Field x = detail::smooth_field(detail::noise_field(rng, rows, cols), smoothness);
    detail::standardize(x);
    Field noise = detail::smooth_field(detail::noise_field(rng, rows, cols), smoothness);
    detail::standardize(noise);
    Field y(rows, cols);
    for (std::size_t i = 0; i < y.data.size(); ++i)
      y.data[i] = x.data[i] + 0.5 * noise.data[i];
    GridMask mask(rows, cols);
    for (std::size_t i = 0; i < y.data.size(); ++i)
      mask.cells[i] = y.data[i] >= event_threshold ? 1 : 0;
    if (mask.count() == 0) continue;
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(std::move(y));
    ds.events.push_back(std::move(mask));
  }
  return ds;
}

// Per-cell feature vector shared by the grid models: the cell value and its
// 3x3 neighborhood mean.
inline std::vector<double> cell_features(const Field& f, std::size_t p, std::size_t q) {
  double sum = 0.0;
  int cnt = 0;
  for (int dp = -1; dp <= 1; ++dp) {
    for (int dq = -1; dq <= 1; ++dq) {
      auto pp = static_cast<long>(p) + dp;
      auto qq = static_cast<long>(q) + dq;
      if (pp < 0 || qq < 0 || pp >= static_cast<long>(f.rows) || qq >= static_cast<long>(f.cols))
        continue;
      sum += f.at(static_cast<std::size_t>(pp), static_cast<std::size_t>(qq));
      ++cnt;
    }
  }
  return {f.at(p, q), sum / cnt};
}

// ---------------------------------------------------------------------------
// Trial harness.
// ---------------------------------------------------------------------------

struct TrialRecord {
  double lambda_star = 0.0;
  double test_loss = 0.0;
  double efficiency = 0.0;
  bool feasible = false;
};

// Aggregate of one guarantee experiment. `trials` counts feasible trials,
// which are the ones entering the frequency; infeasible searches are kept as
// a separate diagnostic and never silently dropped.
struct TrialReport {
  double alpha = 0.0;
  double delta = 0.0;
  std::size_t exceedance_count = 0;
  std::size_t trials = 0;
  std::size_t infeasible_count = 0;
  std::size_t degenerate_count = 0;  // two-step searches satisfied at the ladder floor
  double exceedance_frequency = 0.0;
  double mean_loss = 0.0;
  double efficiency = 0.0;  // average set size, normalized size, or interval length
};

struct ExperimentSpec {
  ControlConfig control;
  std::size_t train_count = 0;
  std::size_t n_calibration = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// n_pick distinct pool indices by partial Fisher-Yates. The scratch array is
// reset to the identity every call so trials are independent of evaluation
// order.
inline void sample_indices(Rng& rng, std::size_t pool, std::size_t n_pick,
                           std::vector<std::size_t>& scratch, std::vector<std::size_t>& out) {
  scratch.resize(pool);
  for (std::size_t i = 0; i < pool; ++i) scratch[i] = i;
  out.resize(n_pick);
  for (std::size_t i = 0; i < n_pick; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(pool - i));
    std::swap(scratch[i], scratch[j]);
    out[i] = scratch[i];
  }
}

inline void finalize(TrialReport& r, double loss_sum, double eff_sum) {
  if (r.trials > 0) {
    r.exceedance_frequency = static_cast<double>(r.exceedance_count) / static_cast<double>(r.trials);
    r.mean_loss = loss_sum / static_cast<double>(r.trials);
    r.efficiency = eff_sum / static_cast<double>(r.trials);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classification task (class-varying loss, threshold label sets).
// ---------------------------------------------------------------------------

struct ClassificationRig {
  SoftmaxModel model{1, 1};
  ClassLossTable table{std::vector<double>{1.0}};
  std::size_t num_classes = 0;
  // Per pool point: probability of the true class, penalty of the true
  // class, and the full probability vector (for set sizes).
  std::vector<double> p_true;
  std::vector<double> penalty;
  std::vector<std::vector<double>> probs;
};

inline ClassificationRig prepare_classification(const ClassificationDataset& ds,
                                                std::size_t train_count,
                                                double learning_rate = 0.5,
                                                std::size_t epochs = 150) {
  if (train_count + 2 > ds.features.size())
    throw error(errc::invalid_argument, "dataset too small for the split");
  std::vector<std::vector<double>> fx(ds.features.begin(),
                                      ds.features.begin() + static_cast<std::ptrdiff_t>(train_count));
  std::vector<int> fy(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(train_count));
  ClassificationRig rig;
  rig.model = train_softmax(fx, fy, learning_rate, epochs);
  rig.table = ClassLossTable(ds.class_losses);
  rig.num_classes = ds.num_classes;
  const std::size_t pool = ds.features.size() - train_count;
  rig.p_true.resize(pool);
  rig.penalty.resize(pool);
  rig.probs.resize(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    auto p = rig.model.predict(ds.features[train_count + i]);
    int y = ds.labels[train_count + i];
    rig.p_true[i] = p[static_cast<std::size_t>(y - 1)];
    rig.penalty[i] = rig.table[y];
    rig.probs[i] = p.values();
  }
  return rig;
}

// Class-varying loss of pool point i at lambda: covered iff p_true >= 1-lambda,
// matching threshold_label_set exactly.
inline double classification_pool_loss(const ClassificationRig& rig, std::size_t i,
                                       double lambda) {
  return rig.p_true[i] >= 1.0 - lambda ? 0.0 : rig.penalty[i];
}

inline double classification_set_size(const ClassificationRig& rig, std::size_t i,
                                      double lambda) {
  std::size_t size = 0;
  for (double p : rig.probs[i])
    if (p >= 1.0 - lambda) ++size;
  return static_cast<double>(size);
}

inline TrialReport run_classification_trials(const ClassificationRig& rig,
                                             const LambdaGrid& grid, const ControlConfig& control,
                                             std::size_t n_calib, std::size_t trials,
                                             std::uint64_t seed,
                                             std::vector<TrialRecord>* records = nullptr) {
  const std::size_t pool = rig.p_true.size();
  if (pool < n_calib + 1) throw error(errc::invalid_argument, "pool smaller than n+1");
  TrialReport report;
  report.alpha = control.alpha;
  report.delta = control.delta;
  double loss_sum = 0.0, eff_sum = 0.0;
  std::vector<std::size_t> scratch, idx;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, t);
    detail::sample_indices(rng, pool, n_calib + 1, scratch, idx);
    const std::size_t test = idx[n_calib];
    auto result = detail::clcp_scan(
        n_calib, grid, kUnitBound, control, [&](std::size_t j, std::vector<double>& out) {
          const double lambda = grid[j];
          for (std::size_t i = 0; i < n_calib; ++i)
            out[i] = classification_pool_loss(rig, idx[i], lambda);
        });
    if (!result.feasible) {
      ++report.infeasible_count;
      if (records) records->push_back({result.lambda_star, 0.0, 0.0, false});
      continue;
    }
    double loss = classification_pool_loss(rig, test, result.lambda_star);
    double eff = classification_set_size(rig, test, result.lambda_star);
    ++report.trials;
    if (loss > control.alpha) ++report.exceedance_count;
    loss_sum += loss;
    eff_sum += eff;
    if (records) records->push_back({result.lambda_star, loss, eff, true});
  }
  detail::finalize(report, loss_sum, eff_sum);
  return report;
}

// Same trial protocol with the CRC baseline picking lambda from the inflated
// mean loss; reported mean_loss is the quantity CRC controls.
inline TrialReport run_classification_crc_trials(const ClassificationRig& rig,
                                                 const LambdaGrid& grid, double alpha,
                                                 std::size_t n_calib, std::size_t trials,
                                                 std::uint64_t seed,
                                                 std::vector<TrialRecord>* records = nullptr) {
  const std::size_t pool = rig.p_true.size();
  if (pool < n_calib + 1) throw error(errc::invalid_argument, "pool smaller than n+1");
  TrialReport report;
  report.alpha = alpha;
  const double n = static_cast<double>(n_calib);
  double loss_sum = 0.0, eff_sum = 0.0;
  std::vector<std::size_t> scratch, idx;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, t);
    detail::sample_indices(rng, pool, n_calib + 1, scratch, idx);
    const std::size_t test = idx[n_calib];
    bool found = false;
    double lambda_hat = grid.back();
    for (std::size_t j = 0; j < grid.size() && !found; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n_calib; ++i)
        mean += classification_pool_loss(rig, idx[i], grid[j]);
      mean /= n;
      double inflated = (n / (n + 1.0)) * mean + kUnitBound / (n + 1.0);
      if (inflated <= alpha) {
        lambda_hat = grid[j];
        found = true;
      }
    }
    if (!found) {
      ++report.infeasible_count;
      if (records) records->push_back({lambda_hat, 0.0, 0.0, false});
      continue;
    }
    double loss = classification_pool_loss(rig, test, lambda_hat);
    double eff = classification_set_size(rig, test, lambda_hat);
    ++report.trials;
    if (loss > alpha) ++report.exceedance_count;
    loss_sum += loss;
    eff_sum += eff;
    if (records) records->push_back({lambda_hat, loss, eff, true});
  }
  detail::finalize(report, loss_sum, eff_sum);
  return report;
}

// ---------------------------------------------------------------------------
// Segmentation task (false-negative-rate loss, threshold grid masks).
// ---------------------------------------------------------------------------

struct SegmentationRig {
  SoftmaxModel model{2, 2};
  LambdaGrid grid{std::vector<double>{0.0}};
  std::size_t cells = 0;
  // Per pool sample: the FNR curve over the grid and the event-probability
  // field (flat) for set sizes.
  std::vector<std::vector<double>> loss_rows;
  std::vector<std::vector<double>> probs;
};

inline SegmentationRig prepare_segmentation(const GridFieldDataset& ds, std::size_t train_count,
                                            const LambdaGrid& grid, double learning_rate = 0.5,
                                            std::size_t epochs = 60) {
  if (train_count + 2 > ds.inputs.size())
    throw error(errc::invalid_argument, "dataset too small for the split");
  std::vector<std::vector<double>> fx;
  std::vector<int> fy;
  for (std::size_t s = 0; s < train_count; ++s) {
    for (std::size_t p = 0; p < ds.rows; ++p) {
      for (std::size_t q = 0; q < ds.cols; ++q) {
        fx.push_back(cell_features(ds.inputs[s], p, q));
        fy.push_back(ds.events[s].at(p, q) ? 2 : 1);  // class 2 = event
      }
    }
  }
  SegmentationRig rig;
  rig.model = train_softmax(fx, fy, learning_rate, epochs);
  rig.grid = grid;
  rig.cells = ds.rows * ds.cols;
  const std::size_t pool = ds.inputs.size() - train_count;
  rig.loss_rows.resize(pool);
  rig.probs.resize(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    const std::size_t s = train_count + i;
    std::vector<double> prob(rig.cells);
    for (std::size_t p = 0; p < ds.rows; ++p)
      for (std::size_t q = 0; q < ds.cols; ++q)
        prob[p * ds.cols + q] = rig.model.predict(cell_features(ds.inputs[s], p, q))[1];
    // FNR over the grid from the truth cells' probabilities only; predicted
    // positives outside the truth never change the loss.
    std::vector<double> truth_probs;
    for (std::size_t c = 0; c < rig.cells; ++c)
      if (ds.events[s].cells[c]) truth_probs.push_back(prob[c]);
    if (truth_probs.empty()) throw error(errc::empty_truth, "pool sample without events");
    std::vector<double> row(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::size_t hit = 0;
      for (double pb : truth_probs)
        if (pb >= 1.0 - grid[j]) ++hit;
      row[j] = 1.0 - static_cast<double>(hit) / static_cast<double>(truth_probs.size());
    }
    rig.loss_rows[i] = std::move(row);
    rig.probs[i] = std::move(prob);
  }
  return rig;
}

inline TrialReport run_segmentation_trials(const SegmentationRig& rig, const ControlConfig& control,
                                           std::size_t n_calib, std::size_t trials,
                                           std::uint64_t seed,
                                           std::vector<TrialRecord>* records = nullptr) {
  const std::size_t pool = rig.loss_rows.size();
  if (pool < n_calib + 1) throw error(errc::invalid_argument, "pool smaller than n+1");
  TrialReport report;
  report.alpha = control.alpha;
  report.delta = control.delta;
  double loss_sum = 0.0, eff_sum = 0.0;
  std::vector<std::size_t> scratch, idx;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, t);
    detail::sample_indices(rng, pool, n_calib + 1, scratch, idx);
    const std::size_t test = idx[n_calib];
    auto result = detail::clcp_scan(
        n_calib, rig.grid, kUnitBound, control, [&](std::size_t j, std::vector<double>& out) {
          for (std::size_t i = 0; i < n_calib; ++i) out[i] = rig.loss_rows[idx[i]][j];
        });
    if (!result.feasible) {
      ++report.infeasible_count;
      if (records) records->push_back({result.lambda_star, 0.0, 0.0, false});
      continue;
    }
    const std::size_t jstar = result.scanned - 1;  // early exit stops on success
    double loss = rig.loss_rows[test][jstar];
    std::size_t size = 0;
    for (double pb : rig.probs[test])
      if (pb >= 1.0 - result.lambda_star) ++size;
    double eff = static_cast<double>(size) / static_cast<double>(rig.cells);
    ++report.trials;
    if (loss > control.alpha) ++report.exceedance_count;
    loss_sum += loss;
    eff_sum += eff;
    if (records) records->push_back({result.lambda_star, loss, eff, true});
  }
  detail::finalize(report, loss_sum, eff_sum);
  return report;
}

// ---------------------------------------------------------------------------
// Band task (band miscoverage loss, quantile-triple bands, two-step search).
// ---------------------------------------------------------------------------

struct BandRig {
  QuantileModel model{2};
  std::size_t cells = 0;
  // Per pool sample: ascending per-cell critical lambdas (the smallest lambda
  // covering the cell's truth) and the summed interval scale for lengths.
  std::vector<std::vector<double>> sorted_crit;
  std::vector<double> sum_scale;
};

inline BandRig prepare_band(const GridFieldDataset& ds, std::size_t train_count,
                            double learning_rate = 0.2, std::size_t epochs = 300) {
  if (train_count + 2 > ds.inputs.size())
    throw error(errc::invalid_argument, "dataset too small for the split");
  std::vector<std::vector<double>> fx;
  std::vector<double> fy;
  for (std::size_t s = 0; s < train_count; ++s) {
    for (std::size_t p = 0; p < ds.rows; ++p) {
      for (std::size_t q = 0; q < ds.cols; ++q) {
        fx.push_back(cell_features(ds.inputs[s], p, q));
        fy.push_back(ds.labels[s].at(p, q));
      }
    }
  }
  BandRig rig;
  rig.model = train_quantile_regressor(fx, fy, learning_rate, epochs);
  rig.cells = ds.rows * ds.cols;
  const std::size_t pool = ds.inputs.size() - train_count;
  rig.sorted_crit.resize(pool);
  rig.sum_scale.resize(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    const std::size_t s = train_count + i;
    Field q05(ds.rows, ds.cols), q50(ds.rows, ds.cols), q95(ds.rows, ds.cols);
    for (std::size_t p = 0; p < ds.rows; ++p) {
      for (std::size_t q = 0; q < ds.cols; ++q) {
        auto t = rig.model.predict(cell_features(ds.inputs[s], p, q));
        q05.at(p, q) = t.q05;
        q50.at(p, q) = t.q50;
        q95.at(p, q) = t.q95;
      }
    }
    QuantileTripleGrid triple(std::move(q05), std::move(q50), std::move(q95));
    BandScale scale = BandScale::from_triple(triple);
    std::vector<double> crit(rig.cells);
    double sum = 0.0;
    for (std::size_t c = 0; c < rig.cells; ++c) {
      double y = ds.labels[s].data[c];
      double center = triple.q50().data[c];
      crit[c] = y >= center ? (y - center) / scale.delta_plus.data[c]
                            : (center - y) / scale.delta_minus.data[c];
      sum += scale.delta_plus.data[c] + scale.delta_minus.data[c];
    }
    std::sort(crit.begin(), crit.end());
    rig.sorted_crit[i] = std::move(crit);
    rig.sum_scale[i] = sum;
  }
  return rig;
}

// Band miscoverage of pool sample i at lambda: the fraction of cells whose
// critical lambda exceeds lambda.
inline double band_pool_loss(const BandRig& rig, std::size_t i, double lambda) {
  const auto& crit = rig.sorted_crit[i];
  auto it = std::upper_bound(crit.begin(), crit.end(), lambda);
  return static_cast<double>(crit.end() - it) / static_cast<double>(rig.cells);
}

inline TrialReport run_band_trials(const BandRig& rig, const ControlConfig& control,
                                   const std::vector<double>& ladder, std::size_t refine_points,
                                   std::size_t n_calib, std::size_t trials, std::uint64_t seed,
                                   std::vector<TrialRecord>* records = nullptr) {
  const std::size_t pool = rig.sorted_crit.size();
  if (pool < n_calib + 1) throw error(errc::invalid_argument, "pool smaller than n+1");
  TrialReport report;
  report.alpha = control.alpha;
  report.delta = control.delta;
  double loss_sum = 0.0, eff_sum = 0.0;
  std::vector<std::size_t> scratch, idx;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, t);
    detail::sample_indices(rng, pool, n_calib + 1, scratch, idx);
    const std::size_t test = idx[n_calib];
    auto two = two_step_search(
        [&](double lambda) {
          std::vector<double> losses(n_calib);
          for (std::size_t i = 0; i < n_calib; ++i)
            losses[i] = band_pool_loss(rig, idx[i], lambda);
          return losses;
        },
        control, ladder, refine_points, kUnitBound);
    if (two.degenerate) ++report.degenerate_count;
    if (!two.result.feasible) {
      ++report.infeasible_count;
      if (records) records->push_back({two.result.lambda_star, 0.0, 0.0, false});
      continue;
    }
    const double lambda_star = two.result.lambda_star;
    double loss = band_pool_loss(rig, test, lambda_star);
    double eff = lambda_star * rig.sum_scale[test] / static_cast<double>(rig.cells);
    ++report.trials;
    if (loss > control.alpha) ++report.exceedance_count;
    loss_sum += loss;
    eff_sum += eff;
    if (records) records->push_back({lambda_star, loss, eff, true});
  }
  detail::finalize(report, loss_sum, eff_sum);
  return report;
}

// ---------------------------------------------------------------------------
// CP special-case equivalence.
// ---------------------------------------------------------------------------

// For each score set, compares the CLCP lambda (miscoverage loss, alpha = 0)
// against the plain conformal score quantile; returns the largest absolute
// difference. The grid must strictly cover every score range.
inline double cp_equivalence_check(const std::vector<std::vector<double>>& score_sets,
                                   double delta, const LambdaGrid& grid) {
  if (score_sets.empty()) throw error(errc::empty_input, "no score sets");
  double max_diff = 0.0;
  for (const auto& scores : score_sets) {
    if (scores.empty()) throw error(errc::empty_input, "empty score set");
    auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    if (!(grid.front() < *mn && *mx < grid.back()))
      throw error(errc::grid_does_not_cover, "score range reaches outside the grid");
    const std::size_t n = scores.size();
    LossMatrix matrix = compute_loss_matrix(
        n, [&](std::size_t i, double lambda) { return scores[i] <= lambda ? 0.0 : 1.0; },
        grid, kUnitBound);
    auto result = clcp_search(matrix, {0.0, delta});
    if (!result.feasible) throw error(errc::infeasible, "CLCP infeasible on covering grid");
    const std::size_t k = quantile_rank(n + 1, delta);
    if (k > n) throw error(errc::delta_too_small, "score quantile falls on infinity");
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    double lambda_icp = sorted[k - 1];
    max_diff = std::max(max_diff, std::fabs(result.lambda_star - lambda_icp));
  }
  return max_diff;
}

}  // namespace clcp
