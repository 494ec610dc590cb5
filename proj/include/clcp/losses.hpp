#pragma once

#include <functional>
#include <vector>

#include "clcp/core.hpp"

namespace clcp {

// Shared bound for all built-in losses; each is a ratio or unit-scaled value.
inline constexpr double kUnitBound = 1.0;

// Per-class penalties for the class-varying loss.
class ClassLossTable {
 public:
  explicit ClassLossTable(std::vector<double> penalties) : penalties_(std::move(penalties)) {
    if (penalties_.empty()) throw error(errc::empty_input, "class loss table empty");
    for (double p : penalties_)
      if (!(p > 0.0 && p <= kUnitBound))
        throw error(errc::invalid_argument, "class penalty must lie in (0, 1]");
  }

  std::size_t num_classes() const { return penalties_.size(); }
  double operator[](int label) const { return penalties_[static_cast<std::size_t>(label - 1)]; }
  const std::vector<double>& values() const { return penalties_; }

 private:
  std::vector<double> penalties_;
};

inline double miscoverage_loss(int label, const LabelSet& set) {
  if (label < 1) throw error(errc::invalid_argument, "labels are 1-based");
  return set.contains(label) ? 0.0 : 1.0;
}

inline double class_varying_loss(int label, const LabelSet& set, const ClassLossTable& table) {
  if (label < 1 || static_cast<std::size_t>(label) > table.num_classes())
    throw error(errc::invalid_argument, "label outside table range");
  return set.contains(label) ? 0.0 : table[label];
}

// False-negative rate: fraction of true positive cells missed by the mask.
inline double fnr_loss(const GridMask& truth, const GridMask& pred) {
  if (!truth.same_shape(pred))
    throw error(errc::dimension_mismatch, "mask shapes differ");
  std::size_t positives = 0, hit = 0;
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    if (truth.cells[i]) {
      ++positives;
      if (pred.cells[i]) ++hit;
    }
  }
  if (positives == 0)
    throw error(errc::empty_truth, "truth mask has no positive cell");
  return 1.0 - static_cast<double>(hit) / static_cast<double>(positives);
}

// Fraction of cells whose truth value falls outside the band. Closed interval.
inline double band_miscoverage_rate(const Field& truth, const Band& band) {
  if (!truth.same_shape(band.lower()))
    throw error(errc::dimension_mismatch, "field shape differs from band");
  std::size_t miss = 0;
  for (std::size_t p = 0; p < truth.rows; ++p)
    for (std::size_t q = 0; q < truth.cols; ++q)
      if (!band.covers(p, q, truth.at(p, q))) ++miss;
  return static_cast<double>(miss) / static_cast<double>(truth.size());
}

// Assembles the n x m loss matrix entries[i][j] = loss(y_i, C_{lambda_j}(x_i)).
// loss_at(i, lambda) evaluates one sample at one grid point. The result is
// validated; a nesting violation signals a broken predictor/loss pairing.
inline LossMatrix compute_loss_matrix(std::size_t n,
                                      const std::function<double(std::size_t, double)>& loss_at,
                                      const LambdaGrid& grid, double bound) {
  if (n == 0) throw error(errc::empty_input, "no samples");
  std::vector<std::vector<double>> rows(n, std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) rows[i][j] = loss_at(i, grid[j]);
  LossMatrix m(rows, bound, grid);
  auto report = validate_loss_matrix(m);
  if (!report.empty())
    throw error(errc::nesting_violation,
                "loss matrix violates nesting at row " + std::to_string(report.front().row));
  return m;
}

}  // namespace clcp
