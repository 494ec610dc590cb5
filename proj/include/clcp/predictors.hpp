#pragma once

#include <algorithm>
#include <vector>

#include "clcp/core.hpp"

namespace clcp {

// Floor keeping band scales strictly positive.
inline constexpr double kScaleFloor = 1e-6;

// Labels whose estimated probability reaches 1 - lambda. Closed comparison.
inline LabelSet threshold_label_set(const ClassProbs& probs, double lambda) {
  std::vector<int> members;
  for (std::size_t k = 0; k < probs.num_classes(); ++k)
    if (probs[k] >= 1.0 - lambda) members.push_back(static_cast<int>(k) + 1);
  return LabelSet(std::move(members));
}

// Labels whose nonconformity score is at most lambda.
inline LabelSet nonconformity_label_set(const std::vector<double>& scores, double lambda) {
  std::vector<int> members;
  for (std::size_t k = 0; k < scores.size(); ++k)
    if (scores[k] <= lambda) members.push_back(static_cast<int>(k) + 1);
  return LabelSet(std::move(members));
}

// Cells whose event probability reaches 1 - lambda.
inline GridMask grid_segmentation_set(const ProbGrid& grid, double lambda) {
  GridMask mask(grid.rows(), grid.cols());
  const auto& v = grid.values().data;
  for (std::size_t i = 0; i < v.size(); ++i) mask.cells[i] = v[i] >= 1.0 - lambda ? 1 : 0;
  return mask;
}

// Per-cell interval half-width scales derived from a quantile triple,
// floored at 1e-6.
struct BandScale {
  Field delta_minus;
  Field delta_plus;

  static BandScale from_triple(const QuantileTripleGrid& t) {
    BandScale s;
    s.delta_minus = Field(t.rows(), t.cols());
    s.delta_plus = Field(t.rows(), t.cols());
    for (std::size_t i = 0; i < s.delta_minus.data.size(); ++i) {
      s.delta_minus.data[i] = std::max(t.q50().data[i] - t.q05().data[i], kScaleFloor);
      s.delta_plus.data[i] = std::max(t.q95().data[i] - t.q50().data[i], kScaleFloor);
    }
    return s;
  }
};

// Band centered at the median forecast: [q50 - lambda*delta_minus,
// q50 + lambda*delta_plus] per cell.
inline Band band_from_quantiles(const QuantileTripleGrid& triple, const BandScale& scale,
                                double lambda) {
  if (lambda < 0.0) throw error(errc::invalid_argument, "band lambda must be nonnegative");
  if (!scale.delta_minus.same_shape(triple.q50()))
    throw error(errc::dimension_mismatch, "band scale shape differs from triple");
  Field lower(triple.rows(), triple.cols());
  Field upper(triple.rows(), triple.cols());
  for (std::size_t i = 0; i < lower.data.size(); ++i) {
    lower.data[i] = triple.q50().data[i] - lambda * scale.delta_minus.data[i];
    upper.data[i] = triple.q50().data[i] + lambda * scale.delta_plus.data[i];
  }
  return Band(std::move(lower), std::move(upper));
}

}  // namespace clcp
