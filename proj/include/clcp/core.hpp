#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clcp/error.hpp"

namespace clcp {

// Absolute tolerance absorbing rounding noise in monotonicity checks.
inline constexpr double kMonotoneTol = 1e-12;

// ---------------------------------------------------------------------------
// LambdaGrid: the finite ascending search set for the nesting parameter.
// ---------------------------------------------------------------------------

class LambdaGrid {
 public:
  explicit LambdaGrid(std::vector<double> values, std::optional<double> step = std::nullopt)
      : values_(std::move(values)), step_(step) {
    if (values_.empty()) throw error(errc::empty_input, "lambda grid has no values");
    for (std::size_t j = 0; j < values_.size(); ++j) {
      if (!std::isfinite(values_[j]))
        throw error(errc::invalid_argument, "lambda grid value not finite");
      if (j > 0 && !(values_[j - 1] < values_[j]))
        throw error(errc::invalid_argument, "lambda grid not strictly increasing");
    }
    if (step_) {
      for (std::size_t j = 0; j + 1 < values_.size(); ++j) {
        double d = values_[j + 1] - values_[j];
        if (std::fabs(d - *step_) > 1e-9 * std::max(1.0, std::fabs(*step_)))
          throw error(errc::invalid_argument, "lambda grid step mismatch");
      }
    }
  }

  // Arithmetic grid covering [min, max] with common difference `step`.
  static LambdaGrid arithmetic(double min, double max, double step) {
    if (!(step > 0.0)) throw error(errc::invalid_argument, "grid step must be positive");
    if (!(min <= max)) throw error(errc::invalid_argument, "grid min exceeds max");
    std::vector<double> v;
    auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    v.reserve(count);
    for (std::size_t j = 0; j < count; ++j) v.push_back(min + static_cast<double>(j) * step);
    return LambdaGrid(std::move(v), step);
  }

  const std::vector<double>& values() const { return values_; }
  std::optional<double> step() const { return step_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

 private:
  std::vector<double> values_;
  std::optional<double> step_;
};

// ---------------------------------------------------------------------------
// ControlConfig: user targets alpha (loss level) and delta (risk level).
// ---------------------------------------------------------------------------

struct ControlConfig {
  double alpha = 0.1;
  double delta = 0.1;

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0))
      throw error(errc::invalid_argument, "delta must lie in (0,1)");
    if (!std::isfinite(alpha)) throw error(errc::invalid_argument, "alpha must be finite");
  }
};

// ---------------------------------------------------------------------------
// Small dense real field (row-major P x Q).
// ---------------------------------------------------------------------------

struct Field {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Field() = default;
  Field(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t p, std::size_t q) { return data[p * cols + q]; }
  double at(std::size_t p, std::size_t q) const { return data[p * cols + q]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Field& o) const { return rows == o.rows && cols == o.cols; }
};

// ---------------------------------------------------------------------------
// ClassProbs: class-probability estimates for one input.
// ---------------------------------------------------------------------------

class ClassProbs {
 public:
  explicit ClassProbs(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw error(errc::empty_input, "class probabilities empty");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0 && p <= 1.0))
        throw error(errc::invalid_argument, "class probability outside [0,1]");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw error(errc::invalid_argument, "class probabilities do not sum to 1");
  }

  const std::vector<double>& values() const { return probs_; }
  std::size_t num_classes() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }

 private:
  std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// ProbGrid: per-cell event probabilities.
// ---------------------------------------------------------------------------

class ProbGrid {
 public:
  explicit ProbGrid(Field values) : values_(std::move(values)) {
    if (values_.rows < 1 || values_.cols < 1)
      throw error(errc::invalid_argument, "probability grid must be at least 1x1");
    for (double p : values_.data)
      if (!(p >= 0.0 && p <= 1.0))
        throw error(errc::invalid_argument, "grid probability outside [0,1]");
  }

  const Field& values() const { return values_; }
  std::size_t rows() const { return values_.rows; }
  std::size_t cols() const { return values_.cols; }

 private:
  Field values_;
};

// ---------------------------------------------------------------------------
// GridMask: binary membership field.
// ---------------------------------------------------------------------------

struct GridMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> cells;

  GridMask() = default;
  GridMask(std::size_t r, std::size_t c, std::uint8_t fill = 0) : rows(r), cols(c), cells(r * c, fill) {}

  std::uint8_t& at(std::size_t p, std::size_t q) { return cells[p * cols + q]; }
  std::uint8_t at(std::size_t p, std::size_t q) const { return cells[p * cols + q]; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto c : cells) n += c ? 1 : 0;
    return n;
  }
  bool same_shape(const GridMask& o) const { return rows == o.rows && cols == o.cols; }

  // a subset of b: every cell set in a is set in b.
  static bool subset(const GridMask& a, const GridMask& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.cells.size(); ++i)
      if (a.cells[i] && !b.cells[i]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// QuantileTripleGrid: point-wise 0.05/0.5/0.95 quantile predictions.
// Crossed triples from an imperfect model are repaired by sorting each cell.
// ---------------------------------------------------------------------------

class QuantileTripleGrid {
 public:
  QuantileTripleGrid(Field q05, Field q50, Field q95)
      : q05_(std::move(q05)), q50_(std::move(q50)), q95_(std::move(q95)) {
    if (!q05_.same_shape(q50_) || !q50_.same_shape(q95_))
      throw error(errc::dimension_mismatch, "quantile triple fields differ in shape");
    for (std::size_t i = 0; i < q05_.data.size(); ++i) {
      double a = q05_.data[i], b = q50_.data[i], c = q95_.data[i];
      if (a > b) std::swap(a, b);
      if (b > c) std::swap(b, c);
      if (a > b) std::swap(a, b);
      q05_.data[i] = a;
      q50_.data[i] = b;
      q95_.data[i] = c;
    }
  }

  const Field& q05() const { return q05_; }
  const Field& q50() const { return q50_; }
  const Field& q95() const { return q95_; }
  std::size_t rows() const { return q50_.rows; }
  std::size_t cols() const { return q50_.cols; }

 private:
  Field q05_, q50_, q95_;
};

// ---------------------------------------------------------------------------
// Band: per-cell prediction interval endpoints.
// ---------------------------------------------------------------------------

class Band {
 public:
  Band(Field lower, Field upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (!lower_.same_shape(upper_))
      throw error(errc::dimension_mismatch, "band endpoint fields differ in shape");
    for (std::size_t i = 0; i < lower_.data.size(); ++i)
      if (lower_.data[i] > upper_.data[i])
        throw error(errc::invalid_argument, "band lower endpoint above upper");
  }

  const Field& lower() const { return lower_; }
  const Field& upper() const { return upper_; }
  std::size_t rows() const { return lower_.rows; }
  std::size_t cols() const { return lower_.cols; }

  bool covers(std::size_t p, std::size_t q, double y) const {
    return lower_.at(p, q) <= y && y <= upper_.at(p, q);
  }

 private:
  Field lower_, upper_;
};

// ---------------------------------------------------------------------------
// LabelSet: subset of {1..K}, stored sorted and deduplicated.
// ---------------------------------------------------------------------------

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<int> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    for (int k : members_)
      if (k < 1) throw error(errc::invalid_argument, "labels are 1-based");
  }

  static LabelSet full(int num_classes) {
    std::vector<int> m(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) m[static_cast<std::size_t>(k)] = k + 1;
    return LabelSet(std::move(m));
  }

  bool contains(int k) const {
    return std::binary_search(members_.begin(), members_.end(), k);
  }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<int>& members() const { return members_; }

  static bool subset(const LabelSet& a, const LabelSet& b) {
    return std::includes(b.members_.begin(), b.members_.end(), a.members_.begin(),
                         a.members_.end());
  }
  bool operator==(const LabelSet& o) const { return members_ == o.members_; }

 private:
  std::vector<int> members_;
};

// ---------------------------------------------------------------------------
// LossMatrix: per-sample loss curves over a shared grid, column-aligned
// because the lambda search scans columns.
// ---------------------------------------------------------------------------

class LossMatrix {
 public:
  // Rows are per-sample curves L_i(lambda_j); stored column-major.
  LossMatrix(const std::vector<std::vector<double>>& rows, double bound, LambdaGrid grid)
      : bound_(bound), grid_(std::move(grid)) {
    n_ = rows.size();
    if (n_ == 0) throw error(errc::empty_input, "loss matrix has no rows");
    const std::size_t m = grid_.size();
    for (const auto& r : rows)
      if (r.size() != m) throw error(errc::dimension_mismatch, "row length != grid size");
    columns_.assign(m, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m; ++j) columns_[j][i] = rows[i][j];
  }

  std::size_t num_rows() const { return n_; }
  std::size_t num_cols() const { return grid_.size(); }
  double bound() const { return bound_; }
  const LambdaGrid& grid() const { return grid_; }
  const std::vector<double>& column(std::size_t j) const { return columns_[j]; }
  double at(std::size_t i, std::size_t j) const { return columns_[j][i]; }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<double>> columns_;
  double bound_ = 1.0;
  LambdaGrid grid_{std::vector<double>{0.0}};
};

// ---------------------------------------------------------------------------
// Validators for the two nesting properties.
// ---------------------------------------------------------------------------

struct LossMatrixViolation {
  enum class Kind { inversion, out_of_range };
  Kind kind;
  std::size_t row;
  std::size_t col;        // left column of an inversion, or the offending column
  std::size_t col_next;   // right column of an inversion (== col for range issues)
  double value;           // entry at (row, col)
  double value_next;      // entry at (row, col_next)
};

// Reports every row inversion (entries[i][j] < entries[i][j+1] beyond tolerance)
// and every entry outside [0, B]. Never throws.
inline std::vector<LossMatrixViolation> validate_loss_matrix(const LossMatrix& m) {
  std::vector<LossMatrixViolation> report;
  const std::size_t n = m.num_rows(), cols = m.num_cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double v = m.at(i, j);
      if (v < 0.0 || v > m.bound()) {
        report.push_back({LossMatrixViolation::Kind::out_of_range, i, j, j, v, v});
      }
      if (j + 1 < cols) {
        double w = m.at(i, j + 1);
        if (v < w - kMonotoneTol) {
          report.push_back({LossMatrixViolation::Kind::inversion, i, j, j + 1, v, w});
        }
      }
    }
  }
  return report;
}

struct NestingViolation {
  std::size_t grid_index;       // j with C_{lambda_j} not a subset of C_{lambda_{j+1}}
  bool set_violation;           // false when only the loss inverted
  double loss_at;               // loss at lambda_j
  double loss_next;             // loss at lambda_{j+1}
};

// Evaluates a predictor family at every grid lambda for one sample and reports
// broken set nesting plus any resulting loss inversion.
template <class SetT>
std::vector<NestingViolation> check_nesting(
    const std::function<SetT(double)>& predictor,
    const std::function<double(const SetT&)>& loss, const LambdaGrid& grid) {
  std::vector<NestingViolation> report;
  SetT prev = predictor(grid[0]);
  double prev_loss = loss(prev);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    SetT cur = predictor(grid[j]);
    double cur_loss = loss(cur);
    bool nested = SetT::subset(prev, cur);
    bool loss_ok = cur_loss <= prev_loss + kMonotoneTol;
    if (!nested || !loss_ok)
      report.push_back({j - 1, !nested, prev_loss, cur_loss});
    prev = std::move(cur);
    prev_loss = cur_loss;
  }
  return report;
}

// ---------------------------------------------------------------------------
// CalibrationResult: outcome of a lambda search.
// ---------------------------------------------------------------------------

struct CalibrationResult {
  double lambda_star = 0.0;              // grid value when feasible
  double quantile_at_lambda_star = 0.0;  // achieved quantile; the minimum seen when infeasible
  bool feasible = false;
  std::size_t scanned = 0;               // grid points evaluated
};

}  // namespace clcp
