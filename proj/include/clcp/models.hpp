#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "clcp/core.hpp"
#include "clcp/error.hpp"

namespace clcp {

// ---------------------------------------------------------------------------
// Multinomial logistic regression trained by full-batch gradient descent.
// Zero initialization, so an untrained model predicts uniform probabilities
// and training is deterministic.
// ---------------------------------------------------------------------------

class SoftmaxModel {
 public:
  SoftmaxModel(std::size_t num_classes, std::size_t dim)
      : K_(num_classes), d_(dim), w_(num_classes * (dim + 1), 0.0) {}

  std::size_t num_classes() const { return K_; }
  std::size_t dim() const { return d_; }
  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }

  ClassProbs predict(const std::vector<double>& x) const {
    std::vector<double> logits(K_);
    for (std::size_t k = 0; k < K_; ++k) {
      double z = w_[k * (d_ + 1) + d_];  // bias
      for (std::size_t j = 0; j < d_; ++j) z += w_[k * (d_ + 1) + j] * x[j];
      logits[k] = z;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& z : logits) {
      z = std::exp(z - mx);
      sum += z;
    }
    std::vector<double> probs(K_);
    for (std::size_t k = 0; k < K_; ++k) probs[k] = logits[k] / sum;
    // Exact renormalization so the ClassProbs invariant holds bit-tightly.
    double s2 = 0.0;
    for (double p : probs) s2 += p;
    for (auto& p : probs) p /= s2;
    return ClassProbs(std::move(probs));
  }

  int predict_label(const std::vector<double>& x) const {
    auto p = predict(x).values();
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) + 1;
  }

  double cross_entropy(const std::vector<std::vector<double>>& features,
                       const std::vector<int>& labels) const {
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      auto p = predict(features[i]);
      total -= std::log(std::max(p[static_cast<std::size_t>(labels[i] - 1)], 1e-300));
    }
    return total / static_cast<double>(features.size());
  }

 private:
  std::size_t K_, d_;
  std::vector<double> w_;
};

// Labels are 1-based in {1..K}; K is taken from the maximum label. Every
// class must appear at least once.
inline SoftmaxModel train_softmax(const std::vector<std::vector<double>>& features,
                                  const std::vector<int>& labels, double learning_rate,
                                  std::size_t epochs) {
  if (features.empty()) throw error(errc::empty_input, "no training samples");
  if (features.size() != labels.size())
    throw error(errc::dimension_mismatch, "feature/label count mismatch");
  if (!(learning_rate > 0.0))
    throw error(errc::invalid_argument, "learning rate must be positive");
  const std::size_t n = features.size();
  const std::size_t d = features.front().size();
  int K = 0;
  for (int y : labels) {
    if (y < 1) throw error(errc::invalid_argument, "labels are 1-based");
    K = std::max(K, y);
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y - 1)];
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] == 0)
      throw error(errc::degenerate_data, "class " + std::to_string(k + 1) + " absent");
  if (n < static_cast<std::size_t>(K))
    throw error(errc::degenerate_data, "fewer samples than classes");

  SoftmaxModel model(static_cast<std::size_t>(K), d);
  auto& w = model.weights();
  std::vector<double> grad(w.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto probs = model.predict(features[i]);
      for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        double coeff = probs[k] - (static_cast<int>(k) + 1 == labels[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j)
          grad[k * (d + 1) + j] += coeff * features[i][j];
        grad[k * (d + 1) + d] += coeff;
      }
    }
    for (std::size_t t = 0; t < w.size(); ++t)
      w[t] -= learning_rate * grad[t] / static_cast<double>(n);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Pinball (quantile) loss pieces, exposed for the finite-difference check.
// ---------------------------------------------------------------------------

inline double pinball_loss(double tau, double target, double prediction) {
  double r = target - prediction;
  return r >= 0.0 ? tau * r : (tau - 1.0) * r;
}

// Subgradient of pinball_loss with respect to the prediction. At the kink
// (r == 0) the element 1 - tau is returned; gradient checks stay away from
// the kink.
inline double pinball_subgradient(double tau, double target, double prediction) {
  return target > prediction ? -tau : 1.0 - tau;
}

inline double linear_predict(const std::vector<double>& w, const std::vector<double>& x) {
  double z = w.back();
  for (std::size_t j = 0; j + 1 < w.size(); ++j) z += w[j] * x[j];
  return z;
}

// Mean pinball loss of a linear predictor over a dataset.
inline double pinball_objective(const std::vector<double>& w, double tau,
                                const std::vector<std::vector<double>>& features,
                                const std::vector<double>& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i)
    total += pinball_loss(tau, targets[i], linear_predict(w, features[i]));
  return total / static_cast<double>(features.size());
}

// Analytic subgradient of pinball_objective with respect to w.
inline std::vector<double> pinball_objective_gradient(
    const std::vector<double>& w, double tau,
    const std::vector<std::vector<double>>& features, const std::vector<double>& targets) {
  std::vector<double> grad(w.size(), 0.0);
  const std::size_t d = w.size() - 1;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double g = pinball_subgradient(tau, targets[i], linear_predict(w, features[i]));
    for (std::size_t j = 0; j < d; ++j) grad[j] += g * features[i][j];
    grad[d] += g;
  }
  for (auto& v : grad) v /= static_cast<double>(features.size());
  return grad;
}

// ---------------------------------------------------------------------------
// Linear quantile regressor with one head per target level.
// ---------------------------------------------------------------------------

struct QuantileTriple {
  double q05 = 0.0, q50 = 0.0, q95 = 0.0;
};

class QuantileModel {
 public:
  explicit QuantileModel(std::size_t dim)
      : d_(dim), w05_(dim + 1, 0.0), w50_(dim + 1, 0.0), w95_(dim + 1, 0.0) {}

  std::size_t dim() const { return d_; }
  std::vector<double>& w05() { return w05_; }
  std::vector<double>& w50() { return w50_; }
  std::vector<double>& w95() { return w95_; }
  const std::vector<double>& w05() const { return w05_; }
  const std::vector<double>& w50() const { return w50_; }
  const std::vector<double>& w95() const { return w95_; }

  QuantileTriple predict(const std::vector<double>& x) const {
    return {linear_predict(w05_, x), linear_predict(w50_, x), linear_predict(w95_, x)};
  }

 private:
  std::size_t d_;
  std::vector<double> w05_, w50_, w95_;
};

inline QuantileModel train_quantile_regressor(const std::vector<std::vector<double>>& features,
                                              const std::vector<double>& targets,
                                              double learning_rate, std::size_t epochs) {
  if (features.empty()) throw error(errc::empty_input, "no training samples");
  if (features.size() != targets.size())
    throw error(errc::dimension_mismatch, "feature/target count mismatch");
  if (!(learning_rate > 0.0))
    throw error(errc::invalid_argument, "learning rate must be positive");
  const std::size_t d = features.front().size();
  QuantileModel model(d);
  const double levels[3] = {0.05, 0.5, 0.95};
  std::vector<double>* heads[3] = {&model.w05(), &model.w50(), &model.w95()};
  for (int h = 0; h < 3; ++h) {
    auto& w = *heads[h];
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      auto grad = pinball_objective_gradient(w, levels[h], features, targets);
      for (std::size_t t = 0; t < w.size(); ++t) w[t] -= learning_rate * grad[t];
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Versioned JSON persistence.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const SoftmaxModel& m) {
  return {{"format", "clcp-model"},
          {"version", 1},
          {"type", "softmax"},
          {"num_classes", m.num_classes()},
          {"dim", m.dim()},
          {"weights", m.weights()}};
}

inline nlohmann::json to_json(const QuantileModel& m) {
  return {{"format", "clcp-model"},
          {"version", 1},
          {"type", "quantile"},
          {"dim", m.dim()},
          {"levels", {0.05, 0.5, 0.95}},
          {"w05", m.w05()},
          {"w50", m.w50()},
          {"w95", m.w95()}};
}

inline SoftmaxModel softmax_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "clcp-model" || j.value("type", "") != "softmax")
    throw error(errc::parse_error, "not a softmax model file");
  SoftmaxModel m(j.at("num_classes").get<std::size_t>(), j.at("dim").get<std::size_t>());
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != m.weights().size())
    throw error(errc::dimension_mismatch, "weight count does not match dimensions");
  m.weights() = std::move(w);
  return m;
}

inline QuantileModel quantile_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "clcp-model" || j.value("type", "") != "quantile")
    throw error(errc::parse_error, "not a quantile model file");
  QuantileModel m(j.at("dim").get<std::size_t>());
  auto w05 = j.at("w05").get<std::vector<double>>();
  auto w50 = j.at("w50").get<std::vector<double>>();
  auto w95 = j.at("w95").get<std::vector<double>>();
  if (w05.size() != m.dim() + 1 || w50.size() != m.dim() + 1 || w95.size() != m.dim() + 1)
    throw error(errc::dimension_mismatch, "weight count does not match dimensions");
  m.w05() = std::move(w05);
  m.w50() = std::move(w50);
  m.w95() = std::move(w95);
  return m;
}

template <class Model>
void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error(errc::invalid_argument, "cannot open " + path);
  out << to_json(m).dump(2) << "\n";
}

}  // namespace clcp
