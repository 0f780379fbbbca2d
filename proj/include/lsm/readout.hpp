#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <vector>

#include "lsm/ensemble.hpp"
#include "lsm/types.hpp"

namespace lsm {

struct SampleStateVector {
  Eigen::VectorXd features;
  int label = -1;
};

enum class StateMode { FullWindow, PerSlab };

/// Concatenated per-neuron spike counts over all members.
SampleStateVector extract_state(const std::vector<SpikeRecord>& records, StateMode mode = StateMode::FullWindow,
                                int label = -1);

template <typename Scalar = double>
struct ReadoutConfig {
  Scalar l2 = Scalar(1e-4);
  Scalar learning_rate = Scalar(1);
  int max_epochs = 500;
  Scalar tolerance = Scalar(1e-6);
  bool backtracking = true;
  bool standardize = true;
};

template <typename Scalar = double>
struct ReadoutModel {
  MatrixX<Scalar> weights;  // classes x features
  VectorX<Scalar> bias;     // classes
  VectorX<Scalar> scale;    // features are divided by this before scoring
  std::vector<Scalar> loss_history;
  int epochs_run = 0;

  int classes() const { return static_cast<int>(weights.rows()); }
  int features() const { return static_cast<int>(weights.cols()); }

  template <typename Derived>
  VectorX<Scalar> scores(const Eigen::MatrixBase<Derived>& x) const {
    return weights * x.cwiseQuotient(scale) + bias;
  }

  /// Argmax with ties resolved to the lowest class index.
  template <typename Derived>
  int predict(const Eigen::MatrixBase<Derived>& x) const {
    return argmax(scores(x));
  }

  static int argmax(const VectorX<Scalar>& s) {
    int best = 0;
    for (Eigen::Index k = 1; k < s.size(); ++k)
      if (s[k] > s[best]) best = static_cast<int>(k);
    return best;
  }
};

template <typename Scalar>
struct LossGradient {
  Scalar loss;
  MatrixX<Scalar> d_weights;
  VectorX<Scalar> d_bias;
};

/// Mean softmax cross-entropy over rows of `x` plus (l2 / 2) * ||W||^2.
/// `x` is samples x features (already standardized).
template <typename Scalar>
LossGradient<Scalar> loss_and_gradient(const MatrixX<Scalar>& x, const std::vector<int>& labels,
                                       const MatrixX<Scalar>& weights, const VectorX<Scalar>& bias, Scalar l2) {
  const Eigen::Index n = x.rows();
  MatrixX<Scalar> logits = x * weights.transpose();
  logits.rowwise() += bias.transpose();
  const VectorX<Scalar> row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  MatrixX<Scalar> prob = logits.array().exp().matrix();
  const VectorX<Scalar> norm = prob.rowwise().sum();

  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss -= logits(i, labels[i]) - std::log(norm[i]);
    prob.row(i) /= norm[i];
    prob(i, labels[i]) -= Scalar(1);
  }
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  loss = loss * inv_n + Scalar(0.5) * l2 * weights.squaredNorm();

  LossGradient<Scalar> g;
  g.loss = loss;
  g.d_weights = (prob.transpose() * x) * inv_n + l2 * weights;
  g.d_bias = prob.colwise().sum().transpose() * inv_n;
  return g;
}

template <typename Scalar>
struct Standardized {
  MatrixX<Scalar> x;
  VectorX<Scalar> scale;
  std::vector<int> labels;
};

/// Stacks sample features into a matrix and divides each feature by its
/// training-set maximum (1 where the maximum is zero).
template <typename Scalar>
Standardized<Scalar> stack_samples(const std::vector<SampleStateVector>& samples, bool standardize) {
  if (samples.empty()) throw DatasetError("readout: empty sample set");
  const Eigen::Index f = samples.front().features.size();
  Standardized<Scalar> s;
  s.x.resize(static_cast<Eigen::Index>(samples.size()), f);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != f) throw DatasetError("readout: inconsistent feature lengths across samples");
    if (!samples[i].features.allFinite()) throw DatasetError("readout: non-finite features");
    s.x.row(static_cast<Eigen::Index>(i)) = samples[i].features.cast<Scalar>().transpose();
    s.labels.push_back(samples[i].label);
  }
  s.scale = VectorX<Scalar>::Ones(f);
  if (standardize) {
    s.scale = s.x.colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < f; ++j)
      if (!(s.scale[j] > 0)) s.scale[j] = Scalar(1);
    s.x = s.x * s.scale.cwiseInverse().asDiagonal();
  }
  return s;
}

/// Full-batch gradient descent from zero weights; with backtracking the
/// step satisfies the Armijo condition so the loss never increases.
template <typename Scalar = double>
ReadoutModel<Scalar> train_readout(const std::vector<SampleStateVector>& train,
                                   const ReadoutConfig<Scalar>& config = {}) {
  auto data = stack_samples<Scalar>(train, config.standardize);
  int max_label = -1;
  std::vector<bool> seen;
  for (int y : data.labels) {
    if (y < 0) throw DatasetError("train_readout: negative class label");
    max_label = std::max(max_label, y);
    if (static_cast<int>(seen.size()) <= y) seen.resize(static_cast<std::size_t>(y) + 1, false);
    seen[static_cast<std::size_t>(y)] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2)
    throw DatasetError("train_readout: at least two classes must be present");
  if (!(config.learning_rate > 0) || config.max_epochs < 0 || !(config.l2 >= 0))
    throw ConfigError("train_readout: invalid optimizer configuration");

  const int classes = max_label + 1;
  ReadoutModel<Scalar> model;
  model.weights = MatrixX<Scalar>::Zero(classes, data.x.cols());
  model.bias = VectorX<Scalar>::Zero(classes);
  model.scale = data.scale;

  Scalar step = config.learning_rate;
  auto g = loss_and_gradient(data.x, data.labels, model.weights, model.bias, config.l2);
  model.loss_history.push_back(g.loss);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const Scalar grad_sq = g.d_weights.squaredNorm() + g.d_bias.squaredNorm();
    if (std::sqrt(grad_sq) < config.tolerance) break;

    MatrixX<Scalar> w = model.weights - step * g.d_weights;
    VectorX<Scalar> b = model.bias - step * g.d_bias;
    auto next = loss_and_gradient(data.x, data.labels, w, b, config.l2);
    if (config.backtracking) {
      int halvings = 0;
      while (!(next.loss <= g.loss - Scalar(0.5) * step * grad_sq) && halvings < 60) {
        step *= Scalar(0.5);
        ++halvings;
        w = model.weights - step * g.d_weights;
        b = model.bias - step * g.d_bias;
        next = loss_and_gradient(data.x, data.labels, w, b, config.l2);
      }
      if (halvings == 60) break;
    }
    if (!std::isfinite(next.loss)) throw NumericalFault("train_readout: loss diverged");
    model.weights = std::move(w);
    model.bias = std::move(b);
    g = std::move(next);
    model.loss_history.push_back(g.loss);
    ++model.epochs_run;
    if (config.backtracking) step = std::min(step * Scalar(2), config.learning_rate * Scalar(64));
  }
  return model;
}

struct Metrics {
  double accuracy = 0;
  int correct = 0;
  int total = 0;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
};

template <typename Scalar>
Metrics evaluate(const ReadoutModel<Scalar>& model, const std::vector<SampleStateVector>& test) {
  if (test.empty()) throw DatasetError("evaluate: empty test set");
  Metrics m;
  m.confusion = Eigen::MatrixXi::Zero(model.classes(), model.classes());
  for (const auto& s : test) {
    if (s.features.size() != model.features()) throw DatasetError("evaluate: feature dimension mismatch");
    if (s.label < 0 || s.label >= model.classes()) throw DatasetError("evaluate: label outside model classes");
    const int pred = model.predict(s.features.cast<Scalar>());
    m.confusion(s.label, pred) += 1;
    m.correct += pred == s.label;
  }
  m.total = static_cast<int>(test.size());
  m.accuracy = static_cast<double>(m.correct) / m.total;
  return m;
}

/// Text format: "lsm-readout 1", "classes K features F", then scale, bias
/// and one weight row per class.
void save_readout(std::ostream& os, const ReadoutModel<double>& model);
ReadoutModel<double> load_readout(std::istream& is);

}  // namespace lsm
