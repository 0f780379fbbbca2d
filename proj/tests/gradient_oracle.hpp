#pragma once

// Central finite-difference check of the readout loss gradient. The loss is
// recomputed here from scratch rather than through the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include "lsm/readout.hpp"
#include "lsm/rng.hpp"

namespace oracle {

inline double softmax_loss(const Eigen::MatrixXd& x, const std::vector<int>& labels, const Eigen::MatrixXd& w,
                           const Eigen::VectorXd& b, double l2) {
  long double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<long double> z(static_cast<std::size_t>(w.rows()));
    long double zmax = -INFINITY;
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      long double s = b[k];
      for (Eigen::Index j = 0; j < x.cols(); ++j) s += static_cast<long double>(w(k, j)) * x(i, j);
      z[static_cast<std::size_t>(k)] = s;
      zmax = std::max(zmax, s);
    }
    long double norm = 0;
    for (auto s : z) norm += std::exp(s - zmax);
    total += -(z[static_cast<std::size_t>(labels[i])] - zmax - std::log(norm));
  }
  long double reg = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) reg += static_cast<long double>(w(i)) * w(i);
  return static_cast<double>(total / x.rows() + 0.5L * l2 * reg);
}

struct GradientCheck {
  double relative_error = 0;
};

/// ||analytic - numeric|| / max(||analytic||, ||numeric||) over all weights and biases.
inline GradientCheck check_gradient(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                    const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double l2,
                                    double h = 1e-5) {
  const auto g = lsm::loss_and_gradient<double>(x, labels, w, b, l2);
  double diff = 0, na = 0, nn = 0;
  auto accumulate = [&](double analytic, double numeric) {
    diff += (analytic - numeric) * (analytic - numeric);
    na += analytic * analytic;
    nn += numeric * numeric;
  };
  for (Eigen::Index k = 0; k < w.rows(); ++k)
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      Eigen::MatrixXd wp = w, wm = w;
      wp(k, j) += h;
      wm(k, j) -= h;
      accumulate(g.d_weights(k, j), (softmax_loss(x, labels, wp, b, l2) - softmax_loss(x, labels, wm, b, l2)) / (2 * h));
    }
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    Eigen::VectorXd bp = b, bm = b;
    bp[k] += h;
    bm[k] -= h;
    accumulate(g.d_bias[k], (softmax_loss(x, labels, w, bp, l2) - softmax_loss(x, labels, w, bm, l2)) / (2 * h));
  }
  return {std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-300})};
}

struct RandomProblem {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

inline RandomProblem random_problem(lsm::Rng& rng, int samples, int features, int classes) {
  RandomProblem p;
  p.x.resize(samples, features);
  for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x(i) = lsm::uniform01(rng);
  for (int i = 0; i < samples; ++i) p.labels.push_back(static_cast<int>(lsm::uniform_index(rng, classes)));
  p.w.resize(classes, features);
  for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w(i) = 2 * lsm::uniform01(rng) - 1;
  p.b.resize(classes);
  for (int k = 0; k < classes; ++k) p.b[k] = 2 * lsm::uniform01(rng) - 1;
  return p;
}

}  // namespace oracle
