#pragma once

// Multinomial logistic regression over pooled embeddings: softmax
// cross-entropy plus (lambda/2)||W||^2, minimized by full-batch gradient
// descent with backtracking line search on standardized features.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "igtk/error.hpp"
#include "igtk/random.hpp"
#include "igtk/segmentation.hpp"

namespace igtk {

struct LogisticOptions {
  double l2_lambda = 1e-4;
  int max_iterations = 10000;
  double gradient_tolerance = 1e-6;  // on the infinity norm
  std::uint64_t seed = 0;
  bool random_init = false;  // zero init by default; random init is used to probe convexity
};

struct LogisticModel {
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  Eigen::MatrixXd weights;  // K x D, on standardized features
  Eigen::VectorXd bias;     // K
  double l2_lambda = 1e-4;

  int num_classes() const { return static_cast<int>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }

  /// Untrained model: identity standardization, zero parameters.
  static LogisticModel zeros(int num_classes, std::size_t dim) {
    LogisticModel m;
    m.feature_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    m.feature_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim));
    m.weights = Eigen::MatrixXd::Zero(num_classes, static_cast<Eigen::Index>(dim));
    m.bias = Eigen::VectorXd::Zero(num_classes);
    return m;
  }

  Eigen::VectorXd standardize(std::span<const double> x) const {
    require(x.size() == dim(), ErrorKind::shape,
            "feature dim " + std::to_string(x.size()) + " does not match model dim " + std::to_string(dim()));
    Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i)
      out[i] = (x[static_cast<std::size_t>(i)] - feature_mean[i]) / feature_scale[i];
    return out;
  }
};

/// Softmax of W x~ + b on the standardized input.
inline ClassDistribution predict_logistic(const LogisticModel& model, std::span<const double> x) {
  const Eigen::VectorXd z = model.weights * model.standardize(x) + model.bias;
  const double mx = z.maxCoeff();
  std::vector<double> p(static_cast<std::size_t>(z.size()));
  double sum = 0.0;
  for (Eigen::Index c = 0; c < z.size(); ++c) sum += p[static_cast<std::size_t>(c)] = std::exp(z[c] - mx);
  for (auto& v : p) v /= sum;
  return {std::move(p)};
}

/// Mean softmax cross-entropy + (lambda/2)||W||^2 on already-standardized
/// rows of `x`. Writes gradients when the output pointers are non-null.
inline double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::MatrixXd& w,
                                 const Eigen::VectorXd& b, double lambda, Eigen::MatrixXd* grad_w = nullptr,
                                 Eigen::VectorXd* grad_b = nullptr) {
  const auto n = x.rows();
  Eigen::MatrixXd z = x * w.transpose();
  z.rowwise() += b.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = z.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) sum += std::exp(z(i, c) - mx);
    const double lse = mx + std::log(sum);
    loss += lse - z(i, y[static_cast<std::size_t>(i)]);
    if (grad_w || grad_b) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) z(i, c) = std::exp(z(i, c) - lse);
      z(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad_w) *grad_w = inv_n * z.transpose() * x + lambda * w;
  if (grad_b) *grad_b = inv_n * z.colwise().sum().transpose();
  return loss * inv_n + 0.5 * lambda * w.squaredNorm();
}

struct LogisticFit {
  LogisticModel model;
  double objective = 0.0;
  double gradient_norm = 0.0;  // infinity norm at exit
  int iterations = 0;
  bool converged = false;
};

/// Per-column mean and standard deviation. Constant columns keep scale 1.
inline void fit_standardization(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
  mean = x.colwise().mean().transpose();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean[j]).square().mean();
    scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

inline LogisticFit fit_logistic(const Eigen::MatrixXd& features, std::span<const int> labels, int num_classes,
                                const LogisticOptions& opts = {}) {
  const auto n = features.rows();
  const auto d = features.cols();
  require(n == static_cast<Eigen::Index>(labels.size()), ErrorKind::shape, "features and labels differ in length");
  require(n > 0 && d > 0, ErrorKind::precondition, "empty training data");
  require(num_classes >= 2, ErrorKind::config, "logistic head needs K >= 2");
  require(features.allFinite(), ErrorKind::numeric, "non-finite features");
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    require(y >= 0 && y < num_classes, ErrorKind::domain, "label outside 0..K-1");
    seen[static_cast<std::size_t>(y)] = 1;
  }
  require(std::count(seen.begin(), seen.end(), 1) >= 2, ErrorKind::precondition,
          "degenerate fit: training labels contain a single class");

  LogisticFit fit;
  auto& m = fit.model;
  m.l2_lambda = opts.l2_lambda;
  fit_standardization(features, m.feature_mean, m.feature_scale);
  Eigen::MatrixXd x = features.rowwise() - m.feature_mean.transpose();
  x = x.array().rowwise() / m.feature_scale.transpose().array();

  m.weights = Eigen::MatrixXd::Zero(num_classes, d);
  m.bias = Eigen::VectorXd::Zero(num_classes);
  if (opts.random_init) {
    Rng rng(derive_seed(opts.seed, "logistic-init"));
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = 0.1 * standard_normal(rng);
    for (Eigen::Index i = 0; i < m.bias.size(); ++i) m.bias[i] = 0.1 * standard_normal(rng);
  }

  Eigen::MatrixXd gw, gw_prev, w_prev;
  Eigen::VectorXd gb, gb_prev, b_prev;
  double f = logistic_objective(x, labels, m.weights, m.bias, opts.l2_lambda, &gw, &gb);
  double step = 1.0;
  for (fit.iterations = 0; fit.iterations < opts.max_iterations; ++fit.iterations) {
    fit.gradient_norm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
    if (fit.gradient_norm < opts.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    // Trial step: Barzilai-Borwein estimate from the last move, then Armijo
    // backtracking.
    if (fit.iterations > 0) {
      const double sy = (m.weights - w_prev).cwiseProduct(gw - gw_prev).sum() + (m.bias - b_prev).dot(gb - gb_prev);
      const double yy = (gw - gw_prev).squaredNorm() + (gb - gb_prev).squaredNorm();
      if (sy > 0.0 && yy > 0.0) step = sy / yy;
      else step *= 2.0;
    }
    const double g2 = gw.squaredNorm() + gb.squaredNorm();
    Eigen::MatrixXd w_new;
    Eigen::VectorXd b_new;
    double f_new = f;
    for (int tries = 0; tries < 60; ++tries) {
      w_new = m.weights - step * gw;
      b_new = m.bias - step * gb;
      f_new = logistic_objective(x, labels, w_new, b_new, opts.l2_lambda);
      if (f_new <= f - 0.5 * step * g2) break;
      step *= 0.5;
    }
    if (!(f_new <= f)) break;  // no descent possible at machine precision
    w_prev = m.weights;
    b_prev = m.bias;
    gw_prev = gw;
    gb_prev = gb;
    m.weights = std::move(w_new);
    m.bias = std::move(b_new);
    f = logistic_objective(x, labels, m.weights, m.bias, opts.l2_lambda, &gw, &gb);
  }
  fit.gradient_norm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
  fit.converged = fit.converged || fit.gradient_norm < opts.gradient_tolerance;
  fit.objective = f;
  return fit;
}

}  // namespace igtk
