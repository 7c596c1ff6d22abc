#pragma once

// Numerical checks shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "igtk/cnn.hpp"
#include "igtk/logistic.hpp"
#include "igtk/random.hpp"

namespace checks {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

/// Structured toy segments: class c raises a band of bins whose position
/// depends on c, on top of per-segment noise.
inline std::vector<igtk::LabeledSegment> toy_segments(std::size_t n, int num_classes, std::uint64_t seed) {
  igtk::Rng rng(seed);
  std::vector<igtk::LabeledSegment> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(num_classes));
    igtk::LogMelPatch p;
    p.values.resize(igtk::kPatchFrames * igtk::kPatchBins);
    for (std::size_t t = 0; t < igtk::kPatchFrames; ++t)
      for (std::size_t b = 0; b < igtk::kPatchBins; ++b) {
        const bool band = b / 16 == static_cast<std::size_t>(label) % 4;
        p.values[t * igtk::kPatchBins + b] = static_cast<float>((band ? 1.5 : 0.0) + 0.5 * igtk::standard_normal(rng));
      }
    p.utterance_id = "toy" + std::to_string(i);
    const std::string id = p.utterance_id;
    out.push_back({std::move(p), label, id, "spk"});
  }
  return out;
}

/// Worst relative error between backprop and central differences over
/// `probes` randomly chosen trainable scalars of the tiny double CNN. The step
/// is 1e-6: at 1e-4 some of the ~10^5 pre-activations cross a ReLU kink.
inline double cnn_gradient_error(std::uint64_t seed, int probes = 20, igtk::CnnLoss loss = igtk::CnnLoss::sigmoid) {
  auto cfg = igtk::CnnConfig::tiny(3);
  cfg.seed = seed;
  cfg.loss = loss;
  igtk::CnnModel<double> model(cfg);
  auto batch = toy_segments(4, 3, seed + 1);
  const std::vector<double> weights = {1.0, 0.7, 1.3};
  igtk::loss_and_gradients(model, std::span<const igtk::LabeledSegment>(batch), weights);
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  igtk::Rng rng(igtk::derive_seed(seed, "probe"));
  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < model.params().size(); ++i)
    if (model.params()[i].trainable) trainable.push_back(i);
  for (int k = 0; k < probes; ++k) {
    const auto pi = trainable[igtk::uniform_index(rng, trainable.size())];
    picks.emplace_back(pi, igtk::uniform_index(rng, model.params()[pi].value.size()));
  }
  std::vector<double> analytic;
  for (auto [pi, j] : picks) analytic.push_back(model.params()[pi].grad[j]);

  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    auto [pi, j] = picks[k];
    auto& v = model.params()[pi].value[j];
    const double orig = v;
    v = orig + h;
    const double up = igtk::loss(model, std::span<const igtk::LabeledSegment>(batch), weights);
    v = orig - h;
    const double down = igtk::loss(model, std::span<const igtk::LabeledSegment>(batch), weights);
    v = orig;
    worst = std::max(worst, rel_err(analytic[k], (up - down) / (2 * h)));
  }
  return worst;
}

/// Worst relative error of the logistic objective gradient over all entries.
inline double logistic_gradient_error(std::uint64_t seed) {
  igtk::Rng rng(seed);
  const int n = 30, d = 6, k = 3;
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i % k;
    for (int j = 0; j < d; ++j) x(i, j) = igtk::standard_normal(rng);
  }
  Eigen::MatrixXd w(k, d);
  Eigen::VectorXd b(k);
  for (int c = 0; c < k; ++c) {
    b[c] = 0.3 * igtk::standard_normal(rng);
    for (int j = 0; j < d; ++j) w(c, j) = 0.5 * igtk::standard_normal(rng);
  }
  const double lambda = 0.05;
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  igtk::logistic_objective(x, y, w, b, lambda, &gw, &gb);
  const double h = 1e-5;
  double worst = 0.0;
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < d; ++j) {
      auto wp = w, wm = w;
      wp(c, j) += h;
      wm(c, j) -= h;
      const double num = (igtk::logistic_objective(x, y, wp, b, lambda) - igtk::logistic_objective(x, y, wm, b, lambda)) / (2 * h);
      worst = std::max(worst, rel_err(gw(c, j), num));
    }
    auto bp = b, bm = b;
    bp[c] += h;
    bm[c] -= h;
    const double num = (igtk::logistic_objective(x, y, w, bp, lambda) - igtk::logistic_objective(x, y, w, bm, lambda)) / (2 * h);
    worst = std::max(worst, rel_err(gb[c], num));
  }
  return worst;
}

struct OverfitResult {
  int steps_to_perfect = -1;  // -1 if never reached
  std::uint64_t hash = 0;     // parameters after the final step
};

/// Full-batch Adam on 8 toy segments with the tiny CNN; train accuracy is
/// measured in inference mode after every step.
inline OverfitResult overfit_tiny(std::uint64_t seed, int max_steps = 500, double lr = 1e-2) {
  auto cfg = igtk::CnnConfig::tiny(2);
  cfg.seed = seed;
  cfg.learning_rate = lr;
  igtk::CnnModel<float> model(cfg);
  const auto segs = toy_segments(8, 2, seed + 7);
  std::vector<igtk::LogMelPatch> patches;
  for (const auto& s : segs) patches.push_back(s.patch);
  const std::vector<double> weights = {1.0, 1.0};
  igtk::Adam adam(lr);
  OverfitResult r;
  for (int step = 1; step <= max_steps; ++step) {
    igtk::loss_and_gradients(model, std::span<const igtk::LabeledSegment>(segs), weights);
    adam.step(model.params());
    if (r.steps_to_perfect < 0) {
      const auto pred = model.predict(patches);
      bool all = true;
      for (std::size_t i = 0; i < segs.size(); ++i) all = all && igtk::argmax(pred[i].probs) == segs[i].label;
      if (all) r.steps_to_perfect = step;
    }
  }
  r.hash = model.hash();
  return r;
}

}  // namespace checks
