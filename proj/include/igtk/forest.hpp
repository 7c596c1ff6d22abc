#pragma once

// Balanced random forest: every tree is grown on a class-balanced bootstrap
// (each class resampled with replacement down to the minority count), with
// Gini splits over ceil(sqrt(D)) random candidate features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "igtk/error.hpp"
#include "igtk/random.hpp"
#include "igtk/segmentation.hpp"

namespace igtk {

struct ForestOptions {
  int n_trees = 200;
  int max_depth = 0;          // 0 = unlimited
  int min_samples_split = 2;  // nodes smaller than this become leaves
  int max_features = 0;       // 0 = ceil(sqrt(D))
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;  // leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const std::vector<double>& leaf(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].distribution;
  }

  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].feature < 0) continue;
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
    return best;
  }
};

struct ForestModel {
  int num_classes = 0;
  std::size_t dim = 0;
  ForestOptions options;
  std::vector<DecisionTree> trees;
};

/// Mean of the leaf distributions reached in every tree.
inline ClassDistribution predict_forest(const ForestModel& model, std::span<const double> x) {
  require(x.size() == model.dim, ErrorKind::shape,
          "feature dim " + std::to_string(x.size()) + " does not match forest dim " + std::to_string(model.dim));
  std::vector<double> p(static_cast<std::size_t>(model.num_classes), 0.0);
  for (const auto& t : model.trees) {
    const auto& d = t.leaf(x);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] += d[c];
  }
  for (auto& v : p) v /= static_cast<double>(model.trees.size());
  return {std::move(p)};
}

/// Draws, for every class present, as many indices (with replacement) as
/// the smallest class has members.
inline std::vector<std::size_t> balanced_bootstrap(std::span<const int> labels, int num_classes, Rng& rng) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
  std::size_t minority = labels.size();
  for (const auto& m : members)
    if (!m.empty()) minority = std::min(minority, m.size());
  std::vector<std::size_t> out;
  for (const auto& m : members) {
    if (m.empty()) continue;
    for (std::size_t j = 0; j < minority; ++j) out.push_back(m[uniform_index(rng, m.size())]);
  }
  return out;
}

namespace detail {

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes, const ForestOptions& opts, Rng& rng)
      : x_(x), y_(y), k_(static_cast<std::size_t>(num_classes)), opts_(opts), rng_(rng) {
    const auto d = static_cast<int>(x.cols());
    m_ = opts.max_features > 0 ? std::min(opts.max_features, d)
                               : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    features_.resize(static_cast<std::size_t>(d));
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree grow(std::vector<std::size_t> samples) {
    DecisionTree tree;
    tree.nodes.emplace_back();
    build(tree, 0, samples, 0);
    return tree;
  }

 private:
  std::vector<double> counts(std::span<const std::size_t> idx) const {
    std::vector<double> c(k_, 0.0);
    for (auto i : idx) c[static_cast<std::size_t>(y_[i])] += 1.0;
    return c;
  }

  static double gini(const std::vector<double>& c, double n) {
    if (n <= 0.0) return 0.0;
    double s = 0.0;
    for (double v : c) s += (v / n) * (v / n);
    return 1.0 - s;
  }

  void make_leaf(TreeNode& node, const std::vector<double>& c, double n) {
    node.feature = -1;
    node.distribution.resize(k_);
    for (std::size_t j = 0; j < k_; ++j) node.distribution[j] = c[j] / n;
  }

  void build(DecisionTree& tree, std::size_t node_index, std::vector<std::size_t>& idx, int depth) {
    const auto c = counts(idx);
    const auto n = static_cast<double>(idx.size());
    const double parent = gini(c, n);
    const bool depth_cap = opts_.max_depth > 0 && depth >= opts_.max_depth;
    if (parent <= 0.0 || depth_cap || static_cast<int>(idx.size()) < opts_.min_samples_split) {
      make_leaf(tree.nodes[node_index], c, n);
      return;
    }

    // Visit features in random order; examine m_ of them, continuing past m_
    // only while no valid split has been found.
    shuffle(features_.begin(), features_.end(), rng_);
    int best_feature = -1;
    double best_threshold = 0.0, best_impurity = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> vals(idx.size());
    std::vector<double> left(k_);
    for (std::size_t fi = 0; fi < features_.size(); ++fi) {
      if (static_cast<int>(fi) >= m_ && best_feature >= 0) break;
      const int f = features_[fi];
      for (std::size_t i = 0; i < idx.size(); ++i) vals[i] = {x_(static_cast<Eigen::Index>(idx[i]), f), y_[idx[i]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left[static_cast<std::size_t>(vals[i].second)] += 1.0;
        if (vals[i].first == vals[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        double sl = 0.0, sr = 0.0;
        for (std::size_t j = 0; j < k_; ++j) {
          sl += left[j] * left[j];
          const double r = c[j] - left[j];
          sr += r * r;
        }
        const double impurity = (nl - sl / nl) + (nr - sr / nr);  // n * weighted Gini
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
          if (best_threshold >= vals[i + 1].first) best_threshold = vals[i].first;
        }
      }
    }
    if (best_feature < 0) {
      make_leaf(tree.nodes[node_index], c, n);
      return;
    }

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x_(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const auto l = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto r = tree.nodes.size();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[node_index];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = static_cast<int>(l);
    node.right = static_cast<int>(r);
    build(tree, l, li, depth + 1);
    build(tree, r, ri, depth + 1);
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
  std::size_t k_;
  const ForestOptions& opts_;
  Rng& rng_;
  int m_ = 1;
  std::vector<int> features_;
};

}  // namespace detail

/// Trees are grown independently from seeds derived from (seed, tree index),
/// so the result does not depend on how trees are scheduled across threads.
inline ForestModel fit_forest(const Eigen::MatrixXd& x, std::span<const int> labels, int num_classes,
                              const ForestOptions& opts = {}) {
  require(x.rows() == static_cast<Eigen::Index>(labels.size()), ErrorKind::shape, "features and labels differ in length");
  require(x.rows() > 0 && x.cols() > 0, ErrorKind::precondition, "empty training data");
  require(num_classes >= 2 && opts.n_trees >= 1, ErrorKind::config, "forest needs K >= 2 and at least one tree");
  require(x.allFinite(), ErrorKind::numeric, "non-finite features");
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    require(y >= 0 && y < num_classes, ErrorKind::domain, "label outside 0..K-1");
    seen[static_cast<std::size_t>(y)] = 1;
  }
  require(std::count(seen.begin(), seen.end(), 1) >= 2, ErrorKind::precondition,
          "degenerate fit: training labels contain a single class");

  ForestModel model;
  model.num_classes = num_classes;
  model.dim = static_cast<std::size_t>(x.cols());
  model.options = opts;
  model.trees.resize(static_cast<std::size_t>(opts.n_trees));

  auto grow_one = [&](std::size_t t) {
    Rng rng(derive_seed(opts.seed, "forest-tree", t));
    auto sample = balanced_bootstrap(labels, num_classes, rng);
    detail::TreeGrower grower(x, labels, num_classes, opts, rng);
    model.trees[t] = grower.grow(std::move(sample));
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(opts.n_trees));
  if (threads <= 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) grow_one(t);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < model.trees.size(); t += threads) grow_one(t);
      });
    for (auto& th : pool) th.join();
  }
  return model;
}

}  // namespace igtk
