#pragma once

// Classification metrics: one-vs-rest ROC AUC (Mann-Whitney), support-weighted
// F1 and accuracy.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "igtk/error.hpp"
#include "igtk/segmentation.hpp"

namespace igtk {

/// Mann-Whitney AUC for one binary problem, ties counted as one half.
/// Returns nullopt unless there is at least one positive and one negative.
inline std::optional<double> binary_auc(std::span<const double> scores, std::span<const int> is_positive) {
  require(scores.size() == is_positive.size(), ErrorKind::shape, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk tied blocks in ascending score order. Counting in integers (twice the
  // U statistic) keeps the result exact.
  std::uint64_t negatives_below = 0;
  std::uint64_t twice_u = 0;
  std::uint64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (is_positive[order[j]]) ++pos;
      else ++neg;
      ++j;
    }
    twice_u += pos * (2 * negatives_below + neg);
    negatives_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct AucResult {
  std::vector<std::optional<double>> per_class;  // nullopt for classes without both positives and negatives
  double mean = 0.0;
  std::size_t computable = 0;
};

/// One-vs-rest AUC using each class's probability as its ranking score;
/// the mean is unweighted over the computable classes.
inline AucResult auc_ovr(std::span<const ClassDistribution> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), ErrorKind::shape, "scores and labels differ in length");
  require(!scores.empty(), ErrorKind::evaluation, "no predictions to score");
  const std::size_t k = scores.front().num_classes();
  AucResult out;
  out.per_class.resize(k);
  std::vector<double> s(scores.size());
  std::vector<int> pos(scores.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      require(scores[i].num_classes() == k, ErrorKind::shape, "ragged score vectors");
      s[i] = scores[i].probs[c];
      pos[i] = labels[i] == static_cast<int>(c);
    }
    out.per_class[c] = binary_auc(s, pos);
    if (out.per_class[c]) {
      sum += *out.per_class[c];
      ++out.computable;
    }
  }
  require(out.computable > 0, ErrorKind::evaluation, "no class has both positive and negative examples");
  out.mean = sum / static_cast<double>(out.computable);
  return out;
}

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
  require(preds.size() == labels.size(), ErrorKind::shape, "predictions and labels differ in length");
  require(!preds.empty(), ErrorKind::evaluation, "accuracy of empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Per-class precision/recall/F1. Empty denominators yield 0.
inline std::vector<ClassScores> per_class_scores(std::span<const int> preds, std::span<const int> labels, int num_classes) {
  require(preds.size() == labels.size(), ErrorKind::shape, "predictions and labels differ in length");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(k, 0), pred_count(k, 0), true_count(k, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i] >= 0 && preds[i] < num_classes && labels[i] >= 0 && labels[i] < num_classes, ErrorKind::domain,
            "class index outside 0..K-1");
    ++pred_count[static_cast<std::size_t>(preds[i])];
    ++true_count[static_cast<std::size_t>(labels[i])];
    if (preds[i] == labels[i]) ++tp[static_cast<std::size_t>(labels[i])];
  }
  std::vector<ClassScores> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& s = out[c];
    s.support = true_count[c];
    s.precision = pred_count[c] ? static_cast<double>(tp[c]) / static_cast<double>(pred_count[c]) : 0.0;
    s.recall = true_count[c] ? static_cast<double>(tp[c]) / static_cast<double>(true_count[c]) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  return out;
}

/// Support-weighted mean of per-class F1. Classes with no true instances
/// carry zero weight.
inline double f1_weighted(std::span<const int> preds, std::span<const int> labels, int num_classes) {
  require(!preds.empty(), ErrorKind::evaluation, "F1 of empty input");
  const auto scores = per_class_scores(preds, labels, num_classes);
  double num = 0.0;
  std::size_t total = 0;
  for (const auto& s : scores) {
    num += s.f1 * static_cast<double>(s.support);
    total += s.support;
  }
  return num / static_cast<double>(total);
}

inline double f1_weighted(std::span<const int> preds, std::span<const int> labels) {
  int k = 0;
  for (int p : preds) k = std::max(k, p + 1);
  for (int l : labels) k = std::max(k, l + 1);
  return f1_weighted(preds, labels, k);
}

/// F1 of a label-homogeneous group with the group's own label as positive:
/// precision is 1 whenever anything is predicted correctly, so F1 = 2a/(1+a).
inline double homogeneous_group_f1(double accuracy) { return accuracy > 0.0 ? 2.0 * accuracy / (1.0 + accuracy) : 0.0; }

}  // namespace igtk
