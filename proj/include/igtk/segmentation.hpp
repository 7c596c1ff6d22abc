#pragma once

// Label propagation from speakers to segments, and mean aggregation of
// segment-level class distributions into an utterance-level decision.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "igtk/core_data.hpp"
#include "igtk/error.hpp"
#include "igtk/log_mel.hpp"

namespace igtk {

struct ClassDistribution {
  std::vector<double> probs;

  std::size_t num_classes() const { return probs.size(); }
  double operator[](std::size_t k) const { return probs[k]; }

  static ClassDistribution uniform(std::size_t k) { return {std::vector<double>(k, 1.0 / static_cast<double>(k))}; }

  bool is_simplex(double tol = 1e-9) const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
  }
};

/// Index of the largest entry; ties go to the lowest index.
inline int argmax(std::span<const double> v) {
  require(!v.empty(), ErrorKind::precondition, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

struct LabeledSegment {
  LogMelPatch patch;
  int label = 0;
  std::string utterance_id;
  std::string speaker_id;
};

inline std::vector<LabeledSegment> propagate_labels(const Utterance& utt, std::vector<LogMelPatch> patches,
                                                    const Manifest& manifest, TaskId task) {
  require(manifest.has_rating(utt.speaker_id), ErrorKind::integrity,
          "speaker '" + utt.speaker_id + "' of utterance '" + utt.utterance_id + "' has no rating");
  const int label = manifest.label(utt, task);
  std::vector<LabeledSegment> out;
  out.reserve(patches.size());
  for (auto& p : patches) {
    p.utterance_id = utt.utterance_id;
    out.push_back({std::move(p), label, utt.utterance_id, utt.speaker_id});
  }
  return out;
}

struct AggregatedPrediction {
  ClassDistribution distribution;
  int predicted = 0;
};

/// Element-wise mean of the segment distributions, then argmax.
inline AggregatedPrediction aggregate(std::span<const ClassDistribution> segments) {
  require(!segments.empty(), ErrorKind::precondition, "cannot aggregate zero segments");
  const std::size_t k = segments.front().num_classes();
  std::vector<double> mean(k, 0.0);
  for (const auto& d : segments) {
    require(d.num_classes() == k, ErrorKind::shape, "segment distributions disagree on class count");
    for (std::size_t c = 0; c < k; ++c) mean[c] += d.probs[c];
  }
  const auto n = static_cast<double>(segments.size());
  for (auto& m : mean) m /= n;
  AggregatedPrediction out{{std::move(mean)}, 0};
  out.predicted = argmax(out.distribution.probs);
  return out;
}

/// Per-class counts over segments (not utterances or speakers).
inline std::vector<std::size_t> segment_class_frequencies(std::span<const LabeledSegment> segments, int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto& s : segments) {
    require(s.label >= 0 && s.label < num_classes, ErrorKind::domain, "segment label outside 0..K-1");
    ++counts[static_cast<std::size_t>(s.label)];
  }
  return counts;
}

}  // namespace igtk
