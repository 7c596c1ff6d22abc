#pragma once

// Brute-force reference implementations used only by tests.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracle {

/// Log-mel by direct DFT and an explicitly built filterbank (mel via the
/// base-10 form, triangles evaluated per bin from scratch).
inline std::vector<double> log_mel(const std::vector<float>& x, int window, int hop, int nfft, int bins, double fs,
                                   double f_lo, double f_hi, double offset) {
  const auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const int n_spec = nfft / 2 + 1;
  const double m_lo = mel(f_lo), m_hi = mel(f_hi);
  std::vector<double> edge(static_cast<std::size_t>(bins) + 2);
  for (int i = 0; i < bins + 2; ++i) edge[static_cast<std::size_t>(i)] = m_lo + (m_hi - m_lo) * i / (bins + 1);
  std::vector<double> out;
  if (static_cast<int>(x.size()) < window) return out;
  const int frames = 1 + (static_cast<int>(x.size()) - window) / hop;
  // Twiddles indexed by (k * i) mod nfft, so each one is exact.
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(nfft));
  for (int j = 0; j < nfft; ++j) twiddle[static_cast<std::size_t>(j)] = std::polar(1.0, -2.0 * M_PI * j / nfft);
  std::vector<double> mag(static_cast<std::size_t>(n_spec)), seg(static_cast<std::size_t>(window));
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < window; ++i)
      seg[static_cast<std::size_t>(i)] =
          0.5 * (1.0 - std::cos(2.0 * M_PI * i / window)) * static_cast<double>(x[static_cast<std::size_t>(t * hop + i)]);
    for (int k = 0; k < n_spec; ++k) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < window; ++i)
        acc += seg[static_cast<std::size_t>(i)] * twiddle[static_cast<std::size_t>((static_cast<long>(k) * i) % nfft)];
      mag[static_cast<std::size_t>(k)] = std::abs(acc);
    }
    for (int m = 0; m < bins; ++m) {
      const double l = edge[static_cast<std::size_t>(m)], c = edge[static_cast<std::size_t>(m) + 1],
                   r = edge[static_cast<std::size_t>(m) + 2];
      double e = 0.0;
      for (int k = 0; k < n_spec; ++k) {
        const double f = mel(k * fs / nfft);
        double w = 0.0;
        if (f > l && f <= c) w = (f - l) / (c - l);
        else if (f > c && f < r) w = (r - f) / (r - c);
        e += w * mag[static_cast<std::size_t>(k)];
      }
      out.push_back(std::log(e + offset));
    }
  }
  return out;
}

/// Mann-Whitney AUC by counting every positive/negative pair.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<int>& pos) {
  double num = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (pos[i] && !pos[j]) {
        ++pairs;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return num / static_cast<double>(pairs);
}

/// Confusion matrix [true][pred].
inline std::vector<std::vector<long>> confusion(const std::vector<int>& pred, const std::vector<int>& truth, int k) {
  std::vector<std::vector<long>> c(static_cast<std::size_t>(k), std::vector<long>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  return c;
}

inline double accuracy(const std::vector<std::vector<long>>& c) {
  long hit = 0, all = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) {
      all += c[i][j];
      if (i == j) hit += c[i][j];
    }
  return static_cast<double>(hit) / static_cast<double>(all);
}

/// Support-weighted F1 from the confusion matrix; zero-support classes drop out.
inline double weighted_f1(const std::vector<std::vector<long>>& c) {
  const std::size_t k = c.size();
  long total = 0;
  double acc = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    long tp = c[a][a], support = 0, predicted = 0;
    for (std::size_t b = 0; b < k; ++b) {
      support += c[a][b];
      predicted += c[b][a];
    }
    total += support;
    if (support == 0) continue;
    const double p = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    const double r = static_cast<double>(tp) / static_cast<double>(support);
    acc += static_cast<double>(support) * (p + r > 0 ? 2 * p * r / (p + r) : 0.0);
  }
  return acc / static_cast<double>(total);
}

}  // namespace oracle
