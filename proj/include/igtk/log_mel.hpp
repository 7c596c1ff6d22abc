#pragma once

// Log-mel frontends: the CNN variant (25 ms / 10 ms, 64 bins, 96-frame
// patches) and the ASR variant (32 ms / 10 ms, 128 bins, 4-frame stacking
// with 3x subsampling).

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "igtk/binary_io.hpp"
#include "igtk/error.hpp"
#include "igtk/fft.hpp"
#include "igtk/resample.hpp"

namespace igtk {

enum class FrontendVariant { cnn, asr };

struct FrontendConfig {
  int sample_rate = kTargetRate;
  int window_length = 400;  // samples
  int hop_length = 160;
  int fft_size = 512;
  int num_bins = 64;
  double mel_low = 125.0;
  double mel_high = 7500.0;
  double log_offset = 0.01;

  static FrontendConfig cnn() { return {}; }

  // 1024-point FFT: with 128 bands over 125-7500 Hz the lowest triangles are
  // ~29 Hz wide, narrower than a 512-point bin (31.25 Hz).
  static FrontendConfig asr() {
    FrontendConfig c;
    c.window_length = 512;
    c.fft_size = 1024;
    c.num_bins = 128;
    return c;
  }

  static FrontendConfig for_variant(FrontendVariant v) { return v == FrontendVariant::cnn ? cnn() : asr(); }

  double silence_level() const { return std::log(log_offset); }

  void validate() const {
    require(sample_rate > 0 && window_length > 0 && hop_length > 0 && num_bins > 0, ErrorKind::config,
            "frontend sizes must be positive");
    require(mel_low >= 0.0 && mel_low < mel_high && mel_high < sample_rate / 2.0, ErrorKind::config,
            "need 0 <= mel_low < mel_high < sample_rate/2");
    require(fft_size >= window_length, ErrorKind::config, "fft_size must cover the window");
    require(log_offset > 0.0, ErrorKind::config, "log_offset must be positive");
  }
};

inline double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

/// Row-major B x (fft_size/2+1) triangular filterbank; band edges are
/// equally spaced on the mel scale between mel_low and mel_high.
inline std::vector<double> mel_filterbank(const FrontendConfig& cfg) {
  cfg.validate();
  const int n_spec = cfg.fft_size / 2 + 1;
  const int b = cfg.num_bins;
  const double lo = hz_to_mel(cfg.mel_low);
  const double hi = hz_to_mel(cfg.mel_high);
  std::vector<double> edges(static_cast<std::size_t>(b) + 2);
  for (int i = 0; i < b + 2; ++i) edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (b + 1);

  std::vector<double> fb(static_cast<std::size_t>(b) * n_spec, 0.0);
  for (int k = 0; k < n_spec; ++k) {
    const double mel = hz_to_mel(static_cast<double>(k) * cfg.sample_rate / cfg.fft_size);
    for (int m = 0; m < b; ++m) {
      const double left = edges[static_cast<std::size_t>(m)];
      const double center = edges[static_cast<std::size_t>(m) + 1];
      const double right = edges[static_cast<std::size_t>(m) + 2];
      double w = 0.0;
      if (mel > left && mel <= center) w = (mel - left) / (center - left);
      else if (mel > center && mel < right) w = (right - mel) / (right - center);
      fb[static_cast<std::size_t>(m) * n_spec + k] = w;
    }
  }
  return fb;
}

/// Periodic Hann window.
inline std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / length);
  return w;
}

struct LogMelFrames {
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::vector<float> values;  // row-major num_frames x num_bins
  float silence_level = static_cast<float>(std::log(0.01));

  float operator()(std::size_t t, std::size_t b) const { return values[t * num_bins + b]; }
  std::span<const float> frame(std::size_t t) const { return {values.data() + t * num_bins, num_bins}; }
};

inline std::size_t frame_count(std::size_t num_samples, int window, int hop) {
  if (num_samples < static_cast<std::size_t>(window)) return 0;
  return 1 + (num_samples - static_cast<std::size_t>(window)) / static_cast<std::size_t>(hop);
}

/// Reusable frontend: owns the FFT plan, window and filterbank.
class LogMelFrontend {
 public:
  explicit LogMelFrontend(FrontendConfig cfg = FrontendConfig::cnn())
      : cfg_(cfg), fft_((cfg.validate(), static_cast<std::size_t>(cfg.fft_size))),
        window_(hann_window(cfg.window_length)), filterbank_(mel_filterbank(cfg)) {
    // Only the nonzero span of each triangle is visited per frame.
    const int n_spec = cfg_.fft_size / 2 + 1;
    spans_.resize(static_cast<std::size_t>(cfg_.num_bins));
    for (int m = 0; m < cfg_.num_bins; ++m) {
      int first = n_spec, last = -1;
      for (int k = 0; k < n_spec; ++k) {
        if (filterbank_[static_cast<std::size_t>(m) * n_spec + k] != 0.0) {
          first = std::min(first, k);
          last = k;
        }
      }
      spans_[static_cast<std::size_t>(m)] = {first, last};
    }
  }

  const FrontendConfig& config() const { return cfg_; }
  const std::vector<double>& filterbank() const { return filterbank_; }

  LogMelFrames operator()(std::span<const float> samples) const {
    const std::size_t t_count = frame_count(samples.size(), cfg_.window_length, cfg_.hop_length);
    require(t_count >= 1, ErrorKind::precondition,
            "waveform shorter than one analysis window (" + std::to_string(samples.size()) + " < " +
                std::to_string(cfg_.window_length) + " samples); pad first");
    const auto n_fft = static_cast<std::size_t>(cfg_.fft_size);
    const std::size_t n_spec = n_fft / 2 + 1;
    const auto n_bins = static_cast<std::size_t>(cfg_.num_bins);

    LogMelFrames out;
    out.num_frames = t_count;
    out.num_bins = n_bins;
    out.silence_level = static_cast<float>(cfg_.silence_level());
    out.values.resize(t_count * n_bins);

    std::vector<std::complex<double>> buf(n_fft);
    std::vector<double> mag(n_spec);
    for (std::size_t t = 0; t < t_count; ++t) {
      const std::size_t start = t * static_cast<std::size_t>(cfg_.hop_length);
      std::fill(buf.begin(), buf.end(), std::complex<double>{});
      for (std::size_t i = 0; i < window_.size(); ++i) buf[i] = static_cast<double>(samples[start + i]) * window_[i];
      fft_.forward(buf);
      for (std::size_t k = 0; k < n_spec; ++k) mag[k] = std::abs(buf[k]);
      for (std::size_t m = 0; m < n_bins; ++m) {
        const auto [first, last] = spans_[m];
        double e = 0.0;
        for (int k = first; k <= last; ++k) e += filterbank_[m * n_spec + static_cast<std::size_t>(k)] * mag[static_cast<std::size_t>(k)];
        out.values[t * n_bins + m] = static_cast<float>(std::log(e + cfg_.log_offset));
      }
    }
    return out;
  }

  LogMelFrames operator()(const Waveform& w) const {
    require(w.sample_rate == cfg_.sample_rate, ErrorKind::precondition, "waveform must be resampled to the frontend rate");
    return (*this)(std::span<const float>(w.samples));
  }

 private:
  FrontendConfig cfg_;
  Fft fft_;
  std::vector<double> window_;
  std::vector<double> filterbank_;
  std::vector<std::pair<int, int>> spans_;
};

inline LogMelFrames log_mel(const Waveform& w, FrontendVariant variant) {
  return LogMelFrontend(FrontendConfig::for_variant(variant))(w);
}

// ---------------------------------------------------------------------------
// Patches

inline constexpr std::size_t kPatchFrames = 96;
inline constexpr std::size_t kPatchBins = 64;

struct LogMelPatch {
  std::vector<float> values;  // row-major 96 x 64
  std::string utterance_id;
  std::size_t segment_index = 0;

  float operator()(std::size_t t, std::size_t b) const { return values[t * kPatchBins + b]; }
};

/// Non-overlapping 96-frame blocks. The trailing partial block is dropped
/// unless it is the only block, in which case it is padded at silence level.
inline std::vector<LogMelPatch> make_patches(const LogMelFrames& frames, const std::string& utterance_id = {}) {
  require(frames.num_bins == kPatchBins, ErrorKind::shape, "patches need 64-bin frames");
  require(frames.num_frames >= 1, ErrorKind::precondition, "no frames");
  std::vector<LogMelPatch> out;
  const std::size_t full = frames.num_frames / kPatchFrames;
  for (std::size_t p = 0; p < full; ++p) {
    LogMelPatch patch;
    patch.utterance_id = utterance_id;
    patch.segment_index = p;
    const auto first = frames.values.begin() + static_cast<std::ptrdiff_t>(p * kPatchFrames * kPatchBins);
    patch.values.assign(first, first + static_cast<std::ptrdiff_t>(kPatchFrames * kPatchBins));
    out.push_back(std::move(patch));
  }
  if (full == 0) {
    LogMelPatch patch;
    patch.utterance_id = utterance_id;
    patch.values.assign(kPatchFrames * kPatchBins, frames.silence_level);
    std::copy(frames.values.begin(), frames.values.end(), patch.values.begin());
    out.push_back(std::move(patch));
  }
  return out;
}

/// Stacks 4 consecutive frames (t..t+3) and keeps every third stacked row.
inline std::vector<std::vector<float>> stack_subsample_asr(const LogMelFrames& frames, std::size_t stack = 4,
                                                           std::size_t stride = 3) {
  require(frames.num_frames >= stack, ErrorKind::precondition,
          "need at least " + std::to_string(stack) + " frames to stack, got " + std::to_string(frames.num_frames));
  std::vector<std::vector<float>> rows;
  for (std::size_t t = 0; t + stack <= frames.num_frames; t += stride) {
    std::vector<float> row;
    row.reserve(stack * frames.num_bins);
    for (std::size_t j = 0; j < stack; ++j) {
      const auto f = frames.frame(t + j);
      row.insert(row.end(), f.begin(), f.end());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Feature cache: "IGF1", u32 T, u32 B, T*B little-endian f32, row-major.

inline void write_features(std::ostream& out, const LogMelFrames& frames) {
  binary::put_magic(out, "IGF1");
  binary::put_u32(out, static_cast<std::uint32_t>(frames.num_frames));
  binary::put_u32(out, static_cast<std::uint32_t>(frames.num_bins));
  for (float v : frames.values) binary::put_f32(out, v);
}

inline LogMelFrames read_features(std::istream& in, double log_offset = 0.01) {
  binary::expect_magic(in, "IGF1");
  LogMelFrames f;
  f.num_frames = binary::get_u32(in);
  f.num_bins = binary::get_u32(in);
  require(f.num_frames >= 1 && f.num_bins >= 1 && f.num_frames * f.num_bins < (std::size_t{1} << 32), ErrorKind::format,
          "feature cache has invalid shape");
  f.values.resize(f.num_frames * f.num_bins);
  for (auto& v : f.values) v = binary::get_f32(in);
  f.silence_level = static_cast<float>(std::log(log_offset));
  return f;
}

inline void write_features(const std::filesystem::path& path, const LogMelFrames& frames) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  write_features(out, frames);
}

inline LogMelFrames read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return read_features(in);
}

}  // namespace igtk
