#pragma once

// Mono downmix and Kaiser-windowed sinc polyphase resampling to 16 kHz.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "igtk/error.hpp"
#include "igtk/wav.hpp"

namespace igtk {

inline constexpr int kTargetRate = 16000;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kTargetRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct ResamplerConfig {
  int taps_per_phase = 64;
  double kaiser_beta = 8.0;
  double rolloff = 0.94;  // cutoff as a fraction of the lower Nyquist rate
};

namespace detail {

// Zeroth-order modified Bessel function of the first kind.
inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace detail

/// Rational-ratio polyphase resampler. The filter table holds one row of
/// `taps_per_phase` coefficients for each of the `up` output phases.
class PolyphaseResampler {
 public:
  PolyphaseResampler(int in_rate, int out_rate, ResamplerConfig cfg = {}) : cfg_(cfg) {
    require(in_rate > 0 && out_rate > 0, ErrorKind::format, "sample rates must be positive");
    const int g = std::gcd(in_rate, out_rate);
    up_ = out_rate / g;
    down_ = in_rate / g;
    const int taps = cfg_.taps_per_phase;
    const double cutoff = cfg_.rolloff * std::min(1.0, static_cast<double>(out_rate) / in_rate);
    const double half = taps / 2.0;
    const double i0b = detail::bessel_i0(cfg_.kaiser_beta);
    table_.assign(static_cast<std::size_t>(up_) * taps, 0.0);
    for (int p = 0; p < up_; ++p) {
      const double frac = static_cast<double>(p) / up_;
      double sum = 0.0;
      for (int j = 0; j < taps; ++j) {
        // Input sample offset (base - half + 1 + j) relative to output time base + frac.
        const double tau = frac - (j - half + 1.0);
        const double x = cutoff * tau;
        const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
        const double r = tau / half;
        const double win = std::abs(r) >= 1.0 ? 0.0 : detail::bessel_i0(cfg_.kaiser_beta * std::sqrt(1.0 - r * r)) / i0b;
        const double h = cutoff * sinc * win;
        table_[static_cast<std::size_t>(p) * taps + j] = h;
        sum += h;
      }
      for (int j = 0; j < taps; ++j) table_[static_cast<std::size_t>(p) * taps + j] /= sum;
    }
  }

  std::vector<float> process(std::span<const float> x) const {
    if (up_ == down_) return {x.begin(), x.end()};
    const auto n_in = static_cast<long long>(x.size());
    const long long n_out = (n_in * up_ + down_ - 1) / down_;
    const int taps = cfg_.taps_per_phase;
    const int half = taps / 2;
    std::vector<float> y(static_cast<std::size_t>(n_out));
    for (long long n = 0; n < n_out; ++n) {
      const long long num = n * down_;
      const long long base = num / up_;
      const int phase = static_cast<int>(num % up_);
      const double* h = &table_[static_cast<std::size_t>(phase) * taps];
      double acc = 0.0;
      const long long first = base - half + 1;
      for (int j = 0; j < taps; ++j) {
        const long long k = first + j;
        if (k >= 0 && k < n_in) acc += h[j] * x[static_cast<std::size_t>(k)];
      }
      y[static_cast<std::size_t>(n)] = static_cast<float>(acc);
    }
    return y;
  }

  int up() const { return up_; }
  int down() const { return down_; }

 private:
  ResamplerConfig cfg_;
  int up_ = 1;
  int down_ = 1;
  std::vector<double> table_;
};

inline std::vector<float> downmix(const AudioBuffer& buf) {
  require(buf.channels == 1 || buf.channels == 2, ErrorKind::format,
          "unsupported channel count " + std::to_string(buf.channels));
  if (buf.channels == 1) return buf.interleaved;
  std::vector<float> mono(buf.frames());
  for (std::size_t i = 0; i < mono.size(); ++i)
    mono[i] = static_cast<float>(0.5 * (static_cast<double>(buf.interleaved[2 * i]) + buf.interleaved[2 * i + 1]));
  return mono;
}

/// Downmixes to mono (channel mean), then resamples to 16 kHz.
inline Waveform resample_to_mono_16k(const AudioBuffer& buf, ResamplerConfig cfg = {}) {
  require(buf.sample_rate >= 8000 && buf.sample_rate <= 96000, ErrorKind::format,
          "unsupported sample rate " + std::to_string(buf.sample_rate));
  auto mono = downmix(buf);
  require(!mono.empty(), ErrorKind::format, "empty audio");
  if (buf.sample_rate == kTargetRate) return {std::move(mono), kTargetRate};
  PolyphaseResampler rs(buf.sample_rate, kTargetRate, cfg);
  return {rs.process(mono), kTargetRate};
}

inline Waveform load_audio_16k(const std::filesystem::path& path) { return resample_to_mono_16k(read_wav(path)); }

}  // namespace igtk
