#pragma once

// Seeded synthetic corpus: phrase templates built from voiced/unvoiced
// "syllables" (pulse train or noise through formant resonators), per-speaker
// timbre, and severity-graded degradation (time jitter, low-pass filtering,
// additive noise at a target SNR).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "igtk/core_data.hpp"
#include "igtk/error.hpp"
#include "igtk/random.hpp"
#include "igtk/resample.hpp"
#include "igtk/wav.hpp"

namespace igtk {

struct PhraseSpec {
  int phrase_id = 0;
  std::string text;
  double duration = 1.0;  // seconds
};

struct Degradation {
  double snr_db = 30.0;
  double lowpass_hz = 7600.0;
  double jitter_ms = 0.0;
};

struct SynthConfig {
  int n_speakers = 100;
  std::vector<PhraseSpec> phrases;
  std::array<double, kNumRatings> severity_distribution = {0.25, 0.25, 0.20, 0.15, 0.15};
  std::array<Degradation, kNumRatings> profile = {{
      {24.0, 6400.0, 0.0},
      {16.0, 5000.0, 3.0},
      {10.0, 3800.0, 6.0},
      {5.0, 2800.0, 10.0},
      {1.0, 2000.0, 14.0},
  }};
  double speaker_snr_sd_db = 3.0;    // per-speaker offset, shared across that speaker's phrases
  double speaker_lowpass_sd = 0.12;  // per-speaker log-scale offset of the cutoff
  double noise_modulation_db = 6.0;  // spread of the 100 ms noise-level blocks
  std::uint64_t seed = 42;
  int sample_rate = kTargetRate;

  static std::vector<PhraseSpec> default_phrases();

  static SynthConfig defaults(int n_speakers = 100, std::uint64_t seed = 42) {
    SynthConfig c;
    c.n_speakers = n_speakers;
    c.seed = seed;
    c.phrases = default_phrases();
    return c;
  }

  void validate() const {
    require(n_speakers >= 1, ErrorKind::config, "n_speakers must be >= 1");
    require(!phrases.empty(), ErrorKind::config, "no phrases configured");
    for (const auto& p : phrases) {
      require(p.duration > 0.0, ErrorKind::config, "phrase durations must be positive");
      require(p.phrase_id >= 1, ErrorKind::config, "phrase ids start at 1");
    }
    double total = 0.0;
    for (double p : severity_distribution) {
      require(p >= 0.0, ErrorKind::config, "severity distribution must be nonnegative");
      total += p;
    }
    require(std::abs(total - 1.0) < 1e-9, ErrorKind::config, "severity distribution must sum to 1");
    for (int s = 1; s < kNumRatings; ++s) {
      require(profile[static_cast<std::size_t>(s)].snr_db < profile[static_cast<std::size_t>(s) - 1].snr_db,
              ErrorKind::config, "snr_db must strictly decrease with severity");
      require(profile[static_cast<std::size_t>(s)].lowpass_hz < profile[static_cast<std::size_t>(s) - 1].lowpass_hz,
              ErrorKind::config, "lowpass_hz must strictly decrease with severity");
    }
    for (const auto& d : profile)
      require(d.lowpass_hz > 0.0 && d.jitter_ms >= 0.0, ErrorKind::config, "invalid degradation entry");
  }
};

/// 29 entries: single words (0.5-0.9 s), short phrases and long sentences
/// (up to 4 s).
inline std::vector<PhraseSpec> SynthConfig::default_phrases() {
  const std::vector<std::pair<std::string, double>> items = {
      {"Pebble.", 0.50},
      {"Kettle.", 0.55},
      {"Ladder.", 0.55},
      {"Sunday.", 0.60},
      {"Window.", 0.60},
      {"Marble.", 0.65},
      {"Pocket.", 0.65},
      {"Thimble.", 0.70},
      {"Garden.", 0.75},
      {"Umbrella.", 0.85},
      {"Good morning.", 1.00},
      {"Turn it off.", 1.10},
      {"What time is it?", 1.20},
      {"Call my sister.", 1.30},
      {"Open the front door.", 1.50},
      {"I would like some water.", 1.70},
      {"Please turn up the volume.", 1.80},
      {"The kettle is on the stove.", 2.00},
      {"Set an alarm for seven tomorrow.", 2.20},
      {"My brother plays the drums on Sundays.", 2.40},
      {"The yellow boat drifted slowly down the river.", 2.70},
      {"She keeps her marbles in a small wooden box.", 2.80},
      {"We planted tomatoes and beans along the garden fence.", 3.00},
      {"The library closes early on the first Friday of every month.", 3.20},
      {"A gentle breeze carried the smell of fresh bread across the street.", 3.40},
      {"Remember to water the plants before you leave for the weekend.", 3.50},
      {"The old clock in the hallway chimes loudly every hour of the night.", 3.70},
      {"Bright red kites danced above the crowded beach on a warm summer day.", 3.85},
      {"After the long meeting everyone gathered in the kitchen for coffee and cake.", 4.00},
  };
  std::vector<PhraseSpec> out;
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back({static_cast<int>(i) + 1, items[i].first, items[i].second});
  return out;
}

struct SpeakerProfile {
  std::string speaker_id;
  int rating = 0;
  double f0_scale = 1.0;
  double formant_scale = 1.0;
  double gain = 1.0;
  double snr_offset_db = 0.0;
  double lowpass_scale = 1.0;
};

struct RenderedUtterance {
  std::vector<float> reference;  // speaker template after jitter and low-pass, before noise
  std::vector<float> output;     // reference + noise, peak-normalized with the same gain
  double target_snr_db = 0.0;
};

namespace synth_detail {

struct Syllable {
  double start = 0.0, length = 0.0;  // seconds
  double f0_start = 120.0, f0_end = 120.0;
  std::array<double, 3> formants{};
  bool voiced = true;
  double level = 1.0;
};

/// Two-pole resonator at `freq` with bandwidth `bw` (Hz).
struct Resonator {
  double a1 = 0.0, a2 = 0.0, g = 0.0, y1 = 0.0, y2 = 0.0;
  void set(double freq, double bw, double fs) {
    const double r = std::exp(-M_PI * bw / fs);
    a1 = 2.0 * r * std::cos(2.0 * M_PI * freq / fs);
    a2 = -r * r;
    g = 1.0 - r;
  }
  double step(double x) {
    const double y = g * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double z1 = 0, z2 = 0;
  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

/// 4th-order Butterworth low-pass as two bilinear-transformed biquads.
inline std::vector<float> lowpass(const std::vector<float>& x, double cutoff, double fs) {
  if (cutoff >= 0.49 * fs) return x;
  const double k = std::tan(M_PI * cutoff / fs);
  std::array<Biquad, 2> stages;
  const std::array<double, 2> q = {0.5411961001461970, 1.3065629648763766};
  for (std::size_t i = 0; i < 2; ++i) {
    const double norm = 1.0 / (1.0 + k / q[i] + k * k);
    auto& s = stages[i];
    s.b0 = k * k * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q[i] + k * k) * norm;
  }
  std::vector<float> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n)
    y[n] = static_cast<float>(stages[1].step(stages[0].step(x[n])));
  return y;
}

inline std::vector<Syllable> phrase_template(const PhraseSpec& phrase, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "phrase", static_cast<std::uint64_t>(phrase.phrase_id)));
  const double lead = 0.05;
  const double body = std::max(0.1, phrase.duration - 2.0 * lead);
  const int n = std::max(1, static_cast<int>(std::lround(body * 4.0)));
  std::vector<Syllable> out;
  double t = lead;
  const double slot = body / n;
  for (int i = 0; i < n; ++i) {
    Syllable s;
    const double gap = 0.02 + 0.03 * uniform01(rng);
    s.start = t;
    s.length = std::max(0.05, slot - gap);
    s.f0_start = 100.0 + 60.0 * uniform01(rng);
    s.f0_end = s.f0_start * (0.8 + 0.4 * uniform01(rng));
    s.formants = {300.0 + 500.0 * uniform01(rng), 900.0 + 1400.0 * uniform01(rng), 2400.0 + 800.0 * uniform01(rng)};
    s.voiced = uniform01(rng) < 0.8;
    s.level = 0.6 + 0.4 * uniform01(rng);
    out.push_back(s);
    t += slot;
  }
  return out;
}

}  // namespace synth_detail

/// Deterministic per-speaker ratings (largest-remainder quotas over the
/// severity distribution, then shuffled) and timbre/offset draws.
inline std::vector<SpeakerProfile> synth_speakers(const SynthConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_speakers);
  std::array<std::size_t, kNumRatings> quota{};
  std::array<double, kNumRatings> rem{};
  std::size_t given = 0;
  for (std::size_t s = 0; s < kNumRatings; ++s) {
    const double exact = cfg.severity_distribution[s] * static_cast<double>(n);
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    rem[s] = exact - static_cast<double>(quota[s]);
    given += quota[s];
  }
  while (given < n) {
    const auto s = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
    ++quota[s];
    rem[s] = -1.0;
    ++given;
  }
  std::vector<int> ratings;
  for (std::size_t s = 0; s < kNumRatings; ++s) ratings.insert(ratings.end(), quota[s], static_cast<int>(s));
  Rng order_rng(derive_seed(cfg.seed, "synth-ratings"));
  shuffle(ratings.begin(), ratings.end(), order_rng);

  std::vector<SpeakerProfile> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(cfg.seed, "speaker", i));
    auto& p = out[i];
    char buf[32];
    std::snprintf(buf, sizeof buf, "spk%04zu", i + 1);
    p.speaker_id = buf;
    p.rating = ratings[i];
    p.f0_scale = std::exp(0.25 * standard_normal(rng));
    p.formant_scale = std::exp(0.06 * standard_normal(rng));
    p.gain = std::exp(0.3 * standard_normal(rng));
    p.snr_offset_db = cfg.speaker_snr_sd_db * standard_normal(rng);
    p.lowpass_scale = std::exp(cfg.speaker_lowpass_sd * standard_normal(rng));
  }
  return out;
}

/// Renders one utterance of `phrase` by `speaker` at `severity`. Random draws
/// depend on (seed, speaker, phrase) only, so varying `severity` changes the
/// degradation strength and nothing else.
inline RenderedUtterance render_utterance(const SynthConfig& cfg, const SpeakerProfile& speaker, const PhraseSpec& phrase,
                                          int severity) {
  using namespace synth_detail;
  require(severity >= 0 && severity < kNumRatings, ErrorKind::domain, "severity outside 0..4");
  const double fs = cfg.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(phrase.duration * fs));
  const auto syllables = phrase_template(phrase, cfg.seed);
  const std::uint64_t utt_key = derive_seed(cfg.seed, speaker.speaker_id, static_cast<std::uint64_t>(phrase.phrase_id));

  // Clean speaker template.
  std::vector<float> clean(n, 0.0f);
  Rng src_rng(derive_seed(utt_key, "source"));
  for (const auto& syl : syllables) {
    const auto first = static_cast<std::size_t>(syl.start * fs);
    const auto len = static_cast<std::size_t>(syl.length * fs);
    std::array<Resonator, 3> res;
    for (std::size_t f = 0; f < 3; ++f)
      res[f].set(std::min(syl.formants[f] * speaker.formant_scale, 0.45 * fs), 80.0 + 40.0 * static_cast<double>(f), fs);
    double phase = 0.0;
    for (std::size_t j = 0; j < len && first + j < n; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(len);
      const double f0 = speaker.f0_scale * (syl.f0_start + (syl.f0_end - syl.f0_start) * u);
      double excitation;
      if (syl.voiced) {
        phase += f0 / fs;
        excitation = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          excitation = 1.0;
        }
        excitation = excitation * 4.0 - 4.0 * f0 / fs;  // zero-mean pulse train
      } else {
        excitation = 0.3 * standard_normal(src_rng);
      }
      double y = 0.0;
      for (std::size_t f = 0; f < 3; ++f) y += res[f].step(excitation) / static_cast<double>(f + 1);
      const double env = std::sin(M_PI * u);
      clean[first + j] += static_cast<float>(speaker.gain * syl.level * env * y);
    }
  }

  const auto& d = cfg.profile[static_cast<std::size_t>(severity)];
  Rng deg_rng(derive_seed(utt_key, "degrade"));

  // Smooth random time warp with knots every 40 ms, displacement up to jitter_ms.
  std::vector<float> shaped = clean;
  {
    const std::size_t knot = static_cast<std::size_t>(0.04 * fs);
    const std::size_t knots = n / knot + 2;
    std::vector<double> disp(knots);
    for (auto& v : disp) v = (2.0 * uniform01(deg_rng) - 1.0);
    const double scale = d.jitter_ms * 1e-3 * fs;
    if (scale > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double kpos = static_cast<double>(i) / static_cast<double>(knot);
        const auto k0 = static_cast<std::size_t>(kpos);
        const double frac = kpos - static_cast<double>(k0);
        const double src = static_cast<double>(i) + scale * ((1.0 - frac) * disp[k0] + frac * disp[k0 + 1]);
        if (src < 0.0 || src >= static_cast<double>(n - 1)) {
          shaped[i] = 0.0f;
          continue;
        }
        const auto s0 = static_cast<std::size_t>(src);
        const double w = src - static_cast<double>(s0);
        shaped[i] = static_cast<float>((1.0 - w) * clean[s0] + w * clean[s0 + 1]);
      }
    }
  }
  shaped = lowpass(shaped, std::min(d.lowpass_hz * speaker.lowpass_scale, 0.49 * fs), fs);

  // Block-modulated white noise scaled to the target SNR over the utterance.
  const double snr = d.snr_db + speaker.snr_offset_db;
  std::vector<double> noise(n);
  {
    const std::size_t block = static_cast<std::size_t>(0.1 * fs);
    double g = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % block == 0) g = std::pow(10.0, cfg.noise_modulation_db * standard_normal(deg_rng) / 20.0);
      noise[i] = g * standard_normal(deg_rng);
    }
  }
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ps += static_cast<double>(shaped[i]) * shaped[i];
    pn += noise[i] * noise[i];
  }
  const double noise_gain = pn > 0.0 ? std::sqrt(ps / pn * std::pow(10.0, -snr / 10.0)) : 0.0;

  RenderedUtterance out;
  out.target_snr_db = snr;
  out.reference.resize(n);
  out.output.resize(n);
  double peak = 0.0;
  std::vector<double> mixed(n);
  for (std::size_t i = 0; i < n; ++i) {
    mixed[i] = shaped[i] + noise_gain * noise[i];
    peak = std::max(peak, std::abs(mixed[i]));
  }
  const double norm = peak > 0.0 ? 0.9 / peak : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.reference[i] = static_cast<float>(norm * shaped[i]);
    out.output[i] = static_cast<float>(norm * mixed[i]);
  }
  return out;
}

/// Power ratio of `reference` to (`signal` - `reference`), in dB.
inline double measured_snr_db(std::span<const float> signal, std::span<const float> reference) {
  require(signal.size() == reference.size(), ErrorKind::shape, "signal and reference differ in length");
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double r = reference[i];
    const double e = static_cast<double>(signal[i]) - r;
    ps += r * r;
    pn += e * e;
  }
  return 10.0 * std::log10(ps / pn);
}

inline std::string utterance_id_for(const SpeakerProfile& spk, const PhraseSpec& phrase) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_p%02d", phrase.phrase_id);
  return spk.speaker_id + buf;
}

/// Manifest for the configured corpus; audio paths point into `audio_dir`.
inline Manifest synth_manifest(const SynthConfig& cfg, const std::filesystem::path& audio_dir = "audio") {
  const auto speakers = synth_speakers(cfg);
  std::vector<Utterance> utts;
  std::vector<SpeakerRating> ratings;
  for (const auto& spk : speakers) {
    ratings.push_back({spk.speaker_id, spk.rating});
    for (const auto& ph : cfg.phrases) {
      const auto id = utterance_id_for(spk, ph);
      utts.push_back({id, spk.speaker_id, ph.phrase_id, ph.text, audio_dir / (id + ".wav"),
                      static_cast<double>(std::lround(ph.duration * cfg.sample_rate)) / cfg.sample_rate});
    }
  }
  return Manifest(std::move(utts), std::move(ratings));
}

/// Writes `out_dir/audio/*.wav` (16-bit PCM) and `out_dir/manifest.jsonl`.
inline Manifest generate_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  require(!ec, ErrorKind::io, "cannot create " + (out_dir / "audio").string() + ": " + ec.message());
  const auto speakers = synth_speakers(cfg);
  auto manifest = synth_manifest(cfg, out_dir / "audio");
  for (const auto& spk : speakers) {
    for (const auto& ph : cfg.phrases) {
      const auto r = render_utterance(cfg, spk, ph, spk.rating);
      write_wav(out_dir / "audio" / (utterance_id_for(spk, ph) + ".wav"), AudioBuffer{cfg.sample_rate, 1, r.output});
    }
  }
  write_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace igtk
