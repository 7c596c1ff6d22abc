#include <fstream>
#include <iterator>

#include "igtk/synth.hpp"
#include "test_util.hpp"

using namespace igtk;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SynthConfig small_config() {
  auto cfg = SynthConfig::defaults(3, 11);
  cfg.phrases = {cfg.phrases[0], cfg.phrases[12]};
  return cfg;
}

}  // namespace

TEST_CASE("default phrase table spans short words to long sentences") {
  const auto p = SynthConfig::default_phrases();
  REQUIRE(p.size() == 29);
  double lo = 1e9, hi = 0;
  for (const auto& x : p) {
    lo = std::min(lo, x.duration);
    hi = std::max(hi, x.duration);
  }
  CHECK(lo == 0.5);
  CHECK(hi == 4.0);
}

TEST_CASE("60 speakers x 29 phrases -> 1740 manifest entries") {
  const auto m = synth_manifest(SynthConfig::defaults(60, 1));
  CHECK(m.utterances.size() == 1740);
  CHECK(m.ratings.size() == 60);
  m.validate();
}

TEST_CASE("ratings follow the severity distribution") {
  const auto spk = synth_speakers(SynthConfig::defaults(100, 3));
  std::array<int, 5> count{};
  for (const auto& s : spk) ++count[static_cast<std::size_t>(s.rating)];
  CHECK(count == std::array<int, 5>{25, 25, 20, 15, 15});
}

TEST_CASE("same config and seed give byte-identical WAVs and a loadable manifest") {
  TempDir a("synth-a"), b("synth-b");
  const auto cfg = small_config();
  generate_corpus(cfg, a.path());
  generate_corpus(cfg, b.path());
  const auto m = load_manifest(a.path() / "manifest.jsonl");
  REQUIRE(m.utterances.size() == 6);
  for (const auto& u : m.utterances) {
    const auto name = u.audio_path.filename();
    CHECK(std::filesystem::exists(u.audio_path));
    CHECK(slurp(a.path() / "audio" / name) == slurp(b.path() / "audio" / name));
    const auto w = read_wav(u.audio_path);
    CHECK(w.sample_rate == 16000);
    CHECK(std::abs(static_cast<double>(w.frames()) / 16000.0 - *u.duration) < 1e-9);
  }
  CHECK(slurp(a.path() / "manifest.jsonl") == slurp(b.path() / "manifest.jsonl"));
}

TEST_CASE("measured SNR is non-increasing in severity for every speaker and phrase") {
  const auto cfg = SynthConfig::defaults(4, 5);
  const auto speakers = synth_speakers(cfg);
  for (const auto& spk : speakers) {
    for (std::size_t pi = 0; pi < cfg.phrases.size(); pi += 7) {
      double prev = 1e9;
      for (int s = 0; s < kNumRatings; ++s) {
        const auto r = render_utterance(cfg, spk, cfg.phrases[pi], s);
        const double snr = measured_snr_db(r.output, r.reference);
        CHECK(std::abs(snr - r.target_snr_db) < 0.05);
        CHECK(snr <= prev);
        prev = snr;
      }
    }
  }
}

TEST_CASE("severity 4 is at least 20 dB noisier than severity 0, measured from the WAV") {
  TempDir dir("snr");
  const auto cfg = SynthConfig::defaults(2, 8);
  const auto spk = synth_speakers(cfg).front();
  const auto& phrase = cfg.phrases[20];
  std::array<double, 2> snr{};
  for (int k = 0; k < 2; ++k) {
    const int sev = k == 0 ? 0 : 4;
    const auto r = render_utterance(cfg, spk, phrase, sev);
    const auto path = dir.path() / ("s" + std::to_string(sev) + ".wav");
    write_wav(path, {16000, 1, r.output});
    snr[static_cast<std::size_t>(k)] = measured_snr_db(read_wav(path).interleaved, r.reference);
  }
  CHECK(snr[0] - snr[1] >= 20.0);
}

TEST_CASE("synth config validation") {
  auto cfg = SynthConfig::defaults(10);
  cfg.profile[2].snr_db = cfg.profile[1].snr_db;
  REQUIRE_ERROR_KIND(cfg.validate(), ErrorKind::config);
  cfg = SynthConfig::defaults(10);
  cfg.profile[3].lowpass_hz = 9000.0;
  REQUIRE_ERROR_KIND(cfg.validate(), ErrorKind::config);
  cfg = SynthConfig::defaults(10);
  cfg.phrases[0].duration = 0.0;
  REQUIRE_ERROR_KIND(cfg.validate(), ErrorKind::config);
  cfg = SynthConfig::defaults(10);
  cfg.severity_distribution = {0.5, 0.5, 0.5, 0.0, 0.0};
  REQUIRE_ERROR_KIND(cfg.validate(), ErrorKind::config);
}

TEST_CASE("unwritable output directory is an I/O error") {
  REQUIRE_ERROR_KIND(generate_corpus(small_config(), "/proc/igtk-cannot-write"), ErrorKind::io);
}
