#pragma once

// Minimal RIFF/WAVE reader and writer: PCM 16-bit integer or 32-bit float,
// one or two channels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "igtk/binary_io.hpp"
#include "igtk/error.hpp"

namespace igtk {

struct AudioBuffer {
  int sample_rate = 0;
  int channels = 1;
  std::vector<float> interleaved;

  std::size_t frames() const { return channels > 0 ? interleaved.size() / static_cast<std::size_t>(channels) : 0; }
};

enum class WavEncoding { pcm16, float32 };

inline AudioBuffer read_wav(std::istream& in) {
  binary::expect_magic(in, "RIFF");
  binary::get_u32(in);
  binary::expect_magic(in, "WAVE");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  for (;;) {
    char id[4];
    in.read(id, 4);
    require(in.gcount() == 4, ErrorKind::format, "WAV has no data chunk");
    const std::uint32_t size = binary::get_u32(in);
    const std::string_view tag(id, 4);
    if (tag == "fmt ") {
      require(size >= 16, ErrorKind::format, "WAV fmt chunk too short");
      std::vector<char> body(size);
      binary::read_exact(in, body.data(), size);
      auto u16 = [&](std::size_t off) {
        return static_cast<std::uint16_t>(static_cast<unsigned char>(body[off]) |
                                          (static_cast<unsigned char>(body[off + 1]) << 8));
      };
      format = u16(0);
      channels = u16(2);
      rate = static_cast<std::uint32_t>(u16(4)) | (static_cast<std::uint32_t>(u16(6)) << 16);
      bits = u16(14);
      if (format == 0xFFFE && size >= 26) format = u16(24);  // WAVE_FORMAT_EXTENSIBLE sub-format
      have_fmt = true;
      if (size % 2 == 1) in.ignore(1);
    } else if (tag == "data") {
      require(have_fmt, ErrorKind::format, "WAV data chunk precedes fmt chunk");
      require(channels == 1 || channels == 2, ErrorKind::format,
              "unsupported channel count " + std::to_string(channels));
      AudioBuffer buf;
      buf.sample_rate = static_cast<int>(rate);
      buf.channels = channels;
      if (format == 1 && bits == 16) {
        const std::size_t n = size / 2;
        std::vector<char> raw(size);
        binary::read_exact(in, raw.data(), n * 2);
        buf.interleaved.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = static_cast<std::int16_t>(static_cast<unsigned char>(raw[2 * i]) |
                                                   (static_cast<unsigned char>(raw[2 * i + 1]) << 8));
          buf.interleaved[i] = static_cast<float>(v) / 32768.0f;
        }
      } else if (format == 3 && bits == 32) {
        const std::size_t n = size / 4;
        buf.interleaved.resize(n);
        for (std::size_t i = 0; i < n; ++i) buf.interleaved[i] = binary::get_f32(in);
      } else {
        fail(ErrorKind::format, "unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                    std::to_string(bits) + " bits)");
      }
      return buf;
    } else {
      in.ignore(size + (size % 2));
    }
  }
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return read_wav(in);
}

inline void write_wav(std::ostream& out, const AudioBuffer& buf, WavEncoding enc = WavEncoding::pcm16) {
  const std::uint16_t bits = enc == WavEncoding::pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(buf.channels * bits / 8);
  const auto data_bytes = static_cast<std::uint32_t>(buf.interleaved.size() * bits / 8);
  binary::put_magic(out, "RIFF");
  binary::put_u32(out, 36 + data_bytes);
  binary::put_magic(out, "WAVE");
  binary::put_magic(out, "fmt ");
  binary::put_u32(out, 16);
  binary::put_u32(out, (enc == WavEncoding::pcm16 ? 1u : 3u) | (static_cast<std::uint32_t>(buf.channels) << 16));
  binary::put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
  binary::put_u32(out, static_cast<std::uint32_t>(buf.sample_rate) * block);
  binary::put_u32(out, block | (static_cast<std::uint32_t>(bits) << 16));
  binary::put_magic(out, "data");
  binary::put_u32(out, data_bytes);
  if (enc == WavEncoding::pcm16) {
    std::vector<char> raw(buf.interleaved.size() * 2);
    for (std::size_t i = 0; i < buf.interleaved.size(); ++i) {
      const long q = std::lrint(static_cast<double>(buf.interleaved[i]) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
      raw[2 * i] = static_cast<char>(v & 0xff);
      raw[2 * i + 1] = static_cast<char>((v >> 8) & 0xff);
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  } else {
    for (float x : buf.interleaved) binary::put_f32(out, x);
  }
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf, WavEncoding enc = WavEncoding::pcm16) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  write_wav(out, buf, enc);
  require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

}  // namespace igtk
