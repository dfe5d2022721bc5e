#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/signal.hpp"

namespace ahs {

// On-disk sample encodings. Float32 is lossless for loop signals that exceed
// [-1, 1] (runaway microphone capture); PCM16 clamps and quantizes.
enum class WavFormat { kPcm16, kFloat32 };

namespace detail {

inline void store_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

inline void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline std::uint16_t load_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Writes a mono RIFF/WAVE file. PCM16 clamps samples to [-1, 1] and rounds to
// the nearest 16-bit code; float32 stores the values verbatim (narrowed to
// single precision).
inline void write_wav(const std::filesystem::path& path, const TimeSignal& sig,
                      WavFormat format = WavFormat::kFloat32) {
  if (sig.sample_rate <= 0) throw ConfigError("write_wav: sample_rate must be positive");

  const std::uint16_t channels = 1;
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint16_t format_tag = format == WavFormat::kPcm16 ? 1 : 3;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t rate = static_cast<std::uint32_t>(sig.sample_rate);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(sig.size() * block_align);

  std::vector<std::uint8_t> buf;
  buf.reserve(44 + data_bytes);
  auto put_tag = [&](const char* tag) { buf.insert(buf.end(), tag, tag + 4); };

  put_tag("RIFF");
  detail::store_u32(buf, 36 + data_bytes);
  put_tag("WAVE");
  put_tag("fmt ");
  detail::store_u32(buf, 16);
  detail::store_u16(buf, format_tag);
  detail::store_u16(buf, channels);
  detail::store_u32(buf, rate);
  detail::store_u32(buf, rate * block_align);
  detail::store_u16(buf, block_align);
  detail::store_u16(buf, bits);
  put_tag("data");
  detail::store_u32(buf, data_bytes);

  if (format == WavFormat::kPcm16) {
    for (double v : sig.samples) {
      const double clamped = std::clamp(v, -1.0, 1.0);
      const auto code = static_cast<std::int16_t>(std::llround(clamped * 32767.0));
      detail::store_u16(buf, static_cast<std::uint16_t>(code));
    }
  } else {
    for (double v : sig.samples) {
      const float f = static_cast<float>(v);
      std::uint32_t w = 0;
      std::memcpy(&w, &f, sizeof w);
      detail::store_u32(buf, w);
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_wav: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write_wav: write failed for " + path.string());
}

// Reads a mono PCM16 or float32 RIFF/WAVE file. Unknown chunks are skipped;
// anything structurally off (bad magic, unsupported encoding, truncated data,
// multichannel audio) raises DataError.
inline TimeSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_wav: cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  const std::string name = path.string();
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw DataError("read_wav: not a RIFF/WAVE file: " + name);
  }

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint8_t* chunk = buf.data() + pos;
    const std::uint32_t chunk_len = detail::load_u32(chunk + 4);
    if (pos + 8 + chunk_len > buf.size()) {
      throw DataError("read_wav: truncated chunk in " + name);
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DataError("read_wav: fmt chunk too short in " + name);
      format_tag = detail::load_u16(chunk + 8);
      channels = detail::load_u16(chunk + 10);
      rate = detail::load_u32(chunk + 12);
      bits = detail::load_u16(chunk + 22);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }

  if (!have_fmt || data == nullptr) throw DataError("read_wav: missing fmt or data chunk in " + name);
  if (channels != 1) {
    throw DataError("read_wav: expected mono, got " + std::to_string(channels) +
                    " channels in " + name);
  }
  if (rate == 0) throw DataError("read_wav: zero sample rate in " + name);

  TimeSignal sig;
  sig.sample_rate = static_cast<int>(rate);
  if (format_tag == 1 && bits == 16) {
    if (data_len % 2 != 0) throw DataError("read_wav: odd PCM16 data size in " + name);
    sig.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < sig.samples.size(); ++i) {
      const auto code = static_cast<std::int16_t>(detail::load_u16(data + 2 * i));
      sig.samples[i] = static_cast<double>(code) / 32767.0;
    }
  } else if (format_tag == 3 && bits == 32) {
    if (data_len % 4 != 0) throw DataError("read_wav: misaligned float32 data size in " + name);
    sig.samples.resize(data_len / 4);
    for (std::size_t i = 0; i < sig.samples.size(); ++i) {
      const std::uint32_t w = detail::load_u32(data + 4 * i);
      float f = 0.0f;
      std::memcpy(&f, &w, sizeof f);
      sig.samples[i] = static_cast<double>(f);
    }
  } else {
    throw DataError("read_wav: unsupported encoding (format " + std::to_string(format_tag) +
                    ", " + std::to_string(bits) + " bit) in " + name);
  }
  return sig;
}

}  // namespace ahs
