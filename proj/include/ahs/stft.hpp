#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/fft.hpp"
#include "ahs/signal.hpp"

namespace ahs {

using cplx = std::complex<double>;

enum class Window { kSqrtHann, kHann, kRect };

inline const char* window_name(Window w) {
  switch (w) {
    case Window::kSqrtHann: return "sqrt_hann";
    case Window::kHann: return "hann";
    case Window::kRect: return "rect";
  }
  return "?";
}

inline Window window_from_name(const std::string& s) {
  if (s == "sqrt_hann") return Window::kSqrtHann;
  if (s == "hann") return Window::kHann;
  if (s == "rect") return Window::kRect;
  throw ConfigError("unknown window: " + s);
}

// Block-transform configuration. The same window is used for analysis and
// synthesis. Defaults give the 32 ms / 16 ms profile at 16 kHz; the
// deployable profile is 128/64.
struct StftConfig {
  std::size_t fft_size = 512;
  std::size_t frame_len = 512;
  std::size_t hop = 256;
  Window window = Window::kSqrtHann;

  std::size_t bins() const { return fft_size / 2 + 1; }
  std::size_t pad_start() const { return frame_len - hop; }

  bool operator==(const StftConfig&) const = default;

  // Periodic window of frame_len samples.
  std::vector<double> make_window() const {
    std::vector<double> w(frame_len, 1.0);
    if (window == Window::kRect) return w;
    for (std::size_t n = 0; n < frame_len; ++n) {
      double hann = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / frame_len));
      w[n] = (window == Window::kHann) ? hann : std::sqrt(hann);
    }
    return w;
  }

  // Sum of shifted analysis*synthesis window products over one hop period in
  // the fully-overlapped region; throws unless it is constant.
  double cola_norm() const {
    std::vector<double> w = make_window();
    std::vector<double> acc(hop, 0.0);
    for (std::size_t shift = 0; shift < frame_len; shift += hop) {
      for (std::size_t n = 0; n < hop; ++n) {
        std::size_t idx = shift + n;
        if (idx < frame_len) acc[n] += w[idx] * w[idx];
      }
    }
    double lo = acc[0], hi = acc[0];
    for (double v : acc) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi <= 0.0 || (hi - lo) > 1e-10 * hi) {
      throw ConfigError("window does not satisfy constant overlap-add at this hop");
    }
    return hi;
  }

  void validate() const {
    if (fft_size == 0 || !fft::is_pow2(fft_size)) throw ConfigError("fft_size must be a power of two");
    if (hop == 0 || hop > frame_len) throw ConfigError("hop must be in [1, frame_len]");
    if (frame_len > fft_size) throw ConfigError("frame_len must not exceed fft_size");
    if (frame_len % hop != 0) throw ConfigError("frame_len must be a multiple of hop");
    cola_norm();
  }
};

// Padding policy, fixed so frame counts are reproducible:
//   pad_start = frame_len - hop zeros before the signal,
//   pad_end   = the smallest value >= frame_len - hop that makes
//               pad_start + len + pad_end - frame_len a non-negative
//               multiple of hop.
// frames = (pad_start + len + pad_end - frame_len) / hop + 1. The symmetric
// padding puts every input sample in the constant-overlap region, so the
// reconstruction identity holds over the whole signal.
inline std::size_t stft_frame_count(std::size_t len, const StftConfig& cfg) {
  std::size_t total = cfg.pad_start() + len + (cfg.frame_len - cfg.hop);
  if (total < cfg.frame_len) total = cfg.frame_len;
  std::size_t over = total - cfg.frame_len;
  std::size_t frames = over / cfg.hop + 1;
  if (over % cfg.hop != 0) ++frames;
  return frames;
}

// Complex time-frequency matrix, frames x bins, one-sided.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<cplx> data;  // row-major, frames x bins
  StftConfig config;
  std::size_t source_len = 0;  // analysis-time signal length
  int sample_rate = 16000;

  Spectrogram() = default;
  Spectrogram(std::size_t f, const StftConfig& c, int rate = 16000)
      : frames(f), bins(c.bins()), data(f * c.bins(), cplx(0.0, 0.0)), config(c),
        source_len(f * c.hop), sample_rate(rate) {}

  cplx& at(std::size_t frame, std::size_t bin) { return data[frame * bins + bin]; }
  cplx at(std::size_t frame, std::size_t bin) const { return data[frame * bins + bin]; }

  cplx* frame_ptr(std::size_t frame) { return data.data() + frame * bins; }
  const cplx* frame_ptr(std::size_t frame) const { return data.data() + frame * bins; }

  double bin_freq_hz(std::size_t bin) const {
    return static_cast<double>(bin) * sample_rate / static_cast<double>(config.fft_size);
  }

  void check_shape_matches(const Spectrogram& other, const char* what) const {
    if (frames != other.frames || bins != other.bins) {
      throw ShapeError(std::string(what) + ": spectrogram shapes differ");
    }
  }
};

inline Spectrogram stft(const TimeSignal& x, const StftConfig& cfg) {
  cfg.validate();
  x.validate("stft input");
  const std::size_t frames = stft_frame_count(x.size(), cfg);
  Spectrogram spec(frames, cfg, x.sample_rate);
  spec.source_len = x.size();

  const std::vector<double> win = cfg.make_window();
  const long ps = static_cast<long>(cfg.pad_start());
  std::vector<double> frame(cfg.frame_len);
  for (std::size_t k = 0; k < frames; ++k) {
    const long start = static_cast<long>(k * cfg.hop) - ps;
    for (std::size_t n = 0; n < cfg.frame_len; ++n) {
      const long idx = start + static_cast<long>(n);
      double v = (idx >= 0 && idx < static_cast<long>(x.size())) ? x.samples[idx] : 0.0;
      frame[n] = v * win[n];
    }
    std::vector<cplx> bins = fft::rfft(frame, cfg.fft_size);
    std::copy(bins.begin(), bins.end(), spec.frame_ptr(k));
  }
  return spec;
}

// Overlap-add synthesis with the synthesis window, normalized per sample by
// the accumulated window product. Output is trimmed to [pad_start,
// pad_start + source_len) of the synthesis buffer.
inline TimeSignal istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.bins != cfg.bins()) throw ShapeError("istft: bin count does not match config");
  if (spec.data.size() != spec.frames * spec.bins) throw ShapeError("istft: data size mismatch");

  const std::vector<double> win = cfg.make_window();
  const std::size_t ola_len = (spec.frames == 0) ? 0 : (spec.frames - 1) * cfg.hop + cfg.frame_len;
  std::vector<double> acc(ola_len, 0.0);
  std::vector<double> norm(ola_len, 0.0);

  std::vector<cplx> one(spec.bins);
  for (std::size_t k = 0; k < spec.frames; ++k) {
    std::copy(spec.frame_ptr(k), spec.frame_ptr(k) + spec.bins, one.begin());
    std::vector<double> t = fft::irfft(one, cfg.fft_size);
    const std::size_t base = k * cfg.hop;
    for (std::size_t n = 0; n < cfg.frame_len; ++n) {
      acc[base + n] += t[n] * win[n];
      norm[base + n] += win[n] * win[n];
    }
  }

  double norm_peak = 0.0;
  for (double v : norm) norm_peak = std::max(norm_peak, v);
  const double floor = 1e-8 * norm_peak;
  for (std::size_t n = 0; n < ola_len; ++n) {
    acc[n] = (norm[n] > floor) ? acc[n] / norm[n] : 0.0;
  }

  TimeSignal out;
  out.sample_rate = spec.sample_rate;
  const std::size_t ps = cfg.pad_start();
  out.samples.assign(spec.source_len, 0.0);
  for (std::size_t i = 0; i < spec.source_len && ps + i < ola_len; ++i) {
    out.samples[i] = acc[ps + i];
  }
  return out;
}

}  // namespace ahs
