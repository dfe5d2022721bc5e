#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ahs/common.hpp"

namespace ahs {

// Mono sampled waveform. Samples are dimensionless amplitudes, nominally in
// [-1, 1]; room impulse responses are carried in the same shape.
struct TimeSignal {
  std::vector<double> samples;
  int sample_rate = 16000;

  TimeSignal() = default;
  TimeSignal(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  double& operator[](std::size_t i) { return samples[i]; }
  double operator[](std::size_t i) const { return samples[i]; }

  void validate(const char* what = "signal") const {
    if (sample_rate <= 0) throw ConfigError(std::string(what) + ": sample_rate must be positive");
    for (double v : samples) {
      if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite sample");
    }
  }
};

inline double energy(const TimeSignal& x) {
  double e = 0.0;
  for (double v : x.samples) e += v * v;
  return e;
}

inline double rms(const TimeSignal& x) {
  return x.empty() ? 0.0 : std::sqrt(energy(x) / x.size());
}

inline double peak_abs(const TimeSignal& x) {
  double m = 0.0;
  for (double v : x.samples) m = std::max(m, std::abs(v));
  return m;
}

// Prepends n zeros. With keep_length the tail is truncated so the output
// length matches the input.
inline TimeSignal delay(const TimeSignal& x, long n, bool keep_length = false) {
  if (n < 0) throw ConfigError("delay: negative sample count");
  TimeSignal out;
  out.sample_rate = x.sample_rate;
  std::size_t out_len = keep_length ? x.size() : x.size() + static_cast<std::size_t>(n);
  out.samples.assign(out_len, 0.0);
  for (std::size_t i = 0; i + n < out_len && i < x.size(); ++i) {
    out.samples[i + n] = x.samples[i];
  }
  return out;
}

inline TimeSignal scaled(const TimeSignal& x, double g) {
  TimeSignal out = x;
  for (double& v : out.samples) v *= g;
  return out;
}

// Element-wise sum over the longer of the two lengths.
inline TimeSignal mix(const TimeSignal& a, const TimeSignal& b) {
  if (a.sample_rate != b.sample_rate) throw ConfigError("mix: sample-rate mismatch");
  TimeSignal out;
  out.sample_rate = a.sample_rate;
  out.samples.assign(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out.samples[i] += a.samples[i];
  for (std::size_t i = 0; i < b.size(); ++i) out.samples[i] += b.samples[i];
  return out;
}

inline TimeSignal truncated(const TimeSignal& x, std::size_t len) {
  TimeSignal out;
  out.sample_rate = x.sample_rate;
  out.samples.assign(len, 0.0);
  std::copy_n(x.samples.begin(), std::min(len, x.size()), out.samples.begin());
  return out;
}

}  // namespace ahs
