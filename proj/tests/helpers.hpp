#pragma once

// Shared test utilities. Oracles here are deliberately written as naive
// reference computations, independent of the library's transform paths.

#include <complex>
#include <numbers>
#include <vector>

#include "ahs/rng.hpp"
#include "ahs/signal.hpp"

namespace testutil {

using cplx = std::complex<double>;

// O(N^2) direct DFT, the reference for every FFT-backed path.
inline std::vector<cplx> naive_dft(const std::vector<double>& x, std::size_t n) {
  std::vector<cplx> out(n / 2 + 1, cplx(0.0, 0.0));
  for (std::size_t k = 0; k <= n / 2; ++k) {
    cplx acc(0.0, 0.0);
    for (std::size_t t = 0; t < x.size() && t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// out[n] = sum_k x[k] h[n-k]; quadratic reference convolution.
inline std::vector<double> naive_convolution(const std::vector<double>& x,
                                             const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (n >= k && n - k < h.size()) acc += x[k] * h[n - k];
    }
    out[n] = acc;
  }
  return out;
}

inline ahs::TimeSignal white_noise(std::size_t len, ahs::Rng& rng, double amp = 1.0,
                                   int rate = 16000) {
  ahs::TimeSignal s;
  s.sample_rate = rate;
  s.samples.resize(len);
  for (auto& v : s.samples) v = amp * rng.uniform(-1.0, 1.0);
  return s;
}

inline ahs::TimeSignal gaussian_noise(std::size_t len, ahs::Rng& rng, double sigma = 1.0,
                                      int rate = 16000) {
  ahs::TimeSignal s;
  s.sample_rate = rate;
  s.samples.resize(len);
  for (auto& v : s.samples) v = sigma * rng.normal();
  return s;
}

inline ahs::TimeSignal sine(std::size_t len, double freq_hz, int rate = 16000,
                            double amp = 1.0, double phase = 0.0) {
  ahs::TimeSignal s;
  s.sample_rate = rate;
  s.samples.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    s.samples[n] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * n / rate + phase);
  }
  return s;
}

// Speech-shaped stand-in: amplitude-modulated noise bursts with pauses.
// Constant long-term level, no sustained growth.
inline ahs::TimeSignal synthetic_speech(std::size_t len, ahs::Rng& rng, double amp = 0.1,
                                        int rate = 16000) {
  ahs::TimeSignal s;
  s.sample_rate = rate;
  s.samples.assign(len, 0.0);
  double lp = 0.0;
  std::size_t t = 0;
  while (t < len) {
    const std::size_t burst = static_cast<std::size_t>(rng.uniform(0.08, 0.4) * rate);
    const std::size_t pause = static_cast<std::size_t>(rng.uniform(0.02, 0.15) * rate);
    const double level = amp * rng.uniform(0.5, 1.0);
    for (std::size_t i = 0; i < burst && t < len; ++i, ++t) {
      // first-order lowpass colors the noise roughly like voiced speech
      lp = 0.9 * lp + 0.1 * rng.normal();
      const double env = std::sin(std::numbers::pi * static_cast<double>(i) / burst);
      s.samples[t] = level * env * lp * 10.0;
    }
    t += pause;
  }
  return s;
}

// Lag of the maximum cross-correlation between a and b (b delayed vs a).
inline long xcorr_peak_lag(const std::vector<double>& a, const std::vector<double>& b,
                           long max_lag) {
  double best = -1.0;
  long best_lag = 0;
  for (long lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t n = 0; n + lag < b.size() && n < a.size(); ++n) {
      acc += a[n] * b[n + lag];
    }
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_lag = lag;
    }
  }
  return best_lag;
}

// Schroeder backward integration; returns the time (seconds) at which the
// energy decay curve falls 60 dB below its initial value, estimated from the
// -5..-25 dB slope.
inline double schroeder_rt60(const ahs::TimeSignal& h) {
  std::vector<double> edc(h.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h.samples[i] * h.samples[i];
    edc[i] = acc;
  }
  if (acc <= 0.0) return 0.0;
  const double e0 = edc[0];
  // linear fit of dB decay between -5 and -25 dB
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] <= 0.0) break;
    const double db = 10.0 * std::log10(edc[i] / e0);
    if (db > -5.0) continue;
    if (db < -25.0) break;
    const double t = static_cast<double>(i) / h.sample_rate;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++count;
  }
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);  // dB per second
  if (slope >= 0.0) return 0.0;
  return -60.0 / slope;
}

}  // namespace testutil
