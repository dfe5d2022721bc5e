#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/loop.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"

namespace ahs {

// Energy-ratio metrics saturate at this magnitude in dB so reports stay
// finite when a residual is exactly zero.
inline constexpr double kMetricCapDb = 120.0;

struct SiSdrResult {
  double db = 0.0;
  bool saturated = false;
};

// Scale-invariant signal-to-distortion ratio: est is projected onto ref, and
// the ratio of projection energy to residual energy is reported. Scaling est
// by any nonzero factor, positive or negative, leaves the value unchanged.
inline SiSdrResult si_sdr_result(const TimeSignal& est, const TimeSignal& ref) {
  if (est.size() != ref.size()) {
    throw ShapeError("si_sdr: signals differ in length");
  }
  double ref_energy = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ref_energy += ref.samples[i] * ref.samples[i];
    dot += est.samples[i] * ref.samples[i];
  }
  if (ref_energy <= 0.0) {
    throw DataError("si_sdr: reference has zero energy");
  }
  const double a = dot / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = a * ref.samples[i];
    const double r = est.samples[i] - t;
    target += t * t;
    residual += r * r;
  }
  SiSdrResult out;
  if (residual <= 0.0) {
    out.db = kMetricCapDb;
    out.saturated = true;
    return out;
  }
  if (target <= 0.0) {
    out.db = -kMetricCapDb;
    out.saturated = true;
    return out;
  }
  out.db = 10.0 * std::log10(target / residual);
  if (out.db > kMetricCapDb) {
    out.db = kMetricCapDb;
    out.saturated = true;
  } else if (out.db < -kMetricCapDb) {
    out.db = -kMetricCapDb;
    out.saturated = true;
  }
  return out;
}

inline double si_sdr(const TimeSignal& est, const TimeSignal& ref) {
  return si_sdr_result(est, ref).db;
}

// Mean absolute error between spectral magnitudes, averaged over every
// frame-bin cell.
inline double spectral_mae(const Spectrogram& s_hat, const Spectrogram& s) {
  s_hat.check_shape_matches(s, "spectral_mae");
  if (s.frames == 0 || s.bins == 0) {
    throw ShapeError("spectral_mae: empty spectrogram");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < s.frames; ++k) {
    for (std::size_t b = 0; b < s.bins; ++b) {
      acc += std::abs(std::abs(s_hat.at(k, b)) - std::abs(s.at(k, b)));
    }
  }
  return acc / (static_cast<double>(s.frames) * static_cast<double>(s.bins));
}

// Training-style objective: negative SI-SDR plus lambda times the spectral
// magnitude MAE. lambda defaults to 10000 to balance the two value ranges.
inline double combined_loss(const TimeSignal& est, const TimeSignal& ref,
                            const StftConfig& cfg, double lambda = 10000.0) {
  const double sdr = si_sdr(est, ref);
  const double mae = spectral_mae(stft(est, cfg), stft(ref, cfg));
  return -sdr + lambda * mae;
}

// Echo-return-loss enhancement per frame: the signals are cut into
// non-overlapping frames of `window` samples and each frame reports the
// energy ratio mic/err in dB, capped at +-120 dB when one side is silent.
// The trailing partial frame, if any, is dropped.
inline std::vector<double> erle(const TimeSignal& mic, const TimeSignal& err,
                                std::size_t window) {
  if (mic.size() != err.size()) {
    throw ShapeError("erle: signals differ in length");
  }
  if (window == 0) throw ConfigError("erle: window must be positive");
  std::vector<double> out;
  out.reserve(mic.size() / window);
  for (std::size_t start = 0; start + window <= mic.size(); start += window) {
    double ey = 0.0, ee = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
      ey += mic.samples[start + i] * mic.samples[start + i];
      ee += err.samples[start + i] * err.samples[start + i];
    }
    double db;
    if (ee <= 0.0) {
      db = ey <= 0.0 ? 0.0 : kMetricCapDb;
    } else if (ey <= 0.0) {
      db = -kMetricCapDb;
    } else {
      db = std::clamp(10.0 * std::log10(ey / ee), -kMetricCapDb, kMetricCapDb);
    }
    out.push_back(db);
  }
  return out;
}

// Undoes a suppressor's declared latency before metric computation: drops
// latency_frames hops from the front and zero-pads the tail back to length.
inline TimeSignal compensate_latency(const TimeSignal& sig, std::size_t latency_frames,
                                     std::size_t hop) {
  const std::size_t shift = latency_frames * hop;
  TimeSignal out;
  out.sample_rate = sig.sample_rate;
  out.samples.assign(sig.size(), 0.0);
  for (std::size_t i = 0; i + shift < sig.size(); ++i) {
    out.samples[i] = sig.samples[i + shift];
  }
  return out;
}

struct MetricsReport {
  double si_sdr_db = 0.0;
  bool si_sdr_saturated = false;
  double spectral_mae = 0.0;
  double combined_loss = 0.0;
  std::optional<double> erle_db;
  HowlingReport howling;
};

// Fills the enhancement-quality fields of a report from an estimate and its
// reference; howling and ERLE are populated by the caller, which owns the
// loop context they come from.
inline MetricsReport evaluate_enhancement(const TimeSignal& est, const TimeSignal& ref,
                                          const StftConfig& cfg, double lambda = 10000.0) {
  MetricsReport report;
  const SiSdrResult sdr = si_sdr_result(est, ref);
  report.si_sdr_db = sdr.db;
  report.si_sdr_saturated = sdr.saturated;
  report.spectral_mae = spectral_mae(stft(est, cfg), stft(ref, cfg));
  report.combined_loss = -sdr.db + lambda * report.spectral_mae;
  return report;
}

}  // namespace ahs
