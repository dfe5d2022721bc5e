#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/fft.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"

namespace ahs::kalman {

using fft::cplx;

// Frequency-domain adaptive Kalman feedback canceller. The filter runs on
// raw (unwindowed) overlap-save frames of fft_size samples advancing one hop
// at a time; each partition models partition_len taps of the echo path and
// reads the reference spectrum from its own frame lag.
struct Config {
  StftConfig stft;
  std::size_t partitions = 1;
  std::size_t partition_len = 0;  // taps per partition; 0 selects fft_size - hop
  double transition = 0.999;      // A: per-frame decay of the path estimate
  double initial_p_cov = 1.0;
  double smoothing = 0.9;         // observation-noise covariance smoothing
  double epsilon = 1e-10;

  std::size_t bins() const { return stft.bins(); }

  std::size_t resolved_partition_len() const {
    return partition_len > 0 ? partition_len : stft.fft_size - stft.hop;
  }

  void validate() const {
    stft.validate();
    if (partitions < 1) throw ConfigError("kalman: partitions must be >= 1");
    if (transition <= 0.0 || transition > 1.0) {
      throw ConfigError("kalman: transition must lie in (0, 1]");
    }
    if (initial_p_cov < 0.0) throw ConfigError("kalman: initial_p_cov must be >= 0");
    if (smoothing < 0.0 || smoothing >= 1.0) {
      throw ConfigError("kalman: smoothing must lie in [0, 1)");
    }
    if (epsilon <= 0.0) throw ConfigError("kalman: epsilon must be > 0");
    const std::size_t plen = resolved_partition_len();
    if (plen > stft.fft_size - stft.hop) {
      throw ConfigError(
          "kalman: partition_len exceeds fft_size - hop; overlap-save output would alias");
    }
    if (partitions > 1 && plen != stft.hop) {
      throw ConfigError("kalman: multiple partitions require partition_len == hop");
    }
  }
};

struct State {
  std::vector<std::vector<cplx>> h_hat;      // [partition][bin] path estimate
  std::vector<std::vector<cplx>> r_history;  // [lag-1][bin] past reference spectra
  std::vector<double> p_cov;                 // [bin] state estimation error covariance
  std::vector<double> psi_vv;                // [bin] observation-noise covariance
  std::vector<double> psi_dd;                // [bin] process-noise covariance
  double transition = 0.999;
  std::size_t frame_index = 0;

  std::size_t bins() const { return p_cov.size(); }
  std::size_t partitions() const { return h_hat.size(); }

  double h_norm() const {
    double acc = 0.0;
    for (const auto& part : h_hat) {
      for (const cplx& v : part) acc += std::norm(v);
    }
    return std::sqrt(acc);
  }
};

inline State init(const Config& config) {
  config.validate();
  State s;
  s.h_hat.assign(config.partitions, std::vector<cplx>(config.bins(), cplx{0.0, 0.0}));
  s.r_history.assign(config.partitions - 1, std::vector<cplx>(config.bins(), cplx{0.0, 0.0}));
  s.p_cov.assign(config.bins(), config.initial_p_cov);
  s.psi_vv.assign(config.bins(), 0.0);
  s.psi_dd.assign(config.bins(), 0.0);
  s.transition = config.transition;
  return s;
}

namespace detail {

inline void check_bins(const State& state, const std::vector<cplx>& frame, const char* what) {
  if (frame.size() != state.bins()) {
    throw ShapeError(std::string("kalman: ") + what + " has " +
                     std::to_string(frame.size()) + " bins, state has " +
                     std::to_string(state.bins()));
  }
}

inline void check_finite(const State& state, const std::vector<cplx>& frame, const char* what) {
  for (std::size_t b = 0; b < frame.size(); ++b) {
    if (!std::isfinite(frame[b].real()) || !std::isfinite(frame[b].imag())) {
      throw NumericError(std::string("kalman: non-finite ") + what + " in bin " +
                             std::to_string(b),
                         state.frame_index);
    }
  }
}

}  // namespace detail

// Predicted near-end spectrum: E = Y - sum over partitions of R_p * H_p,
// with R_0 the supplied (current) reference frame and later partitions read
// from the state's reference history. Does not modify the state.
inline std::vector<cplx> predict(const State& state, const std::vector<cplx>& y_spec,
                                 const std::vector<cplx>& r_spec) {
  detail::check_bins(state, y_spec, "microphone frame");
  detail::check_bins(state, r_spec, "reference frame");
  std::vector<cplx> e(state.bins());
  for (std::size_t b = 0; b < e.size(); ++b) {
    cplx est = r_spec[b] * state.h_hat[0][b];
    for (std::size_t p = 1; p < state.partitions(); ++p) {
      est += state.r_history[p - 1][b] * state.h_hat[p][b];
    }
    e[b] = y_spec[b] - est;
  }
  return e;
}

// One Kalman step: per-bin gain from the covariances, decayed estimate
// update, covariance propagation, then the reference history advances by one
// frame. The supplied reference frame is the one E was predicted against.
inline State update(const State& state, const std::vector<cplx>& e_spec,
                    const std::vector<cplx>& r_spec, const Config& config) {
  detail::check_bins(state, e_spec, "error frame");
  detail::check_bins(state, r_spec, "reference frame");
  detail::check_finite(state, e_spec, "error");
  detail::check_finite(state, r_spec, "reference");

  State next = state;
  const double a = state.transition;
  const double a2 = a * a;
  const std::size_t parts = state.partitions();

  for (std::size_t b = 0; b < state.bins(); ++b) {
    double total_power = std::norm(r_spec[b]);
    for (std::size_t p = 1; p < parts; ++p) total_power += std::norm(state.r_history[p - 1][b]);

    const double denom = state.p_cov[b] * total_power + state.psi_vv[b] + config.epsilon;
    const double gain_scale = state.p_cov[b] / denom;

    double h_power = 0.0;
    for (std::size_t p = 0; p < parts; ++p) {
      const cplx& rp = p == 0 ? r_spec[b] : state.r_history[p - 1][b];
      const cplx k = gain_scale * std::conj(rp);
      next.h_hat[p][b] = a * (state.h_hat[p][b] + k * e_spec[b]);
      h_power += std::norm(next.h_hat[p][b]);
    }

    const double kr = gain_scale * total_power;  // sum of K_p * R_p, real in [0, 1)
    next.psi_dd[b] = (1.0 - a2) * h_power;
    next.p_cov[b] = a2 * (1.0 - kr) * state.p_cov[b] + next.psi_dd[b];
    next.psi_vv[b] = config.smoothing * state.psi_vv[b] +
                     (1.0 - config.smoothing) * std::norm(e_spec[b]);
  }

  if (parts > 1) {
    for (std::size_t p = parts - 1; p > 1; --p) next.r_history[p - 1] = next.r_history[p - 2];
    next.r_history[0] = r_spec;
  }
  next.frame_index = state.frame_index + 1;
  return next;
}

// Zeroes the path estimate beyond each partition's modeled support.
inline void constrain_support(State& state, const Config& config) {
  const std::size_t n = config.stft.fft_size;
  const std::size_t plen = config.resolved_partition_len();
  for (auto& part : state.h_hat) {
    auto taps = fft::irfft(part, n);
    std::fill(taps.begin() + static_cast<std::ptrdiff_t>(plen), taps.end(), 0.0);
    part = fft::rfft(taps, n);
  }
}

// Time-domain echo-path estimate assembled from the partitions. Partition p
// contributes its first partition_len taps at offset p * hop.
inline std::vector<double> estimated_path(const State& state, const Config& config) {
  const std::size_t plen = config.resolved_partition_len();
  const std::size_t hop = config.stft.hop;
  std::vector<double> path((state.partitions() - 1) * hop + plen, 0.0);
  for (std::size_t p = 0; p < state.partitions(); ++p) {
    auto taps = fft::irfft(state.h_hat[p], config.stft.fft_size);
    for (std::size_t t = 0; t < plen; ++t) path[p * hop + t] += taps[t];
  }
  return path;
}

struct StreamResult {
  TimeSignal error;                // microphone minus estimated feedback
  std::vector<double> erle_db;     // per frame
  std::vector<double> h_norm;      // per frame, after the update
  State state;                     // final filter state
};

// Runs the full overlap-save cancellation loop: per hop, predict the
// feedback from the reference, subtract it from the microphone block, feed
// the zero-padded error spectrum back into the Kalman update, and re-apply
// the support constraint.
inline StreamResult process_stream(const Config& config, const TimeSignal& y,
                                   const TimeSignal& r) {
  config.validate();
  if (y.sample_rate != r.sample_rate) {
    throw ConfigError("kalman: microphone and reference sample rates differ");
  }
  if (y.size() != r.size()) {
    throw ConfigError("kalman: microphone and reference lengths differ");
  }

  const std::size_t n = config.stft.fft_size;
  const std::size_t hop = config.stft.hop;
  const std::size_t len = y.size();
  const std::size_t frames = (len + hop - 1) / hop;

  State state = init(config);
  StreamResult out;
  out.error.sample_rate = y.sample_rate;
  out.error.samples.assign(len, 0.0);
  out.erle_db.reserve(frames);
  out.h_norm.reserve(frames);

  std::vector<double> ref_frame(n, 0.0);
  std::vector<double> e_frame(n, 0.0);

  for (std::size_t k = 0; k < frames; ++k) {
    const std::size_t start = k * hop;
    const std::size_t block = std::min(hop, len - start);

    std::copy(ref_frame.begin() + static_cast<std::ptrdiff_t>(hop), ref_frame.end(),
              ref_frame.begin());
    for (std::size_t i = 0; i < hop; ++i) {
      const std::size_t idx = start + i;
      ref_frame[n - hop + i] = idx < len ? r.samples[idx] : 0.0;
    }

    const auto r_spec = fft::rfft(ref_frame, n);

    std::vector<cplx> est_spec(state.bins(), cplx{0.0, 0.0});
    for (std::size_t b = 0; b < est_spec.size(); ++b) {
      est_spec[b] = r_spec[b] * state.h_hat[0][b];
      for (std::size_t p = 1; p < state.partitions(); ++p) {
        est_spec[b] += state.r_history[p - 1][b] * state.h_hat[p][b];
      }
    }
    const auto est = fft::irfft(est_spec, n);

    double y_power = 0.0;
    double e_power = 0.0;
    std::fill(e_frame.begin(), e_frame.end(), 0.0);
    for (std::size_t i = 0; i < hop; ++i) {
      const std::size_t idx = start + i;
      const double yi = idx < len ? y.samples[idx] : 0.0;
      const double ei = yi - est[n - hop + i];
      e_frame[n - hop + i] = ei;
      y_power += yi * yi;
      e_power += ei * ei;
      if (i < block) out.error.samples[idx] = ei;
    }

    const auto e_spec = fft::rfft(e_frame, n);
    state = update(state, e_spec, r_spec, config);
    constrain_support(state, config);

    out.erle_db.push_back(10.0 * std::log10((y_power + 1e-30) / (e_power + 1e-30)));
    out.h_norm.push_back(state.h_norm());
  }

  out.state = std::move(state);
  return out;
}

}  // namespace ahs::kalman
