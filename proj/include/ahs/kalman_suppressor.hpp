#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/fft.hpp"
#include "ahs/kalman.hpp"
#include "ahs/suppressor.hpp"

namespace ahs {

namespace detail {

// Closed-loop feedback canceller. The reference signal is the suppressor's
// own past output, shifted by the loop's bulk delay: whatever it emitted at
// time t re-enters the microphone around t + loop_delay after the room and
// any playback chain, and the filter estimates that composite path. The
// emitted block is the overlap-save error, so the very first frames pass the
// microphone through unchanged until the estimate forms.
class KalmanSuppressor final : public Suppressor {
 public:
  KalmanSuppressor(kalman::Config config, std::size_t loop_delay_samples)
      : config_(config), loop_delay_(loop_delay_samples) {}

  void init(const StftConfig& stft, int sample_rate) override {
    config_.stft = stft;
    config_.validate();
    Suppressor::init(stft, sample_rate);
  }

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    const std::vector<double>& mic = channels[0];
    const std::size_t n = config_.stft.fft_size;
    const std::size_t hop = config_.stft.hop;
    const std::size_t start = frame_ * hop;

    std::copy(ref_frame_.begin() + static_cast<std::ptrdiff_t>(hop), ref_frame_.end(),
              ref_frame_.begin());
    for (std::size_t i = 0; i < hop; ++i) {
      const long long idx =
          static_cast<long long>(start + i) - static_cast<long long>(loop_delay_);
      ref_frame_[n - hop + i] =
          idx >= 0 && idx < static_cast<long long>(emitted_.size())
              ? emitted_[static_cast<std::size_t>(idx)]
              : 0.0;
    }

    const auto r_spec = fft::rfft(ref_frame_, n);

    std::vector<fft::cplx> est_spec(state_.bins(), fft::cplx(0.0, 0.0));
    for (std::size_t b = 0; b < est_spec.size(); ++b) {
      est_spec[b] = r_spec[b] * state_.h_hat[0][b];
      for (std::size_t p = 1; p < state_.partitions(); ++p) {
        est_spec[b] += state_.r_history[p - 1][b] * state_.h_hat[p][b];
      }
    }
    const auto est = fft::irfft(est_spec, n);

    std::vector<double> out(hop, 0.0);
    std::vector<double> e_frame(n, 0.0);
    double y_power = 0.0;
    double e_power = 0.0;
    for (std::size_t i = 0; i < hop; ++i) {
      const double ei = mic[i] - est[n - hop + i];
      out[i] = ei;
      e_frame[n - hop + i] = ei;
      y_power += mic[i] * mic[i];
      e_power += ei * ei;
    }

    const auto e_spec = fft::rfft(e_frame, n);
    state_ = kalman::update(state_, e_spec, r_spec, config_);
    kalman::constrain_support(state_, config_);

    erle_db_ = 10.0 * std::log10((y_power + 1e-30) / (e_power + 1e-30));
    emitted_.insert(emitted_.end(), out.begin(), out.end());
    ++frame_;
    return out;
  }

  void reset() override {
    state_ = kalman::init(config_);
    ref_frame_.assign(config_.stft.fft_size, 0.0);
    emitted_.clear();
    frame_ = 0;
    erle_db_ = std::nan("");
  }

  std::string name() const override { return "kalman"; }
  double last_erle_db() const override { return erle_db_; }

  const kalman::State& state() const { return state_; }

 private:
  kalman::Config config_;
  std::size_t loop_delay_;
  kalman::State state_;
  std::vector<double> ref_frame_;
  std::vector<double> emitted_;
  std::size_t frame_ = 0;
  double erle_db_ = std::nan("");
};

}  // namespace detail

inline SuppressorPtr make_kalman_suppressor(const kalman::Config& config,
                                            std::size_t loop_delay_samples) {
  return std::make_unique<detail::KalmanSuppressor>(config, loop_delay_samples);
}

}  // namespace ahs
