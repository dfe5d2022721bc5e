#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"

namespace ahs {

// A frame-synchronous processor sitting in the acoustic loop. After init,
// process() consumes one hop of new samples per input channel and returns one
// hop of enhanced samples. Outputs depend only on current and past inputs;
// reset() returns the instance to its post-init state so an identical input
// sequence replays bit-identically.
class Suppressor {
 public:
  virtual ~Suppressor() = default;

  virtual void init(const StftConfig& stft, int sample_rate) {
    stft.validate();
    if (sample_rate <= 0) throw ConfigError("suppressor: sample_rate must be positive");
    stft_ = stft;
    sample_rate_ = sample_rate;
    ready_ = true;
    reset();
  }

  // channels.size() must equal input_channels(); every block must hold
  // exactly one hop of samples.
  virtual std::vector<double> process(const std::vector<std::vector<double>>& channels) = 0;

  virtual void reset() {}

  virtual std::size_t input_channels() const { return 1; }

  // Algorithmic look-back, in whole frames, between an input block and the
  // output block that responds to it.
  virtual std::size_t latency_frames() const { return 0; }

  virtual std::string name() const = 0;

  // Most recent per-frame echo-reduction figure, NaN when the suppressor
  // does not estimate one.
  virtual double last_erle_db() const { return std::nan(""); }

  const StftConfig& stft() const { return stft_; }
  int sample_rate() const { return sample_rate_; }

 protected:
  void check_input(const std::vector<std::vector<double>>& channels) const {
    if (!ready_) throw ConfigError("suppressor: process() before init()");
    if (channels.size() != input_channels()) {
      throw ShapeError("suppressor " + name() + ": expected " +
                       std::to_string(input_channels()) + " input channels, got " +
                       std::to_string(channels.size()));
    }
    for (const auto& block : channels) {
      if (block.size() != stft_.hop) {
        throw ShapeError("suppressor " + name() + ": block size " +
                         std::to_string(block.size()) + " != hop " +
                         std::to_string(stft_.hop));
      }
    }
  }

  StftConfig stft_;
  int sample_rate_ = 0;
  bool ready_ = false;
};

using SuppressorPtr = std::unique_ptr<Suppressor>;

namespace detail {

class Passthrough final : public Suppressor {
 public:
  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    return channels[0];
  }
  std::string name() const override { return "passthrough"; }
};

// Forwards one selected channel of a multi-channel input unchanged.
class ChannelEcho final : public Suppressor {
 public:
  ChannelEcho(std::size_t channel, std::size_t n_channels)
      : channel_(channel), n_channels_(n_channels) {
    if (n_channels_ < 1 || channel_ >= n_channels_) {
      throw ConfigError("channel_echo: channel index out of range");
    }
  }
  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    return channels[channel_];
  }
  std::size_t input_channels() const override { return n_channels_; }
  std::string name() const override { return "channel_echo"; }

 private:
  std::size_t channel_;
  std::size_t n_channels_;
};

// Emits a fixed signal hop by hop, ignoring the microphone content. Used as
// the known-clean oracle in loop experiments.
class Scripted final : public Suppressor {
 public:
  explicit Scripted(TimeSignal script) : script_(std::move(script)) {}

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    std::vector<double> out(stft_.hop, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t idx = cursor_ + i;
      out[i] = idx < script_.size() ? script_.samples[idx] : 0.0;
    }
    cursor_ += stft_.hop;
    return out;
  }
  void reset() override { cursor_ = 0; }
  std::string name() const override { return "scripted"; }

 private:
  TimeSignal script_;
  std::size_t cursor_ = 0;
};

// Caps each output block's RMS at max_gain times a slowly tracked reference
// level, so runaway level growth is clamped while steady input passes
// unchanged.
class GainLimiter final : public Suppressor {
 public:
  GainLimiter(double max_gain, double smoothing) : max_gain_(max_gain), smoothing_(smoothing) {
    if (max_gain_ <= 0.0) throw ConfigError("gain_limiter: max_gain must be positive");
    if (smoothing_ < 0.0 || smoothing_ >= 1.0) {
      throw ConfigError("gain_limiter: smoothing must lie in [0, 1)");
    }
  }

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    std::vector<double> out = channels[0];
    double sum = 0.0;
    for (double v : out) sum += v * v;
    const double block_rms = std::sqrt(sum / static_cast<double>(out.size()));

    double out_rms = block_rms;
    if (ref_rms_ > 0.0) {
      const double allowed = max_gain_ * ref_rms_;
      if (block_rms > allowed) {
        const double scale = allowed / block_rms;
        for (double& v : out) v *= scale;
        out_rms = allowed;
      }
    }
    ref_rms_ = ref_rms_ > 0.0 ? smoothing_ * ref_rms_ + (1.0 - smoothing_) * out_rms : out_rms;
    return out;
  }
  void reset() override { ref_rms_ = 0.0; }
  std::string name() const override { return "gain_limiter"; }

 private:
  double max_gain_;
  double smoothing_;
  double ref_rms_ = 0.0;
};

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
  double z1 = 0.0, z2 = 0.0;

  double step(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
  void clear() { z1 = z2 = 0.0; }
};

inline Biquad notch_biquad(double freq_hz, double q, int sample_rate) {
  const double w0 = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  Biquad f;
  f.b0 = 1.0 / a0;
  f.b1 = -2.0 * c / a0;
  f.b2 = 1.0 / a0;
  f.a1 = -2.0 * c / a0;
  f.a2 = (1.0 - alpha) / a0;
  return f;
}

// A serial bank of second-order notches at fixed frequencies.
class NotchBank final : public Suppressor {
 public:
  NotchBank(std::vector<double> freqs_hz, double q) : freqs_(std::move(freqs_hz)), q_(q) {
    if (q_ <= 0.0) throw ConfigError("notch: q must be positive");
    for (double f : freqs_) {
      if (f <= 0.0) throw ConfigError("notch: frequency must be positive");
    }
  }

  void init(const StftConfig& stft, int sample_rate) override {
    for (double f : freqs_) {
      if (f >= 0.5 * sample_rate) {
        throw ConfigError("notch: frequency " + std::to_string(f) + " Hz is at or above Nyquist");
      }
    }
    filters_.clear();
    for (double f : freqs_) filters_.push_back(notch_biquad(f, q_, sample_rate));
    Suppressor::init(stft, sample_rate);
  }

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    std::vector<double> out = channels[0];
    for (double& v : out) {
      for (Biquad& f : filters_) v = f.step(v);
    }
    return out;
  }
  void reset() override {
    for (Biquad& f : filters_) f.clear();
  }
  std::string name() const override { return "notch"; }

 private:
  std::vector<double> freqs_;
  double q_;
  std::vector<Biquad> filters_;
};

// front processes the raw input; back sees the raw input (delayed to stay
// aligned with front's declared latency) followed by front's output, trimmed
// to back's channel count.
class Cascade final : public Suppressor {
 public:
  Cascade(SuppressorPtr front, SuppressorPtr back)
      : front_(std::move(front)), back_(std::move(back)) {
    if (!front_ || !back_) throw ConfigError("cascade: both stages are required");
    if (back_->input_channels() > front_->input_channels() + 1) {
      throw ConfigError("cascade: back stage wants " +
                        std::to_string(back_->input_channels()) +
                        " channels, only raw input plus the front output exist");
    }
  }

  void init(const StftConfig& stft, int sample_rate) override {
    front_->init(stft, sample_rate);
    back_->init(stft, sample_rate);
    Suppressor::init(stft, sample_rate);
  }

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    auto front_out = front_->process(channels);

    std::vector<double> raw = channels[0];
    const std::size_t lag = front_->latency_frames();
    if (lag > 0) {
      raw_fifo_.push_back(channels[0]);
      if (raw_fifo_.size() > lag) {
        raw = raw_fifo_.front();
        raw_fifo_.erase(raw_fifo_.begin());
      } else {
        raw.assign(stft_.hop, 0.0);
      }
    }

    std::vector<std::vector<double>> back_in;
    back_in.push_back(std::move(raw));
    back_in.push_back(std::move(front_out));
    back_in.resize(back_->input_channels());
    return back_->process(back_in);
  }

  void reset() override {
    front_->reset();
    back_->reset();
    raw_fifo_.clear();
  }
  std::size_t input_channels() const override { return front_->input_channels(); }
  std::size_t latency_frames() const override {
    return front_->latency_frames() + back_->latency_frames();
  }
  std::string name() const override {
    return "cascade(" + front_->name() + "," + back_->name() + ")";
  }
  double last_erle_db() const override {
    const double f = front_->last_erle_db();
    return std::isnan(f) ? back_->last_erle_db() : f;
  }

 private:
  SuppressorPtr front_;
  SuppressorPtr back_;
  std::vector<std::vector<double>> raw_fifo_;
};

}  // namespace detail

inline SuppressorPtr make_passthrough() { return std::make_unique<detail::Passthrough>(); }

inline SuppressorPtr make_channel_echo(std::size_t channel, std::size_t n_channels) {
  return std::make_unique<detail::ChannelEcho>(channel, n_channels);
}

inline SuppressorPtr make_scripted(TimeSignal script) {
  return std::make_unique<detail::Scripted>(std::move(script));
}

inline SuppressorPtr make_gain_limiter(double max_gain, double smoothing = 0.95) {
  return std::make_unique<detail::GainLimiter>(max_gain, smoothing);
}

inline SuppressorPtr make_notch(std::vector<double> freqs_hz, double q = 30.0) {
  return std::make_unique<detail::NotchBank>(std::move(freqs_hz), q);
}

inline SuppressorPtr make_cascade(SuppressorPtr front, SuppressorPtr back) {
  return std::make_unique<detail::Cascade>(std::move(front), std::move(back));
}

}  // namespace ahs
