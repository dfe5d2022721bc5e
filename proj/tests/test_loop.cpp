#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <cstddef>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ahs/loop.hpp"
#include "ahs/kalman_suppressor.hpp"
#include "ahs/suppressor.hpp"
#include "helpers.hpp"

using namespace ahs;
using testutil::synthetic_speech;
using testutil::white_noise;
using testutil::xcorr_peak_lag;

namespace {

StftConfig loop_stft() {
  StftConfig cfg;
  cfg.fft_size = 512;
  cfg.frame_len = 512;
  cfg.hop = 256;
  return cfg;
}

TimeSignal impulse(std::size_t len, double amp, int rate = 16000) {
  TimeSignal s(std::vector<double>(len, 0.0), rate);
  s.samples[0] = amp;
  return s;
}

RirSet single_tap_path(double amp = 1.0, int rate = 16000) {
  RirSet rirs;
  rirs.h_loudspeaker = TimeSignal(std::vector<double>{amp}, rate);
  return rirs;
}

ScenarioConfig scalar_toy(double gain, double target_amp, double seconds) {
  ScenarioConfig cfg;
  const int rate = 16000;
  cfg.target = impulse(static_cast<std::size_t>(seconds * rate), target_amp, rate);
  cfg.rirs = single_tap_path();
  cfg.gain = gain;
  cfg.system_delay = 0.16;  // ten hops at 16 kHz / hop 256
  cfg.stft = loop_stft();
  return cfg;
}

// y(t) = s(t) + g * y(t - lag), the closed loop collapsed to one scalar tap.
std::vector<double> scalar_recursion(const TimeSignal& s, double g, std::size_t lag) {
  std::vector<double> y(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    const double fb = t >= lag ? y[t - lag] : 0.0;
    y[t] = s.samples[t] + g * fb;
  }
  return y;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

class ThrowAtFrame : public Suppressor {
 public:
  ThrowAtFrame(std::size_t frame, bool numeric) : frame_(frame), numeric_(numeric) {}
  std::string name() const override { return "throw_at_frame"; }

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    if (count_ == frame_) {
      if (numeric_) {
        return std::vector<double>(stft().hop, std::numeric_limits<double>::quiet_NaN());
      }
      throw DataError("synthetic failure");
    }
    ++count_;
    return channels[0];
  }

  void reset() override { count_ = 0; }

 private:
  std::size_t frame_ = 0;
  bool numeric_ = false;
  std::size_t count_ = 0;
};

kalman::Config loop_kalman_cfg(std::size_t partitions = 2) {
  kalman::Config cfg;
  cfg.stft = loop_stft();
  cfg.partitions = partitions;
  return cfg;
}

}  // namespace

TEST_CASE("zero gain leaves the microphone as target plus scaled noise") {
  Rng rng(0x100f01);
  ScenarioConfig cfg;
  cfg.target = synthetic_speech(32000, rng, 0.1);
  cfg.noise = white_noise(32000, rng, 0.05);
  cfg.gain = 0.0;
  cfg.snr_db = 10.0;
  cfg.rirs = single_tap_path();
  cfg.stft = loop_stft();

  auto supp = make_passthrough();
  const StreamResult res = run_streaming(cfg, *supp);

  REQUIRE(res.mic.size() == cfg.target.size());
  const double c_n = detail::loop_scales(cfg).noise;
  for (std::size_t t = 0; t < res.mic.size(); ++t) {
    REQUIRE(res.playback.samples[t] == 0.0);
    REQUIRE(res.loudspeaker.samples[t] == 0.0);
    REQUIRE(res.mic.samples[t] == cfg.target.samples[t] + c_n * cfg.noise->samples[t]);
    REQUIRE(res.enhanced.samples[t] == res.mic.samples[t]);
  }
  REQUIRE_FALSE(res.howling.detected);
  REQUIRE(res.per_frame.size() == stft_frame_count(res.mic.size(), cfg.stft));
  for (const FrameStats& fs : res.per_frame) {
    REQUIRE(fs.latency_frames == 0.0);
    REQUIRE_FALSE(fs.saturated);
  }
}

TEST_CASE("unit impulse toy reproduces the scalar feedback recursion") {
  ScenarioConfig cfg = scalar_toy(1.2, 0.01, 4.0);
  REQUIRE(cfg.delay_samples() == 2560);

  auto supp = make_passthrough();
  const StreamResult res = run_streaming(cfg, *supp);

  const std::vector<double> oracle = scalar_recursion(cfg.target, 1.2, 2560);
  const double scale = max_abs(oracle);
  for (std::size_t t = 0; t < oracle.size(); ++t) {
    REQUIRE(std::abs(res.mic.samples[t] - oracle[t]) <= 1e-12 * scale);
  }

  for (std::size_t n = 0; n < 25; ++n) {
    const std::size_t t = n * 2560;
    if (t >= res.mic.size()) break;
    REQUIRE(res.mic.samples[t] == Catch::Approx(0.01 * std::pow(1.2, n)).margin(1e-9));
  }

  REQUIRE(res.howling.detected);
  REQUIRE(res.howling.onset_frame.has_value());
  const double per_trip = 20.0 * std::log10(1.2);  // dB gained per loop trip
  const double expected = per_trip / 0.16;
  REQUIRE(res.howling.growth_rate_db_per_s ==
          Catch::Approx(expected).epsilon(0.05));
}

TEST_CASE("half gain loop decays geometrically and is not flagged") {
  ScenarioConfig cfg = scalar_toy(0.5, 1.0, 4.0);

  auto supp = make_passthrough();
  const StreamResult res = run_streaming(cfg, *supp);

  const std::vector<double> oracle = scalar_recursion(cfg.target, 0.5, 2560);
  for (std::size_t t = 0; t < oracle.size(); ++t) {
    REQUIRE(std::abs(res.mic.samples[t] - oracle[t]) <= 1e-12);
  }
  REQUIRE(max_abs(res.mic.samples) <= 1.0 + 1e-12);
  REQUIRE_FALSE(res.howling.detected);
  for (const FrameStats& fs : res.per_frame) REQUIRE_FALSE(fs.saturated);
}

TEST_CASE("zero system delay still defers the loop by one hop") {
  ScenarioConfig cfg = scalar_toy(0.5, 1.0, 1.0);
  cfg.system_delay = 0.0;
  REQUIRE(cfg.delay_samples() == cfg.stft.hop);

  auto supp = make_passthrough();
  const StreamResult res = run_streaming(cfg, *supp);
  const std::vector<double> oracle = scalar_recursion(cfg.target, 0.5, cfg.stft.hop);
  for (std::size_t t = 0; t < oracle.size(); ++t) {
    REQUIRE(std::abs(res.mic.samples[t] - oracle[t]) <= 1e-12);
  }
}

TEST_CASE("teacher forced mixture components add up exactly") {
  Rng rng(0x100f02);
  ScenarioConfig cfg;
  cfg.target = synthetic_speech(48000, rng, 0.1);
  cfg.noise = white_noise(48000, rng, 0.02);
  cfg.rirs = single_tap_path();
  cfg.rirs.h_loudspeaker = white_noise(64, rng, 0.2);
  cfg.gain = 2.0;
  cfg.system_delay = 0.112;
  cfg.nonlinearity = NonlinearityModel::sigmoid(0.5);
  cfg.spr_db = 0.0;
  cfg.snr_db = 10.0;
  cfg.stft = loop_stft();

  const TeacherForcedMixture mix = make_teacher_forced_mixture(cfg);
  REQUIRE(mix.y.size() == cfg.target.size());
  REQUIRE(mix.s.size() == mix.y.size());
  REQUIRE(mix.d.size() == mix.y.size());
  REQUIRE(mix.n.size() == mix.y.size());
  for (std::size_t t = 0; t < mix.y.size(); ++t) {
    REQUIRE(mix.y.samples[t] == mix.s.samples[t] + mix.n.samples[t] + mix.d.samples[t]);
  }

  const std::size_t n = cfg.length();
  const std::size_t hop = cfg.stft.hop;
  const detail::ActiveRegion region = detail::active_region(cfg.target, n, hop);
  const double e_s = region.target_energy;
  const double e_d = detail::active_energy(mix.d.samples, n, hop, region);
  const double e_n = detail::active_energy(mix.n.samples, n, hop, region);
  REQUIRE(10.0 * std::log10(e_s / e_d) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(10.0 * std::log10(e_s / e_n) == Catch::Approx(10.0).margin(1e-9));
}

TEST_CASE("requesting the natural playback ratio leaves the mixture unscaled") {
  Rng rng(0x100f03);
  ScenarioConfig cfg;
  cfg.target = synthetic_speech(32000, rng, 0.1);
  cfg.rirs = single_tap_path();
  cfg.rirs.h_loudspeaker = white_noise(48, rng, 0.3);
  cfg.gain = 1.5;
  cfg.system_delay = 0.112;
  cfg.stft = loop_stft();

  const TeacherForcedMixture raw = make_teacher_forced_mixture(cfg);
  const std::size_t n = cfg.length();
  const std::size_t hop = cfg.stft.hop;
  const detail::ActiveRegion region = detail::active_region(cfg.target, n, hop);
  const double e_d = detail::active_energy(raw.d.samples, n, hop, region);
  cfg.spr_db = 10.0 * std::log10(region.target_energy / e_d);

  const TeacherForcedMixture scaled = make_teacher_forced_mixture(cfg);
  for (std::size_t t = 0; t < n; ++t) {
    REQUIRE(scaled.d.samples[t] ==
            Catch::Approx(raw.d.samples[t]).margin(1e-12 * (1.0 + std::abs(raw.d.samples[t]))));
  }
}

TEST_CASE("teacher forced playback lags the target by the loop delay") {
  Rng rng(0x100f04);
  ScenarioConfig cfg;
  cfg.target = white_noise(32000, rng, 0.1);
  cfg.rirs.h_loudspeaker = TimeSignal(std::vector<double>(256, 0.0), 16000);
  cfg.rirs.h_loudspeaker.samples[30] = 1.0;
  cfg.rirs.h_loudspeaker.samples[200] = 0.2;
  cfg.gain = 1.5;
  cfg.system_delay = 0.112;  // seven hops exactly
  cfg.stft = loop_stft();
  REQUIRE(cfg.delay_samples() == 1792);

  const TeacherForcedMixture mix = make_teacher_forced_mixture(cfg);
  const long lag = xcorr_peak_lag(mix.s.samples, mix.d.samples, 2200);
  REQUIRE(lag == 1792 + 30);
  REQUIRE(lag >= static_cast<long>(0.112 * 16000));
}

TEST_CASE("zero energy target with a finite component ratio is rejected") {
  ScenarioConfig cfg;
  cfg.target = TimeSignal(std::vector<double>(8192, 0.0), 16000);
  cfg.rirs = single_tap_path();
  cfg.stft = loop_stft();

  cfg.spr_db = 0.0;
  REQUIRE_THROWS_AS(make_teacher_forced_mixture(cfg), DataError);
  cfg.spr_db.reset();

  Rng rng(0x100f05);
  cfg.noise = white_noise(8192, rng, 0.1);
  cfg.snr_db = 10.0;
  REQUIRE_THROWS_AS(make_teacher_forced_mixture(cfg), DataError);
}

TEST_CASE("scenario configs are validated") {
  Rng rng(0x100f06);
  ScenarioConfig cfg;
  cfg.target = white_noise(8192, rng, 0.1);
  cfg.rirs = single_tap_path();
  cfg.stft = loop_stft();

  SECTION("negative gain") {
    cfg.gain = -0.5;
    REQUIRE_THROWS_AS(make_teacher_forced_mixture(cfg), ConfigError);
  }
  SECTION("duration beyond the target") {
    cfg.duration = 2.0;
    REQUIRE_THROWS_AS(make_teacher_forced_mixture(cfg), ConfigError);
  }
  SECTION("noise shorter than the run") {
    cfg.noise = white_noise(1024, rng, 0.1);
    REQUIRE_THROWS_AS(make_teacher_forced_mixture(cfg), ConfigError);
  }
  SECTION("noise sample rate mismatch") {
    cfg.noise = white_noise(8192, rng, 0.1, 48000);
    REQUIRE_THROWS_AS(make_teacher_forced_mixture(cfg), ConfigError);
  }
  SECTION("empty target") {
    cfg.target = TimeSignal();
    auto supp = make_passthrough();
    REQUIRE_THROWS_AS(run_streaming(cfg, *supp), ConfigError);
  }
}

TEST_CASE("oracle suppressor streaming matches the teacher forced mixture exactly") {
  Rng rng(0x100f07);
  for (int rep = 0; rep < 3; ++rep) {
    ScenarioConfig cfg;
    cfg.target = synthetic_speech(32000 + 4096 * rep, rng, 0.1);
    cfg.noise = white_noise(cfg.target.size(), rng, 0.03);
    cfg.rirs.h_loudspeaker = white_noise(128, rng, 0.2);
    cfg.gain = 1.0 + 0.4 * rep;
    cfg.system_delay = 0.112 + 0.016 * rep;
    cfg.nonlinearity = rep % 2 == 0 ? NonlinearityModel::sigmoid(0.6)
                                    : NonlinearityModel::hard_clip(0.7);
    cfg.spr_db = -3.0 + rep;
    cfg.snr_db = 15.0;
    cfg.stft = loop_stft();

    const TeacherForcedMixture mix = make_teacher_forced_mixture(cfg);
    auto oracle = make_scripted(mix.s);
    const StreamResult res = run_streaming(cfg, *oracle);

    REQUIRE(res.mic.samples == mix.y.samples);
    REQUIRE(res.playback.samples == mix.d.samples);
    REQUIRE(res.enhanced.samples == mix.s.samples);
  }
}

TEST_CASE("streaming runs are deterministic") {
  Rng rng(0x100f08);
  ScenarioConfig cfg;
  cfg.target = synthetic_speech(24576, rng, 0.1);
  cfg.rirs.h_loudspeaker = white_noise(96, rng, 0.15);
  cfg.gain = 1.2;
  cfg.system_delay = 0.112;
  cfg.nonlinearity = NonlinearityModel::sigmoid(0.8);
  cfg.stft = loop_stft();

  auto k1 = make_kalman_suppressor(loop_kalman_cfg(), cfg.delay_samples());
  auto k2 = make_kalman_suppressor(loop_kalman_cfg(), cfg.delay_samples());
  const StreamResult a = run_streaming(cfg, *k1);
  const StreamResult b = run_streaming(cfg, *k2);

  REQUIRE(a.mic.samples == b.mic.samples);
  REQUIRE(a.enhanced.samples == b.enhanced.samples);
  REQUIRE(a.loudspeaker.samples == b.loudspeaker.samples);
  REQUIRE(a.playback.samples == b.playback.samples);
  REQUIRE(a.howling.detected == b.howling.detected);
  REQUIRE(a.per_frame.size() == b.per_frame.size());
  for (std::size_t k = 0; k < a.per_frame.size(); ++k) {
    REQUIRE(a.per_frame[k].rms == b.per_frame[k].rms);
  }
}

TEST_CASE("later target samples cannot influence earlier loop output") {
  Rng rng(0x100f09);
  const std::size_t split = 16384;
  ScenarioConfig cfg;
  cfg.target = synthetic_speech(24576, rng, 0.1);
  cfg.rirs.h_loudspeaker = white_noise(96, rng, 0.15);
  cfg.gain = 1.1;
  cfg.system_delay = 0.112;
  cfg.stft = loop_stft();

  ScenarioConfig altered = cfg;
  Rng tail_rng(0x100f0a);
  for (std::size_t t = split; t < altered.target.size(); ++t) {
    altered.target.samples[t] = 0.2 * tail_rng.normal();
  }

  auto k1 = make_kalman_suppressor(loop_kalman_cfg(), cfg.delay_samples());
  auto k2 = make_kalman_suppressor(loop_kalman_cfg(), cfg.delay_samples());
  const StreamResult a = run_streaming(cfg, *k1);
  const StreamResult b = run_streaming(altered, *k2);

  for (std::size_t t = 0; t < split; ++t) {
    REQUIRE(a.mic.samples[t] == b.mic.samples[t]);
    REQUIRE(a.enhanced.samples[t] == b.enhanced.samples[t]);
  }
}

TEST_CASE("suppressor failures surface with the loop frame index") {
  Rng rng(0x100f0b);
  ScenarioConfig cfg;
  cfg.target = white_noise(8192, rng, 0.1);
  cfg.rirs = single_tap_path();
  cfg.stft = loop_stft();

  SECTION("thrown errors carry the frame") {
    ThrowAtFrame supp(7, false);
    REQUIRE_THROWS_MATCHES(run_streaming(cfg, supp), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("loop frame 7")));
  }
  SECTION("non-finite output reports the onset frame") {
    ThrowAtFrame supp(5, true);
    try {
      run_streaming(cfg, supp);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      REQUIRE(e.frame() == 5);
    }
  }
}

TEST_CASE("howling detector classifies canonical signals") {
  const StftConfig cfg = loop_stft();

  SECTION("constant level speech is clean") {
    Rng rng(0x100f0c);
    const TimeSignal speech = synthetic_speech(64000, rng, 0.1);
    REQUIRE_FALSE(detect_howling(speech, cfg).detected);
  }

  SECTION("silence is clean") {
    const TimeSignal quiet(std::vector<double>(32000, 0.0), 16000);
    REQUIRE_FALSE(detect_howling(quiet, cfg).detected);
  }

  SECTION("a level step is not growth") {
    Rng rng(0x100f0d);
    TimeSignal sig = white_noise(64000, rng, 0.001);
    Rng rng2(0x100f0e);
    for (std::size_t t = 16000; t < sig.size(); ++t) {
      sig.samples[t] = 0.2 * rng2.normal();
    }
    REQUIRE_FALSE(detect_howling(sig, cfg).detected);
  }

  SECTION("an exponentially growing tone is howling") {
    const int rate = 16000;
    const std::size_t len = 5 * rate;
    TimeSignal sig(std::vector<double>(len, 0.0), rate);
    const double growth_db_per_s = 6.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double sec = static_cast<double>(t) / rate;
      const double amp = 1e-3 * std::pow(10.0, growth_db_per_s * sec / 20.0);
      sig.samples[t] = amp * std::sin(2.0 * std::numbers::pi * 2000.0 * sec);
    }
    const HowlingReport rep = detect_howling(sig, cfg);
    REQUIRE(rep.detected);
    REQUIRE(rep.onset_frame.has_value());
    REQUIRE(rep.growth_rate_db_per_s == Catch::Approx(6.0).epsilon(0.1));
    REQUIRE(rep.peak_frequency_hz.has_value());
    REQUIRE(std::abs(*rep.peak_frequency_hz - 2000.0) <= 16000.0 / 512.0 + 1e-9);
  }

  SECTION("a sustained dominant tone above the floor is howling") {
    const int rate = 16000;
    const std::size_t len = 4 * rate;
    Rng rng(0x100f0f);
    TimeSignal sig = white_noise(len, rng, 0.001);
    for (std::size_t t = 2 * rate; t < len; ++t) {
      const double sec = static_cast<double>(t) / rate;
      sig.samples[t] += 0.5 * std::sin(2.0 * std::numbers::pi * 1500.0 * sec);
    }
    const HowlingReport rep = detect_howling(sig, cfg);
    REQUIRE(rep.detected);
    REQUIRE(rep.growth_rate_db_per_s > 0.0);
    REQUIRE(rep.peak_frequency_hz.has_value());
    REQUIRE(std::abs(*rep.peak_frequency_hz - 1500.0) <= 16000.0 / 512.0 + 1e-9);
  }

  SECTION("empty input is rejected") {
    REQUIRE_THROWS_AS(detect_howling(TimeSignal(), cfg), DataError);
  }
}

TEST_CASE("kalman suppressor keeps a hot loop bounded where passthrough howls") {
  Rng rng(0x100f10);
  ScenarioConfig cfg;
  cfg.target = synthetic_speech(6 * 16000, rng, 0.1);
  cfg.rirs = single_tap_path();
  cfg.gain = 1.2;
  cfg.system_delay = 0.16;
  cfg.stft = loop_stft();

  auto pass = make_passthrough();
  const StreamResult runaway = run_streaming(cfg, *pass);
  REQUIRE(runaway.howling.detected);
  bool saturated = false;
  for (const FrameStats& fs : runaway.per_frame) saturated = saturated || fs.saturated;
  REQUIRE(saturated);

  auto kalman = make_kalman_suppressor(loop_kalman_cfg(), cfg.delay_samples());
  const StreamResult held = run_streaming(cfg, *kalman);
  REQUIRE_FALSE(held.howling.detected);
  for (const FrameStats& fs : held.per_frame) REQUIRE_FALSE(fs.saturated);
  REQUIRE(max_abs(held.mic.samples) < kLoopSaturationLimit);

  double tail = 0.0;
  const std::size_t tail_start = held.enhanced.size() - 16000;
  for (std::size_t t = tail_start; t < held.enhanced.size(); ++t) {
    tail += held.enhanced.samples[t] * held.enhanced.samples[t];
  }
  REQUIRE(std::sqrt(tail / 16000.0) < 1.0);
}

TEST_CASE("gain schedule switches the loop gain at hop boundaries") {
  SECTION("single breakpoint at zero overrides the base gain") {
    ScenarioConfig fixed = scalar_toy(0.5, 1.0, 2.0);
    ScenarioConfig scheduled = fixed;
    scheduled.gain = 99.0;
    scheduled.gain_schedule = {{0.0, 0.5}};

    auto a = make_passthrough();
    auto b = make_passthrough();
    const StreamResult res_fixed = run_streaming(fixed, *a);
    const StreamResult res_sched = run_streaming(scheduled, *b);
    REQUIRE(res_sched.mic.samples == res_fixed.mic.samples);
    REQUIRE(res_sched.playback.samples == res_fixed.playback.samples);
  }

  SECTION("gain_at steps exactly on the breakpoint") {
    ScenarioConfig cfg = scalar_toy(0.0, 0.01, 4.0);
    cfg.gain_schedule = {{2.0, 1.2}};
    REQUIRE(cfg.gain_at(0.0) == 0.0);
    REQUIRE(cfg.gain_at(1.999) == 0.0);
    REQUIRE(cfg.gain_at(2.0) == 1.2);
    REQUIRE(cfg.gain_at(3.5) == 1.2);
  }

  SECTION("loop stays silent before the breakpoint and grows after it") {
    ScenarioConfig cfg = scalar_toy(0.0, 0.01, 4.0);
    cfg.target = TimeSignal(std::vector<double>(cfg.target.size(), 0.01), 16000);
    cfg.gain_schedule = {{2.0, 1.2}};

    auto pass = make_passthrough();
    const StreamResult res = run_streaming(cfg, *pass);
    const std::size_t switch_at = 2 * 16000;
    for (std::size_t t = 0; t < switch_at; ++t) {
      REQUIRE(res.mic.samples[t] == cfg.target.samples[t]);
    }
    double late = 0.0;
    for (std::size_t t = 3 * 16000; t < res.mic.size(); ++t) {
      late = std::max(late, std::abs(res.mic.samples[t]));
    }
    REQUIRE(late > 0.05);
  }

  SECTION("teacher forcing honours the schedule bit-exactly") {
    Rng rng(0x5c4ed);
    ScenarioConfig cfg;
    cfg.target = synthetic_speech(48000, rng, 0.1);
    cfg.rirs.h_loudspeaker = white_noise(96, rng, 0.3);
    cfg.gain = 0.8;
    cfg.gain_schedule = {{1.0, 1.6}, {2.0, 2.4}};
    cfg.system_delay = 0.112;
    cfg.nonlinearity = NonlinearityModel::sigmoid(0.6);
    cfg.stft = loop_stft();

    const TeacherForcedMixture mix = make_teacher_forced_mixture(cfg);
    auto oracle = make_scripted(mix.s);
    const StreamResult res = run_streaming(cfg, *oracle);
    REQUIRE(res.mic.samples == mix.y.samples);
    REQUIRE(res.playback.samples == mix.d.samples);
  }

  SECTION("breakpoints out of order are rejected") {
    ScenarioConfig cfg = scalar_toy(1.0, 0.01, 1.0);
    cfg.gain_schedule = {{1.0, 1.0}, {0.5, 2.0}};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.gain_schedule = {{0.5, -1.0}};
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  }
}
