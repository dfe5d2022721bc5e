#include <catch2/catch_amalgamated.hpp>

#include "ahs/convolve.hpp"
#include "ahs/fft.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"

#include "helpers.hpp"

using namespace ahs;
using testutil::naive_dft;

TEST_CASE("fft matches naive DFT") {
  Rng rng(11);
  for (std::size_t n : {64u, 512u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    auto ref = naive_dft(x, n);
    auto got = fft::rfft(x, n);
    REQUIRE(got.size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      REQUIRE(std::abs(got[k] - ref[k]) < 1e-9 * n);
    }
  }
}

TEST_CASE("irfft inverts rfft") {
  Rng rng(12);
  std::vector<double> x(256);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  auto spec = fft::rfft(x, 256);
  auto back = fft::irfft(spec, 256);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(back[i] == Catch::Approx(x[i]).margin(1e-12));
}

TEST_CASE("stft of all-zero signal is all zero") {
  TimeSignal x{std::vector<double>(1024, 0.0), 16000};
  auto spec = stft(x, StftConfig{});
  for (const auto& v : spec.data) REQUIRE(std::abs(v) == 0.0);
}

TEST_CASE("stft of DC signal concentrates energy in bin 0") {
  // Rectangular analysis window: frame spectrum is the DFT of a constant.
  // (Tapered windows spread DC over their own mainlobe.)
  TimeSignal x{std::vector<double>(4096, 1.0), 16000};
  StftConfig cfg;
  cfg.window = Window::kRect;
  auto spec = stft(x, cfg);
  REQUIRE(spec.frames > 6);
  // interior frames: analysis window fully inside the signal
  for (std::size_t k = 2; k + 2 < spec.frames; ++k) {
    const double dc = std::abs(spec.at(k, 0));
    REQUIRE(dc > 0.0);
    for (std::size_t b = 1; b < spec.bins; ++b) {
      REQUIRE(std::abs(spec.at(k, b)) < 1e-9 * dc);
    }
  }
}

TEST_CASE("istft of zero spectrogram is zero") {
  StftConfig cfg;
  Spectrogram spec(5, cfg);
  auto x = istft(spec);
  REQUIRE(x.size() == spec.source_len);
  for (double v : x.samples) REQUIRE(v == 0.0);
}

TEST_CASE("perfect reconstruction on random signals, both profiles") {
  Rng rng(13);
  StftConfig deployable;
  deployable.fft_size = 128;
  deployable.frame_len = 128;
  deployable.hop = 64;
  for (const StftConfig& cfg : {StftConfig{}, deployable}) {
    for (std::size_t len : {1000u, 4096u, 777u}) {
      auto x = testutil::white_noise(len, rng);
      auto back = istft(stft(x, cfg));
      REQUIRE(back.size() == x.size());
      double peak = peak_abs(x);
      for (std::size_t i = 0; i < len; ++i) {
        REQUIRE(std::abs(back.samples[i] - x.samples[i]) < 1e-10 * peak);
      }
    }
  }
}

TEST_CASE("stft is linear") {
  Rng rng(14);
  StftConfig cfg;
  auto x = testutil::white_noise(2000, rng);
  auto y = testutil::white_noise(2000, rng);
  const double a = 2.25, b = -0.75;
  TimeSignal combo;
  combo.sample_rate = 16000;
  combo.samples.resize(2000);
  for (std::size_t i = 0; i < 2000; ++i) combo.samples[i] = a * x.samples[i] + b * y.samples[i];
  auto sc = stft(combo, cfg), sx = stft(x, cfg), sy = stft(y, cfg);
  double scale = 0.0;
  for (const auto& v : sc.data) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < sc.data.size(); ++i) {
    REQUIRE(std::abs(sc.data[i] - (a * sx.data[i] + b * sy.data[i])) < 1e-10 * scale);
  }
}

TEST_CASE("frame-level Parseval") {
  Rng rng(15);
  StftConfig cfg;
  auto x = testutil::white_noise(3000, rng);
  auto spec = stft(x, cfg);
  const auto win = cfg.make_window();
  const long ps = static_cast<long>(cfg.pad_start());
  for (std::size_t k = 0; k < spec.frames; ++k) {
    double time_energy = 0.0;
    for (std::size_t n = 0; n < cfg.frame_len; ++n) {
      const long idx = static_cast<long>(k * cfg.hop + n) - ps;
      const double v = (idx >= 0 && idx < static_cast<long>(x.size())) ? x.samples[idx] : 0.0;
      time_energy += v * win[n] * v * win[n];
    }
    // one-sided spectrum: interior bins count twice
    double spec_energy = std::norm(spec.at(k, 0)) + std::norm(spec.at(k, spec.bins - 1));
    for (std::size_t b = 1; b + 1 < spec.bins; ++b) spec_energy += 2.0 * std::norm(spec.at(k, b));
    spec_energy /= static_cast<double>(cfg.fft_size);
    REQUIRE(spec_energy == Catch::Approx(time_energy).epsilon(1e-9).margin(1e-12));
  }
}

TEST_CASE("one-hot bin synthesizes a windowed cosine") {
  StftConfig cfg;
  const std::size_t b = 37;
  Spectrogram spec(3, cfg);
  spec.at(1, b) = cplx(1.0, 0.0);

  auto x = istft(spec);
  REQUIRE(x.size() == 3 * cfg.hop);

  // Oracle: direct inverse DFT of the one-hot bin times the synthesis
  // window, valid on the region where overlap coverage is complete.
  const auto win = cfg.make_window();
  const long ps = static_cast<long>(cfg.pad_start());
  const long frame_base = 1 * static_cast<long>(cfg.hop) - ps;  // frame 1 start, signal time
  for (std::size_t n = 0; n < cfg.frame_len; ++n) {
    const long t = frame_base + static_cast<long>(n);
    if (t < static_cast<long>(cfg.hop) || t >= 2 * static_cast<long>(cfg.hop)) continue;
    const double expected = win[n] * 2.0 / cfg.fft_size *
                            std::cos(2.0 * std::numbers::pi * b * n / cfg.fft_size);
    REQUIRE(x.samples[t] == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("invalid stft configs are rejected") {
  StftConfig bad;
  bad.hop = 1024;  // hop > frame_len
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  StftConfig non_cola;
  non_cola.window = Window::kSqrtHann;
  non_cola.hop = non_cola.frame_len;  // no overlap: sqrt-hann cannot satisfy COLA
  REQUIRE_THROWS_AS(non_cola.validate(), ConfigError);

  StftConfig odd;
  odd.fft_size = 500;
  REQUIRE_THROWS_AS(odd.validate(), ConfigError);
}

TEST_CASE("convolve identity and hand-expanded cases") {
  TimeSignal x{{0.5, -1.0, 2.0, 0.25}, 16000};
  TimeSignal unit{{1.0}, 16000};
  auto y = convolve(x, unit);
  REQUIRE(y.samples == x.samples);

  TimeSignal a{{1.0, 2.0}, 16000};
  TimeSignal b{{1.0, 1.0}, 16000};
  auto c = convolve(a, b);
  REQUIRE(c.samples == std::vector<double>{1.0, 3.0, 2.0});
}

TEST_CASE("convolve matches the direct oracle, FFT path included") {
  Rng rng(16);
  auto x = testutil::white_noise(1000, rng);
  auto h = testutil::white_noise(257, rng);
  auto got = convolve(x, h);
  auto ref = testutil::naive_convolution(x.samples, h.samples);
  REQUIRE(got.size() == ref.size());
  double peak = 0.0;
  for (double v : ref) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < ref.size(); ++i) {
    REQUIRE(std::abs(got.samples[i] - ref[i]) < 1e-9 * peak);
  }

  // force the FFT path with a longer pair
  auto x2 = testutil::white_noise(4000, rng);
  auto h2 = testutil::white_noise(300, rng);
  auto got2 = convolve(x2, h2);
  auto ref2 = testutil::naive_convolution(x2.samples, h2.samples);
  double peak2 = 0.0;
  for (double v : ref2) peak2 = std::max(peak2, std::abs(v));
  for (std::size_t i = 0; i < ref2.size(); ++i) {
    REQUIRE(std::abs(got2.samples[i] - ref2[i]) < 1e-9 * peak2);
  }
}

TEST_CASE("convolve is commutative") {
  Rng rng(17);
  auto x = testutil::white_noise(400, rng);
  auto h = testutil::white_noise(129, rng);
  auto ab = convolve(x, h);
  auto ba = convolve(h, x);
  double peak = peak_abs(ab);
  REQUIRE(ab.size() == ba.size());
  for (std::size_t i = 0; i < ab.size(); ++i) {
    REQUIRE(std::abs(ab.samples[i] - ba.samples[i]) < 1e-9 * peak);
  }
}

TEST_CASE("convolve rejects mismatched sample rates") {
  TimeSignal x{{1.0}, 16000};
  TimeSignal h{{1.0}, 8000};
  REQUIRE_THROWS_AS(convolve(x, h), ConfigError);
}

TEST_CASE("partitioned convolver equals one-shot convolution") {
  Rng rng(18);
  auto x = testutil::white_noise(2048, rng);
  auto h = testutil::white_noise(700, rng);
  PartitionedConvolver conv(h.samples, 256);
  std::vector<double> streamed;
  for (std::size_t start = 0; start < x.size(); start += 256) {
    std::vector<double> block(x.samples.begin() + start, x.samples.begin() + start + 256);
    auto out = conv.process_block(block);
    streamed.insert(streamed.end(), out.begin(), out.end());
  }
  auto ref = testutil::naive_convolution(x.samples, h.samples);
  double peak = 0.0;
  for (double v : ref) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < streamed.size(); ++i) {
    REQUIRE(std::abs(streamed[i] - ref[i]) < 1e-9 * peak);
  }
}

TEST_CASE("delay prepends zeros") {
  TimeSignal x{{1.0}, 16000};
  auto d = delay(x, 2);
  REQUIRE(d.samples == std::vector<double>{0.0, 0.0, 1.0});

  TimeSignal y{{0.5, 0.25}, 16000};
  auto same = delay(y, 0);
  REQUIRE(same.samples == y.samples);

  REQUIRE_THROWS_AS(delay(y, -1), ConfigError);
}

TEST_CASE("delay shifts the cross-correlation peak") {
  Rng rng(19);
  auto x = testutil::white_noise(4000, rng);
  const long shift = 16000 / 10;  // 0.1 s
  auto d = delay(x, shift);
  REQUIRE(testutil::xcorr_peak_lag(x.samples, d.samples, shift + 100) == shift);
}
