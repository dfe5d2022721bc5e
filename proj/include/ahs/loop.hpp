#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/convolve.hpp"
#include "ahs/nonlinearity.hpp"
#include "ahs/rir.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"
#include "ahs/suppressor.hpp"

namespace ahs {

// Divergent loops are kept finite by hard-limiting microphone samples here;
// the limiter engaging is reported per frame.
inline constexpr double kLoopSaturationLimit = 10.0;

// Frame RMS levels at or below this count as inactive when scaling
// components to a requested SPR or SNR.
inline constexpr double kActiveFloorDbfs = -40.0;

// A step change of the amplification gain: from time_s onward the loop uses
// this gain, until a later breakpoint takes over.
struct GainBreakpoint {
  double time_s = 0.0;
  double gain = 1.0;
};

// One closed-loop scenario: target (and optional noise) as heard at the
// microphone, the room paths, and the playback chain parameters. spr_db and
// snr_db are calibration requests: when set, playback and noise are scaled
// so the active-region energy ratios against the target hit the requested
// values; when unset the components keep their natural level.
struct ScenarioConfig {
  TimeSignal target;
  std::optional<TimeSignal> noise;
  RirSet rirs;
  double gain = 1.0;
  std::vector<GainBreakpoint> gain_schedule;  // step interpolation; empty keeps gain fixed
  double system_delay = 0.1;  // seconds from suppressor output to loudspeaker
  NonlinearityModel nonlinearity = NonlinearityModel::identity();
  std::optional<double> spr_db;
  std::optional<double> snr_db;
  StftConfig stft;
  double duration = 0.0;  // seconds; 0 runs the full target

  int sample_rate() const { return target.sample_rate; }

  // Gain in force at time t: the last breakpoint at or before t, or the base
  // gain before the first one. The loop samples this at each hop boundary.
  double gain_at(double t) const {
    double g = gain;
    for (const GainBreakpoint& bp : gain_schedule) {
      if (bp.time_s > t) break;
      g = bp.gain;
    }
    return g;
  }

  std::size_t length() const {
    if (duration <= 0.0) return target.size();
    return static_cast<std::size_t>(std::llround(duration * target.sample_rate));
  }

  // The loop advances one hop at a time, so the system delay lands on the
  // nearest hop multiple, never below one hop (the emitted audio cannot
  // re-enter the frame that produced it).
  std::size_t delay_samples() const {
    const double hops = system_delay * target.sample_rate / static_cast<double>(stft.hop);
    const long long q = std::max(1ll, std::llround(hops));
    return static_cast<std::size_t>(q) * stft.hop;
  }

  void validate() const {
    stft.validate();
    nonlinearity.validate();
    if (target.empty()) throw ConfigError("scenario: target signal is empty");
    if (gain < 0.0) throw ConfigError("scenario: gain must be non-negative");
    for (std::size_t i = 0; i < gain_schedule.size(); ++i) {
      if (gain_schedule[i].gain < 0.0) {
        throw ConfigError("scenario: scheduled gain must be non-negative");
      }
      if (gain_schedule[i].time_s < 0.0) {
        throw ConfigError("scenario: gain breakpoint time must be non-negative");
      }
      if (i > 0 && gain_schedule[i].time_s <= gain_schedule[i - 1].time_s) {
        throw ConfigError("scenario: gain breakpoints must be strictly increasing in time");
      }
    }
    if (system_delay < 0.0) throw ConfigError("scenario: system delay must be non-negative");
    if (duration < 0.0) throw ConfigError("scenario: duration must be non-negative");
    if (length() == 0) throw ConfigError("scenario: zero-length run");
    if (length() > target.size()) {
      throw ConfigError("scenario: duration exceeds the target signal");
    }
    if (noise) {
      if (noise->sample_rate != target.sample_rate) {
        throw ConfigError("scenario: noise sample rate differs from target");
      }
      if (noise->size() < length()) {
        throw ConfigError("scenario: noise shorter than the run length");
      }
    }
    if (!rirs.h_loudspeaker.empty() &&
        rirs.h_loudspeaker.sample_rate != target.sample_rate) {
      throw ConfigError("scenario: loudspeaker path sample rate differs from target");
    }
  }
};

struct FrameStats {
  double rms = 0.0;
  double latency_frames = 0.0;
  double erle_db = std::numeric_limits<double>::quiet_NaN();
  bool saturated = false;
};

struct HowlingReport {
  bool detected = false;
  std::optional<std::size_t> onset_frame;
  double growth_rate_db_per_s = 0.0;
  std::optional<double> peak_frequency_hz;
};

struct StreamResult {
  TimeSignal mic;
  TimeSignal enhanced;
  TimeSignal loudspeaker;
  TimeSignal playback;
  std::vector<FrameStats> per_frame;
  HowlingReport howling;
};

struct TeacherForcedMixture {
  TimeSignal y;
  TimeSignal s;
  TimeSignal d;
  TimeSignal n;
};

namespace detail {

// The playback chain from enhancer output to microphone: amplify, pass
// through the loudspeaker nonlinearity, convolve with the room path, apply
// the SPR calibration factor. Streaming and teacher-forced paths run their
// blocks through this same object, which is what makes them bit-identical
// when fed identical sources.
class PlaybackChain {
 public:
  PlaybackChain(const TimeSignal& h, std::size_t hop, const NonlinearityModel& nl,
                double scale)
      : conv_(h.samples, hop), hop_(hop), nl_(nl), scale_(scale) {}

  void step(const std::vector<double>& delayed_src, double gain,
            std::vector<double>& drive, std::vector<double>& playback) {
    drive.resize(hop_);
    for (std::size_t i = 0; i < hop_; ++i) drive[i] = nl_(gain * delayed_src[i]);
    playback = conv_.process_block(drive);
    for (double& v : playback) v *= scale_;
  }

 private:
  PartitionedConvolver conv_;
  std::size_t hop_;
  NonlinearityModel nl_;
  double scale_;
};

// Gain applied to the hop block starting at sample index start.
inline double block_gain(const ScenarioConfig& cfg, std::size_t start) {
  if (cfg.gain_schedule.empty()) return cfg.gain;
  return cfg.gain_at(static_cast<double>(start) / cfg.sample_rate());
}

inline void delayed_block(const std::vector<double>& hist, std::size_t start,
                          std::size_t delay, std::vector<double>& block) {
  for (std::size_t i = 0; i < block.size(); ++i) {
    const long long idx = static_cast<long long>(start + i) - static_cast<long long>(delay);
    block[i] = idx >= 0 && idx < static_cast<long long>(hist.size())
                   ? hist[static_cast<std::size_t>(idx)]
                   : 0.0;
  }
}

struct ActiveRegion {
  std::vector<char> blocks;  // per hop block of the target
  double target_energy = 0.0;
  bool any = false;
};

inline ActiveRegion active_region(const TimeSignal& target, std::size_t n,
                                  std::size_t hop) {
  ActiveRegion region;
  const double floor_rms = db_to_linear(kActiveFloorDbfs);
  for (std::size_t start = 0; start < n; start += hop) {
    const std::size_t len = std::min(hop, n - start);
    double e = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      e += target.samples[start + i] * target.samples[start + i];
    }
    const bool active = std::sqrt(e / static_cast<double>(len)) > floor_rms;
    region.blocks.push_back(active ? 1 : 0);
    if (active) {
      region.target_energy += e;
      region.any = true;
    }
  }
  return region;
}

inline double active_energy(const std::vector<double>& sig, std::size_t n,
                            std::size_t hop, const ActiveRegion& region) {
  double e = 0.0;
  for (std::size_t b = 0; b < region.blocks.size(); ++b) {
    if (!region.blocks[b]) continue;
    const std::size_t start = b * hop;
    const std::size_t len = std::min(hop, n - start);
    for (std::size_t i = 0; i < len; ++i) e += sig[start + i] * sig[start + i];
  }
  return e;
}

struct LoopScales {
  double playback = 1.0;
  double noise = 1.0;
};

// Computes the SPR/SNR calibration factors on the active region of the
// target. The playback factor comes from a teacher-forced surrogate run
// (target in place of the enhancer output), so it depends only on the
// scenario, not on any suppressor.
inline LoopScales loop_scales(const ScenarioConfig& cfg) {
  LoopScales scales;
  if (!cfg.spr_db && !cfg.snr_db) return scales;

  const std::size_t n = cfg.length();
  const std::size_t hop = cfg.stft.hop;
  const ActiveRegion region = active_region(cfg.target, n, hop);

  if (cfg.spr_db) {
    if (!region.any) {
      throw DataError("scenario: target has no active region; cannot calibrate SPR");
    }
    PlaybackChain chain(cfg.rirs.h_loudspeaker, hop, cfg.nonlinearity, 1.0);
    const std::size_t delay = cfg.delay_samples();
    std::vector<double> src(hop), drive, playback;
    std::vector<double> d_raw;
    d_raw.reserve(region.blocks.size() * hop);
    for (std::size_t b = 0; b < region.blocks.size(); ++b) {
      delayed_block(cfg.target.samples, b * hop, delay, src);
      chain.step(src, block_gain(cfg, b * hop), drive, playback);
      d_raw.insert(d_raw.end(), playback.begin(), playback.end());
    }
    const double e_d = active_energy(d_raw, n, hop, region);
    if (e_d <= 0.0) {
      throw DataError("scenario: playback is silent on the active region; cannot calibrate SPR");
    }
    scales.playback =
        std::sqrt(region.target_energy / (e_d * std::pow(10.0, *cfg.spr_db / 10.0)));
  }

  if (cfg.snr_db && cfg.noise) {
    if (!region.any) {
      throw DataError("scenario: target has no active region; cannot calibrate SNR");
    }
    const double e_n = active_energy(cfg.noise->samples, n, hop, region);
    if (e_n <= 0.0) {
      throw DataError("scenario: noise is silent on the active region; cannot calibrate SNR");
    }
    scales.noise =
        std::sqrt(region.target_energy / (e_n * std::pow(10.0, *cfg.snr_db / 10.0)));
  }
  return scales;
}

template <typename Fn>
[[noreturn]] void rethrow_with_frame(const ahs::Error& e, std::size_t frame, Fn make) {
  throw make(std::string(e.what()) + " (loop frame " + std::to_string(frame) + ")");
}

// Frame RMS over the analysis span each STFT frame sees, zero padding
// counted toward the frame length.
inline std::vector<double> frame_rms(const TimeSignal& sig, const StftConfig& cfg) {
  const std::size_t frames = stft_frame_count(sig.size(), cfg);
  const long ps = static_cast<long>(cfg.pad_start());
  std::vector<double> rms(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const long start = static_cast<long>(k * cfg.hop) - ps;
    double e = 0.0;
    for (std::size_t i = 0; i < cfg.frame_len; ++i) {
      const long idx = start + static_cast<long>(i);
      if (idx >= 0 && idx < static_cast<long>(sig.size())) {
        e += sig.samples[idx] * sig.samples[idx];
      }
    }
    rms[k] = std::sqrt(e / static_cast<double>(cfg.frame_len));
  }
  return rms;
}

inline std::vector<double> rms_to_db(const std::vector<double>& rms) {
  std::vector<double> db(rms.size());
  for (std::size_t k = 0; k < rms.size(); ++k) {
    db[k] = std::max(-140.0, 20.0 * std::log10(rms[k] + 1e-12));
  }
  return db;
}

}  // namespace detail

// Flags sustained energy growth or a persistent dominant tone. A howl shows
// up either as frame RMS climbing at >= 3 dB/s consistently across at least
// half a second, or as one bin holding >= 50% of frame energy for >= 20
// consecutive frames while the level sits >= 10 dB above the first second's
// median.
inline HowlingReport detect_howling(const TimeSignal& sig, const StftConfig& cfg) {
  cfg.validate();
  if (sig.empty()) throw DataError("detect_howling: empty signal");

  HowlingReport report;
  const std::vector<double> db = detail::rms_to_db(detail::frame_rms(sig, cfg));
  const std::size_t frames = db.size();
  const double frame_dt = static_cast<double>(cfg.hop) / sig.sample_rate;

  // Ramp test on a one-second trailing-max envelope, so ringing loops whose
  // energy arrives in bursts still read as one climb. Candidate growth
  // regions run between two frame-over-frame rises of the envelope with no
  // drop of more than 3 dB in between; one qualifies as howling when it
  // rises at least 10 dB at a mean slope of at least 3 dB/s, no single
  // frame contributes more than half the rise, and each half of the region
  // contributes at least a fifth of it. The last two conditions separate
  // runaway growth, which climbs steadily, from a speech onset, which
  // delivers its whole rise at the front.
  const std::size_t hold = static_cast<std::size_t>(std::ceil(1.0 / frame_dt));
  std::vector<double> held(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const std::size_t lo = k + 1 >= hold ? k + 1 - hold : 0;
    double m = db[lo];
    for (std::size_t j = lo + 1; j <= k; ++j) m = std::max(m, db[j]);
    held[k] = m;
  }

  // The envelope's first second is warmup: the trailing max still runs over
  // a partial window there, so levels read low and the opening of the very
  // first utterance would register as a climb. Rises inside it do not anchor
  // growth regions.
  constexpr double kRiseStep = 0.02;  // dB; ignores plateau jitter
  std::vector<std::size_t> rises;
  std::vector<std::size_t> rise_ep;
  std::vector<double> rise_step;
  std::size_t ep = 0;
  for (std::size_t k = 1; k < frames; ++k) {
    const double d = held[k] - held[k - 1];
    if (d < -3.0) {
      ++ep;
    } else if (d > kRiseStep && k >= hold) {
      rises.push_back(k);
      rise_ep.push_back(ep);
      rise_step.push_back(d);
    }
  }

  std::optional<std::size_t> onset_ramp;
  double best_ramp = 0.0;
  double best_rise = 0.0;
  for (std::size_t a = 0; a < rises.size(); ++a) {
    double max_step = 0.0;
    for (std::size_t b = a + 1; b < rises.size(); ++b) {
      if (rise_ep[b] != rise_ep[a]) break;
      max_step = std::max(max_step, rise_step[b]);
      const double span = static_cast<double>(rises[b] - rises[a]) * frame_dt;
      if (span < 0.5) continue;
      const double rise = held[rises[b]] - held[rises[a]];
      if (rise < 10.0) continue;
      const double slope = rise / span;
      if (slope < 3.0) continue;
      if (max_step > 0.5 * rise) continue;
      const std::size_t mid = rises[a] + (rises[b] - rises[a]) / 2;
      const double half_a = held[mid] - held[rises[a]];
      const double half_b = held[rises[b]] - held[mid];
      if (half_a < 0.2 * rise || half_b < 0.2 * rise) continue;
      if (!onset_ramp) onset_ramp = rises[a] - 1;
      if (rise > best_rise) {
        best_rise = rise;
        best_ramp = slope;
      }
    }
  }

  // Tone test: dominant-bin runs at elevated level.
  const Spectrogram spec = stft(sig, cfg);
  std::vector<double> first_second;
  const std::size_t baseline_frames =
      std::min<std::size_t>(frames, static_cast<std::size_t>(std::llround(1.0 / frame_dt)));
  first_second.assign(db.begin(), db.begin() + static_cast<std::ptrdiff_t>(
                                                   std::max<std::size_t>(1, baseline_frames)));
  std::nth_element(first_second.begin(), first_second.begin() + first_second.size() / 2,
                   first_second.end());
  const double baseline_db = first_second[first_second.size() / 2];

  std::optional<std::size_t> onset_tone;
  std::size_t run = 0;
  std::size_t run_start = 0;
  std::size_t best_run_start = 0, best_run_len = 0;
  for (std::size_t k = 0; k < frames; ++k) {
    double total = 0.0, top = 0.0;
    for (std::size_t b = 0; b < spec.bins; ++b) {
      const double e = std::norm(spec.at(k, b));
      total += e;
      top = std::max(top, e);
    }
    const bool dominant = total > 0.0 && top >= 0.5 * total;
    const bool loud = db[k] >= baseline_db + 10.0;
    if (dominant && loud) {
      if (run == 0) run_start = k;
      ++run;
      if (run >= 20 && !onset_tone) onset_tone = run_start;
      if (run > best_run_len) {
        best_run_len = run;
        best_run_start = run_start;
      }
    } else {
      run = 0;
    }
  }

  report.detected = onset_ramp.has_value() || onset_tone.has_value();
  if (onset_ramp && onset_tone) {
    report.onset_frame = std::min(*onset_ramp, *onset_tone);
  } else if (onset_ramp) {
    report.onset_frame = *onset_ramp;
  } else if (onset_tone) {
    report.onset_frame = *onset_tone;
  }

  report.growth_rate_db_per_s = best_ramp;
  if (report.detected && report.growth_rate_db_per_s <= 0.0 && onset_tone) {
    // Dominant-tone detection without a measurable ramp: rate from the jump
    // over the baseline instead. The run sits above baseline + 10 dB and
    // after the baseline window, so this is positive.
    double run_db = 0.0;
    for (std::size_t k = 0; k < best_run_len; ++k) run_db += db[best_run_start + k];
    run_db /= static_cast<double>(best_run_len);
    const double t_run =
        (static_cast<double>(best_run_start) + static_cast<double>(best_run_len) / 2.0) *
        frame_dt;
    report.growth_rate_db_per_s = (run_db - baseline_db) / std::max(0.1, t_run - 0.5);
  }

  if (report.detected) {
    std::size_t loudest = *report.onset_frame;
    for (std::size_t k = loudest; k < frames; ++k) {
      if (db[k] > db[loudest]) loudest = k;
    }
    std::size_t top_bin = 0;
    for (std::size_t b = 1; b < spec.bins; ++b) {
      if (std::norm(spec.at(loudest, b)) > std::norm(spec.at(loudest, top_bin))) top_bin = b;
    }
    report.peak_frequency_hz = spec.bin_freq_hz(top_bin);
  }
  return report;
}

// Offline one-shot mixture: the playback component is driven by the clean
// target instead of the enhancer's recursive output, then everything is
// summed. Shares the playback chain with run_streaming block for block.
inline TeacherForcedMixture make_teacher_forced_mixture(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.length();
  const std::size_t hop = cfg.stft.hop;
  const std::size_t delay = cfg.delay_samples();
  const detail::LoopScales scales = detail::loop_scales(cfg);

  TeacherForcedMixture mix;
  const int rate = cfg.sample_rate();
  mix.s.sample_rate = rate;
  mix.s.samples.assign(cfg.target.samples.begin(),
                       cfg.target.samples.begin() + static_cast<std::ptrdiff_t>(n));

  mix.n.sample_rate = rate;
  mix.n.samples.assign(n, 0.0);
  if (cfg.noise) {
    for (std::size_t i = 0; i < n; ++i) {
      mix.n.samples[i] = scales.noise * cfg.noise->samples[i];
    }
  }

  detail::PlaybackChain chain(cfg.rirs.h_loudspeaker, hop, cfg.nonlinearity,
                              scales.playback);
  mix.d.sample_rate = rate;
  mix.d.samples.reserve(((n + hop - 1) / hop) * hop);
  std::vector<double> src(hop), drive, playback;
  for (std::size_t start = 0; start < n; start += hop) {
    detail::delayed_block(mix.s.samples, start, delay, src);
    chain.step(src, detail::block_gain(cfg, start), drive, playback);
    mix.d.samples.insert(mix.d.samples.end(), playback.begin(), playback.end());
  }
  mix.d.samples.resize(n);

  mix.y.sample_rate = rate;
  mix.y.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mix.y.samples[i] = mix.s.samples[i] + mix.n.samples[i] + mix.d.samples[i];
  }
  return mix;
}

// The closed loop, advanced one hop per iteration: the microphone block is
// target + noise + playback, the suppressor enhances it, and the enhanced
// audio re-enters the loop through the delay, gain, nonlinearity, and room
// path. Every sample the suppressor emits recirculates.
inline StreamResult run_streaming(const ScenarioConfig& cfg, Suppressor& suppressor) {
  cfg.validate();
  if (suppressor.input_channels() != 1) {
    throw ConfigError("run_streaming: the loop feeds exactly one microphone channel");
  }
  suppressor.init(cfg.stft, cfg.sample_rate());

  const std::size_t n = cfg.length();
  const std::size_t hop = cfg.stft.hop;
  const std::size_t hops = (n + hop - 1) / hop;
  const std::size_t delay = cfg.delay_samples();
  const detail::LoopScales scales = detail::loop_scales(cfg);

  detail::PlaybackChain chain(cfg.rirs.h_loudspeaker, hop, cfg.nonlinearity,
                              scales.playback);

  std::vector<double> emitted;
  emitted.reserve(hops * hop);
  std::vector<double> mic_all, enh_all, drive_all, play_all;
  mic_all.reserve(hops * hop);

  std::vector<double> src(hop), drive, playback;
  std::vector<std::vector<double>> mic_input(1, std::vector<double>(hop, 0.0));
  std::vector<double> erle_per_hop(hops, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> saturated_per_hop(hops, 0);

  for (std::size_t k = 0; k < hops; ++k) {
    const std::size_t start = k * hop;

    detail::delayed_block(emitted, start, delay, src);
    chain.step(src, detail::block_gain(cfg, start), drive, playback);

    std::vector<double>& mic = mic_input[0];
    bool clipped = false;
    for (std::size_t i = 0; i < hop; ++i) {
      const std::size_t t = start + i;
      const double tgt = t < n ? cfg.target.samples[t] : 0.0;
      const double noi = cfg.noise && t < n ? scales.noise * cfg.noise->samples[t] : 0.0;
      double v = tgt + noi + playback[i];
      if (v > kLoopSaturationLimit) {
        v = kLoopSaturationLimit;
        clipped = true;
      } else if (v < -kLoopSaturationLimit) {
        v = -kLoopSaturationLimit;
        clipped = true;
      }
      if (!std::isfinite(v)) {
        throw NumericError("run_streaming: loop diverged to a non-finite microphone sample",
                           static_cast<long>(k));
      }
      mic[i] = v;
    }
    saturated_per_hop[k] = clipped ? 1 : 0;

    std::vector<double> out;
    try {
      out = suppressor.process(mic_input);
    } catch (const TimeoutError&) {
      throw;
    } catch (const NumericError&) {
      throw;
    } catch (const ShapeError& e) {
      detail::rethrow_with_frame(e, k, [](const std::string& m) { return ShapeError(m); });
    } catch (const DataError& e) {
      detail::rethrow_with_frame(e, k, [](const std::string& m) { return DataError(m); });
    } catch (const ConfigError& e) {
      detail::rethrow_with_frame(e, k, [](const std::string& m) { return ConfigError(m); });
    } catch (const ProtocolError& e) {
      detail::rethrow_with_frame(e, k, [](const std::string& m) { return ProtocolError(m); });
    }
    if (out.size() != hop) {
      throw ShapeError("run_streaming: suppressor returned " + std::to_string(out.size()) +
                       " samples for a " + std::to_string(hop) + "-sample block (loop frame " +
                       std::to_string(k) + ")");
    }
    for (double v : out) {
      if (!std::isfinite(v)) {
        throw NumericError("run_streaming: suppressor output diverged to a non-finite sample",
                           static_cast<long>(k));
      }
    }
    erle_per_hop[k] = suppressor.last_erle_db();

    emitted.insert(emitted.end(), out.begin(), out.end());
    mic_all.insert(mic_all.end(), mic.begin(), mic.end());
    enh_all.insert(enh_all.end(), out.begin(), out.end());
    drive_all.insert(drive_all.end(), drive.begin(), drive.end());
    play_all.insert(play_all.end(), playback.begin(), playback.end());
  }

  StreamResult result;
  const int rate = cfg.sample_rate();
  auto take = [&](std::vector<double>& v) {
    v.resize(n);
    TimeSignal sig(std::move(v), rate);
    return sig;
  };
  result.mic = take(mic_all);
  result.enhanced = take(enh_all);
  result.loudspeaker = take(drive_all);
  result.playback = take(play_all);

  const std::size_t frames = stft_frame_count(n, cfg.stft);
  const std::vector<double> rms = detail::frame_rms(result.mic, cfg.stft);
  result.per_frame.resize(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    FrameStats& fs = result.per_frame[k];
    fs.rms = rms[k];
    fs.latency_frames = static_cast<double>(suppressor.latency_frames());
    if (k < hops) {
      fs.erle_db = erle_per_hop[k];
      fs.saturated = saturated_per_hop[k] != 0;
    }
  }

  result.howling = detect_howling(result.mic, cfg.stft);
  return result;
}

}  // namespace ahs
