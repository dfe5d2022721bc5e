#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/rng.hpp"
#include "ahs/signal.hpp"

namespace ahs {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double distance_to(const Vec3& o) const {
    const double dx = x - o.x, dy = y - o.y, dz = z - o.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }
};

struct RoomSpec {
  Vec3 dimensions{5.0, 4.0, 3.0};  // meters
  double rt60 = 0.0;               // seconds
  double speed_of_sound = 343.0;   // m/s
  std::size_t rir_length = 0;      // samples; 0 selects rt60 * fs + 1024
  int sample_rate = 16000;

  double volume() const { return dimensions.x * dimensions.y * dimensions.z; }
  double surface() const {
    return 2.0 * (dimensions.x * dimensions.y + dimensions.x * dimensions.z +
                  dimensions.y * dimensions.z);
  }

  std::size_t effective_length() const {
    if (rir_length > 0) return rir_length;
    return static_cast<std::size_t>(std::llround(rt60 * sample_rate)) + 1024;
  }

  // Uniform frequency-independent wall reflection coefficient from rt60 via
  // Eyring: alpha = 1 - exp(-0.161 V / (S T)), beta = sqrt(1 - alpha).
  double reflection_coefficient() const {
    if (rt60 <= 0.0) return 0.0;
    const double beta = std::exp(-0.0805 * volume() / (surface() * rt60));
    if (!(beta > 0.0) || beta > 1.0) {
      throw ConfigError("rt60 incompatible with room size: reflection coefficient out of (0, 1]");
    }
    return beta;
  }

  void validate() const {
    if (dimensions.x <= 0.0 || dimensions.y <= 0.0 || dimensions.z <= 0.0) {
      throw ConfigError("room dimensions must be positive");
    }
    if (rt60 < 0.0) throw ConfigError("rt60 must be non-negative");
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  }

  bool contains(const Vec3& p) const {
    return p.x > 0.0 && p.x < dimensions.x && p.y > 0.0 && p.y < dimensions.y &&
           p.z > 0.0 && p.z < dimensions.z;
  }
};

namespace detail {

// Fixed pseudo-random sign for a reflected image, keyed by its lattice
// coordinates. The direct path (all indices zero) is handled by the caller.
inline double image_sign(int mx, int my, int mz, int q, int j, int k) {
  auto u = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)); };
  std::uint64_t h = Rng::mix(u(mx));
  h = Rng::mix(h ^ u(my));
  h = Rng::mix(h ^ u(mz));
  h = Rng::mix(h ^ u(q * 4 + j * 2 + k + 1));
  return (h & 1ull) ? 1.0 : -1.0;
}

}  // namespace detail

// Room impulse response on the Allen-Berkley mirror-image lattice. Fractional
// delays are rounded to the nearest sample. Each image at distance d
// contributes sign * exp(-3 ln10 * d / (c * rt60)) / (4 pi d), i.e. the
// absorption accrues along the propagation path at the diffuse rate for the
// room's rt60, and every reflected image carries a fixed pseudo-random sign.
// The Schroeder energy decay of the result reaches -60 dB at rt60.
// Deterministic for fixed inputs.
inline TimeSignal generate_rir(const RoomSpec& room, const Vec3& source, const Vec3& mic) {
  room.validate();
  if (!room.contains(source) || !room.contains(mic)) {
    throw ConfigError("generate_rir: source and mic must lie strictly inside the room");
  }
  if (source.distance_to(mic) <= 0.0) {
    throw ConfigError("generate_rir: source and mic coincide");
  }

  const double beta = room.reflection_coefficient();
  const double fs = room.sample_rate;
  const double c = room.speed_of_sound;
  const std::size_t len = room.effective_length();

  TimeSignal h;
  h.sample_rate = room.sample_rate;
  h.samples.assign(len, 0.0);

  const double max_dist = c * static_cast<double>(len) / fs;
  const Vec3& L = room.dimensions;

  if (beta == 0.0) {
    const double d = source.distance_to(mic);
    const std::size_t tap = static_cast<std::size_t>(std::llround(d / c * fs));
    if (tap < len) h.samples[tap] = 1.0 / (4.0 * std::numbers::pi * d);
    return h;
  }

  const int n1 = static_cast<int>(std::ceil(max_dist / (2.0 * L.x)));
  const int n2 = static_cast<int>(std::ceil(max_dist / (2.0 * L.y)));
  const int n3 = static_cast<int>(std::ceil(max_dist / (2.0 * L.z)));

  const double atten_per_meter = 3.0 * std::numbers::ln10 / (c * room.rt60);

  for (int mx = -n1; mx <= n1; ++mx) {
    for (int my = -n2; my <= n2; ++my) {
      for (int mz = -n3; mz <= n3; ++mz) {
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              const double ix = (1 - 2 * q) * source.x + 2.0 * mx * L.x - mic.x;
              const double iy = (1 - 2 * j) * source.y + 2.0 * my * L.y - mic.y;
              const double iz = (1 - 2 * k) * source.z + 2.0 * mz * L.z - mic.z;
              const double d = std::sqrt(ix * ix + iy * iy + iz * iz);
              const long tap = std::llround(d / c * fs);
              if (tap < 0 || tap >= static_cast<long>(len)) continue;
              const bool direct = mx == 0 && my == 0 && mz == 0 && q == 0 && j == 0 && k == 0;
              const double sign = direct ? 1.0 : detail::image_sign(mx, my, mz, q, j, k);
              h.samples[tap] +=
                  sign * std::exp(-atten_per_meter * d) / (4.0 * std::numbers::pi * d);
            }
          }
        }
      }
    }
  }
  return h;
}

struct RirGeometry {
  Vec3 room_dims;
  double rt60 = 0.0;
  Vec3 mic, loudspeaker, talker, noise_source;
};

// One draw of the acoustic scene: loudspeaker->mic, talker->mic and noise
// source->mic responses sharing a room and a microphone.
struct RirSet {
  TimeSignal h_loudspeaker;
  TimeSignal h_nearend;
  TimeSignal h_noise;
  RirGeometry geometry;
};

struct RirSamplingRanges {
  Vec3 room_min{3.0, 3.0, 2.5};
  Vec3 room_max{10.0, 10.0, 4.0};
  double rt60_min = 0.0;
  double rt60_max = 0.6;
  double wall_clearance = 0.2;     // meters kept from every wall
  double min_source_mic_dist = 0.3;
  int sample_rate = 16000;
  int max_attempts = 1000;

  void validate() const {
    if (room_min.x > room_max.x || room_min.y > room_max.y || room_min.z > room_max.z) {
      throw ConfigError("rir sampling: room_min exceeds room_max");
    }
    if (rt60_min > rt60_max || rt60_min < 0.0) throw ConfigError("rir sampling: bad rt60 range");
    if (2.0 * wall_clearance >= room_min.x || 2.0 * wall_clearance >= room_min.y ||
        2.0 * wall_clearance >= room_min.z) {
      throw ConfigError("rir sampling: wall clearance leaves no interior");
    }
  }
};

// Deterministic given the generator state. Draw order is fixed: room, rt60,
// mic, loudspeaker, talker, noise source.
inline RirSet sample_rir_set(Rng& rng, const RirSamplingRanges& ranges = {}) {
  ranges.validate();

  RoomSpec room;
  room.sample_rate = ranges.sample_rate;
  room.dimensions = Vec3{rng.uniform(ranges.room_min.x, ranges.room_max.x),
                         rng.uniform(ranges.room_min.y, ranges.room_max.y),
                         rng.uniform(ranges.room_min.z, ranges.room_max.z)};
  room.rt60 = rng.uniform(ranges.rt60_min, ranges.rt60_max);

  auto draw_position = [&]() {
    const double cl = ranges.wall_clearance;
    return Vec3{rng.uniform(cl, room.dimensions.x - cl),
                rng.uniform(cl, room.dimensions.y - cl),
                rng.uniform(cl, room.dimensions.z - cl)};
  };

  const Vec3 mic = draw_position();
  auto draw_source = [&]() {
    for (int attempt = 0; attempt < ranges.max_attempts; ++attempt) {
      Vec3 p = draw_position();
      if (p.distance_to(mic) >= ranges.min_source_mic_dist) return p;
    }
    throw ConfigError("sample_rir_set: could not satisfy source-mic separation");
  };

  RirSet set;
  set.geometry.room_dims = room.dimensions;
  set.geometry.rt60 = room.rt60;
  set.geometry.mic = mic;
  set.geometry.loudspeaker = draw_source();
  set.geometry.talker = draw_source();
  set.geometry.noise_source = draw_source();
  set.h_loudspeaker = generate_rir(room, set.geometry.loudspeaker, mic);
  set.h_nearend = generate_rir(room, set.geometry.talker, mic);
  set.h_noise = generate_rir(room, set.geometry.noise_source, mic);
  return set;
}

}  // namespace ahs
