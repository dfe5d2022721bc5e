#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/fft.hpp"
#include "ahs/stft.hpp"

namespace ahs {

// Per-frame, per-bin complex filter taps over a small set of neighbouring
// frames. Layout is row-major frames x bins x taps; tap t of entry (k, f)
// weights the input frame k + offsets[t] at bin f.
struct DeepFilterTensor {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t taps = 0;
  std::vector<fft::cplx> data;

  DeepFilterTensor() = default;
  DeepFilterTensor(std::size_t k, std::size_t f, std::size_t t)
      : frames(k), bins(f), taps(t), data(k * f * t, fft::cplx(0.0, 0.0)) {}

  fft::cplx& at(std::size_t frame, std::size_t bin, std::size_t tap) {
    return data[(frame * bins + bin) * taps + tap];
  }
  fft::cplx at(std::size_t frame, std::size_t bin, std::size_t tap) const {
    return data[(frame * bins + bin) * taps + tap];
  }
};

// Applies a time-varying multi-frame complex filter along the frame axis:
//
//   out(k, f) = sum_t filters(k, f, t) * spec(k + offsets[t], f)
//
// Frames referenced outside the spectrogram count as zero. The output keeps
// the input's STFT configuration and length bookkeeping.
inline Spectrogram deep_filter_apply(const Spectrogram& spec, const DeepFilterTensor& filters,
                                     const std::vector<int>& offsets) {
  if (filters.frames != spec.frames || filters.bins != spec.bins) {
    throw ShapeError("deep_filter_apply: filter tensor is " + std::to_string(filters.frames) +
                     "x" + std::to_string(filters.bins) + ", spectrogram is " +
                     std::to_string(spec.frames) + "x" + std::to_string(spec.bins));
  }
  if (offsets.size() != filters.taps) {
    throw ShapeError("deep_filter_apply: " + std::to_string(offsets.size()) +
                     " offsets for " + std::to_string(filters.taps) + " taps");
  }

  Spectrogram out = spec;
  for (auto& v : out.data) v = fft::cplx(0.0, 0.0);

  for (std::size_t k = 0; k < spec.frames; ++k) {
    for (std::size_t t = 0; t < filters.taps; ++t) {
      const long long src = static_cast<long long>(k) + offsets[t];
      if (src < 0 || src >= static_cast<long long>(spec.frames)) continue;
      const fft::cplx* in_row = spec.frame_ptr(static_cast<std::size_t>(src));
      fft::cplx* out_row = out.frame_ptr(k);
      for (std::size_t f = 0; f < spec.bins; ++f) {
        out_row[f] += filters.at(k, f, t) * in_row[f];
      }
    }
  }
  return out;
}

// Symmetric offset list -order..order with the identity tap in the middle.
inline std::vector<int> centered_offsets(int order) {
  if (order < 0) throw ConfigError("centered_offsets: order must be non-negative");
  std::vector<int> offsets;
  for (int t = -order; t <= order; ++t) offsets.push_back(t);
  return offsets;
}

}  // namespace ahs
