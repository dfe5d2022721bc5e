#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/fft.hpp"
#include "ahs/stft.hpp"

namespace ahs {

// Frame-synchronous features over a microphone spectrogram Y and an error
// (pre-enhanced) spectrogram E. All matrices are row-major with one row per
// frame.
struct FeatureSet {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t context = 0;

  // log(|X|^2 + 1e-12), standardized per bin over the utterance.
  std::vector<double> lps_y;
  std::vector<double> lps_e;

  // Row f holds the normalized inner products of frame f with frames
  // f-context .. f+context; the middle column is the self term.
  std::vector<double> temporal_corr_y;
  std::vector<double> temporal_corr_e;

  // Row f holds, for each adjacent bin pair (b, b+1), the normalized inner
  // product of the two bin tracks over frames f-context .. f+context.
  std::vector<double> freq_corr_y;
  std::vector<double> freq_corr_e;

  // Per-frame Gram matrix of the two channels, stored row-major as
  // [<Y,Y>, <Y,E>, <E,Y>, <E,E>] with <A,B> = sum_b A(b) conj(B(b)).
  std::vector<std::array<fft::cplx, 4>> channel_cov;

  std::size_t temporal_cols() const { return 2 * context + 1; }
  std::size_t freq_cols() const { return bins > 0 ? bins - 1 : 0; }
};

namespace detail {

constexpr double kLpsFloor = 1e-12;
constexpr double kCorrFloor = 1e-12;

inline std::vector<double> standardized_lps(const Spectrogram& spec) {
  std::vector<double> lps(spec.frames * spec.bins, 0.0);
  for (std::size_t k = 0; k < spec.frames; ++k) {
    for (std::size_t b = 0; b < spec.bins; ++b) {
      lps[k * spec.bins + b] = std::log(std::norm(spec.at(k, b)) + kLpsFloor);
    }
  }
  for (std::size_t b = 0; b < spec.bins; ++b) {
    double mean = 0.0;
    for (std::size_t k = 0; k < spec.frames; ++k) mean += lps[k * spec.bins + b];
    mean /= static_cast<double>(spec.frames);
    double var = 0.0;
    for (std::size_t k = 0; k < spec.frames; ++k) {
      const double d = lps[k * spec.bins + b] - mean;
      var += d * d;
    }
    var /= static_cast<double>(spec.frames);
    const double sigma = std::sqrt(var);
    for (std::size_t k = 0; k < spec.frames; ++k) {
      double& v = lps[k * spec.bins + b];
      v = sigma > kCorrFloor ? (v - mean) / sigma : 0.0;
    }
  }
  return lps;
}

inline double normalized_inner(const fft::cplx* u, const fft::cplx* v, std::size_t n) {
  fft::cplx dot(0.0, 0.0);
  double nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += u[i] * std::conj(v[i]);
    nu += std::norm(u[i]);
    nv += std::norm(v[i]);
  }
  const double denom = std::sqrt(nu) * std::sqrt(nv);
  return std::abs(dot) / (denom > kCorrFloor ? denom : kCorrFloor);
}

inline std::vector<double> temporal_corr(const Spectrogram& spec, std::size_t ctx) {
  const std::size_t cols = 2 * ctx + 1;
  std::vector<double> out(spec.frames * cols, 0.0);
  for (std::size_t k = 0; k < spec.frames; ++k) {
    for (std::size_t j = 0; j < cols; ++j) {
      const long long g = static_cast<long long>(k) + static_cast<long long>(j) -
                          static_cast<long long>(ctx);
      if (g < 0 || g >= static_cast<long long>(spec.frames)) continue;
      if (static_cast<std::size_t>(g) == k) {
        double energy = 0.0;
        for (std::size_t b = 0; b < spec.bins; ++b) energy += std::norm(spec.at(k, b));
        out[k * cols + j] = energy > kCorrFloor ? 1.0 : 0.0;
        continue;
      }
      out[k * cols + j] =
          normalized_inner(spec.frame_ptr(k), spec.frame_ptr(static_cast<std::size_t>(g)),
                           spec.bins);
    }
  }
  return out;
}

inline std::vector<double> frequency_corr(const Spectrogram& spec, std::size_t ctx) {
  const std::size_t cols = spec.bins > 0 ? spec.bins - 1 : 0;
  std::vector<double> out(spec.frames * cols, 0.0);
  std::vector<fft::cplx> u, v;
  for (std::size_t k = 0; k < spec.frames; ++k) {
    const std::size_t lo = k >= ctx ? k - ctx : 0;
    const std::size_t hi = std::min(spec.frames - 1, k + ctx);
    const std::size_t len = hi - lo + 1;
    u.resize(len);
    v.resize(len);
    for (std::size_t b = 0; b + 1 < spec.bins; ++b) {
      for (std::size_t g = lo; g <= hi; ++g) {
        u[g - lo] = spec.at(g, b);
        v[g - lo] = spec.at(g, b + 1);
      }
      out[k * cols + b] = normalized_inner(u.data(), v.data(), len);
    }
  }
  return out;
}

}  // namespace detail

// Builds the full per-frame feature block for a (Y, E) spectrogram pair.
// context sets the temporal neighbourhood used by the correlation features.
inline FeatureSet extract_features(const Spectrogram& y, const Spectrogram& e,
                                   std::size_t context) {
  y.check_shape_matches(e, "extract_features");
  if (y.frames == 0 || y.bins == 0) {
    throw ShapeError("extract_features: empty spectrogram");
  }

  FeatureSet fs;
  fs.frames = y.frames;
  fs.bins = y.bins;
  fs.context = context;
  fs.lps_y = detail::standardized_lps(y);
  fs.lps_e = detail::standardized_lps(e);
  fs.temporal_corr_y = detail::temporal_corr(y, context);
  fs.temporal_corr_e = detail::temporal_corr(e, context);
  fs.freq_corr_y = detail::frequency_corr(y, context);
  fs.freq_corr_e = detail::frequency_corr(e, context);

  fs.channel_cov.resize(y.frames);
  for (std::size_t k = 0; k < y.frames; ++k) {
    fft::cplx yy(0.0, 0.0), ye(0.0, 0.0), ee(0.0, 0.0);
    for (std::size_t b = 0; b < y.bins; ++b) {
      yy += fft::cplx(std::norm(y.at(k, b)), 0.0);
      ee += fft::cplx(std::norm(e.at(k, b)), 0.0);
      ye += y.at(k, b) * std::conj(e.at(k, b));
    }
    fs.channel_cov[k] = {yy, ye, std::conj(ye), ee};
  }
  return fs;
}

}  // namespace ahs
