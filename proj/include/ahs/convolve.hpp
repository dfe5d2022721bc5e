#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/fft.hpp"
#include "ahs/signal.hpp"

namespace ahs {

namespace detail {

inline std::vector<double> convolve_direct(const std::vector<double>& x,
                                           const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += xi * h[j];
  }
  return out;
}

}  // namespace detail

// Streaming uniform-partitioned FIR convolution. Kernel partitions of
// block_size taps are held as spectra; each input block costs one FFT, one
// IFFT and P complex multiply-accumulates. The result is exact linear
// convolution, so the closed-loop simulator and the one-shot mixture path
// produce bit-identical playback when fed the same blocks.
class PartitionedConvolver {
 public:
  PartitionedConvolver(const std::vector<double>& kernel, std::size_t block_size)
      : block_(block_size), fft_n_(2 * block_size) {
    if (block_size == 0 || !fft::is_pow2(fft_n_)) {
      throw ConfigError("PartitionedConvolver: block size must be a power of two");
    }
    std::size_t parts = kernel.empty() ? 1 : (kernel.size() + block_ - 1) / block_;
    kernel_spectra_.resize(parts);
    std::vector<double> chunk(block_, 0.0);
    for (std::size_t p = 0; p < parts; ++p) {
      std::fill(chunk.begin(), chunk.end(), 0.0);
      for (std::size_t i = 0; i < block_; ++i) {
        std::size_t k = p * block_ + i;
        if (k < kernel.size()) chunk[i] = kernel[k];
      }
      kernel_spectra_[p] = fft::rfft(chunk, fft_n_);
    }
    reset();
  }

  std::size_t block_size() const { return block_; }

  void reset() {
    fdl_.assign(kernel_spectra_.size(),
                std::vector<fft::cplx>(fft_n_ / 2 + 1, fft::cplx(0.0, 0.0)));
    fdl_pos_ = 0;
    prev_block_.assign(block_, 0.0);
  }

  // Consumes exactly block_size samples, emits block_size output samples.
  std::vector<double> process_block(const std::vector<double>& in) {
    if (in.size() != block_) throw ShapeError("PartitionedConvolver: wrong block size");
    // Overlap-save frame: previous block then current block.
    std::vector<double> frame(fft_n_);
    std::copy(prev_block_.begin(), prev_block_.end(), frame.begin());
    std::copy(in.begin(), in.end(), frame.begin() + block_);
    prev_block_ = in;

    fdl_pos_ = (fdl_pos_ + fdl_.size() - 1) % fdl_.size();
    fdl_[fdl_pos_] = fft::rfft(frame, fft_n_);

    std::vector<fft::cplx> acc(fft_n_ / 2 + 1, fft::cplx(0.0, 0.0));
    for (std::size_t p = 0; p < kernel_spectra_.size(); ++p) {
      const auto& x = fdl_[(fdl_pos_ + p) % fdl_.size()];
      const auto& h = kernel_spectra_[p];
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += x[k] * h[k];
    }
    std::vector<double> t = fft::irfft(acc, fft_n_);
    return std::vector<double>(t.begin() + block_, t.end());
  }

 private:
  std::size_t block_;
  std::size_t fft_n_;
  std::vector<std::vector<fft::cplx>> kernel_spectra_;
  std::vector<std::vector<fft::cplx>> fdl_;  // newest at fdl_pos_
  std::size_t fdl_pos_ = 0;
  std::vector<double> prev_block_;
};

// Full linear convolution, output length len(x) + len(h) - 1. FFT path for
// large sizes, direct form otherwise; both match within 1e-9 relative.
inline TimeSignal convolve(const TimeSignal& x, const TimeSignal& h) {
  if (x.sample_rate != h.sample_rate) throw ConfigError("convolve: sample-rate mismatch");
  TimeSignal out;
  out.sample_rate = x.sample_rate;
  if (x.empty() || h.empty()) return out;
  const std::size_t out_len = x.size() + h.size() - 1;

  const double direct_cost = static_cast<double>(x.size()) * static_cast<double>(h.size());
  if (direct_cost <= 1 << 18) {
    out.samples = detail::convolve_direct(x.samples, h.samples);
    return out;
  }

  std::size_t n = 1;
  while (n < out_len) n <<= 1;
  std::vector<fft::cplx> xs = fft::rfft(x.samples, n);
  std::vector<fft::cplx> hs = fft::rfft(h.samples, n);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  std::vector<double> full = fft::irfft(xs, n);
  out.samples.assign(full.begin(), full.begin() + out_len);
  return out;
}

}  // namespace ahs
