#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "ahs/common.hpp"

namespace ahs::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// Per-size twiddle table w^j = exp(-i 2 pi j / n), j < n/2. Cached per thread
// so parallel scenario workers never contend and every thread computes the
// same bits.
inline const std::vector<cplx>& twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<cplx>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> tw(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    double ang = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    tw[j] = cplx(std::cos(ang), std::sin(ang));
  }
  return cache.emplace(n, std::move(tw)).first->second;
}

}  // namespace detail

// In-place radix-2 transform. Forward is unnormalized; inverse divides by n.
inline void transform(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!is_pow2(n)) throw ConfigError("fft: size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const auto& tw = detail::twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < len / 2; ++j) {
        cplx w = tw[j * stride];
        if (inverse) w = std::conj(w);
        cplx u = a[i + j];
        cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }

  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (cplx& x : a) x *= inv_n;
  }
}

// Real input -> one-sided spectrum of n/2 + 1 bins, unnormalized.
inline std::vector<cplx> rfft(const std::vector<double>& x, std::size_t n) {
  if (!is_pow2(n)) throw ConfigError("rfft: size must be a power of two");
  std::vector<cplx> buf(n, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < x.size() && i < n; ++i) buf[i] = cplx(x[i], 0.0);
  transform(buf, false);
  buf.resize(n / 2 + 1);
  return buf;
}

// One-sided spectrum -> real signal of length n, applying the 1/n inverse
// normalization. The negative-frequency half is rebuilt by Hermitian symmetry.
inline std::vector<double> irfft(const std::vector<cplx>& spec, std::size_t n) {
  if (!is_pow2(n)) throw ConfigError("irfft: size must be a power of two");
  if (spec.size() != n / 2 + 1) throw ShapeError("irfft: spectrum size does not match fft size");
  std::vector<cplx> buf(n);
  for (std::size_t k = 0; k <= n / 2; ++k) buf[k] = spec[k];
  for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = std::conj(spec[n - k]);
  transform(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace ahs::fft
