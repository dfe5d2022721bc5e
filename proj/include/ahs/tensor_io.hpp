#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ahs/common.hpp"
#include "ahs/stft.hpp"
#include "ahs/wav.hpp"

namespace ahs {

// Dense row-major float tensor as stored on disk: magic "AHSF", then the rank
// and each dimension as u32 little-endian, then the payload as float32
// little-endian.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  void validate(const char* what = "tensor") const {
    if (dims.empty()) throw ShapeError(std::string(what) + ": rank must be at least 1");
    if (element_count() != data.size()) {
      throw ShapeError(std::string(what) + ": dims imply " + std::to_string(element_count()) +
                       " elements, payload has " + std::to_string(data.size()));
    }
  }
};

inline void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  t.validate("write_tensor");

  std::vector<std::uint8_t> buf;
  buf.reserve(8 + 4 * t.dims.size() + 4 * t.data.size());
  buf.insert(buf.end(), {'A', 'H', 'S', 'F'});
  detail::store_u32(buf, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) detail::store_u32(buf, d);
  for (float f : t.data) {
    std::uint32_t w = 0;
    std::memcpy(&w, &f, sizeof w);
    detail::store_u32(buf, w);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_tensor: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write_tensor: write failed for " + path.string());
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_tensor: cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  const std::string name = path.string();
  if (buf.size() < 8 || std::memcmp(buf.data(), "AHSF", 4) != 0) {
    throw DataError("read_tensor: bad magic in " + name);
  }
  const std::uint32_t rank = detail::load_u32(buf.data() + 4);
  if (rank == 0) throw DataError("read_tensor: zero rank in " + name);
  if (buf.size() < 8 + 4 * static_cast<std::size_t>(rank)) {
    throw DataError("read_tensor: truncated header in " + name);
  }

  Tensor t;
  t.dims.resize(rank);
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims[i] = detail::load_u32(buf.data() + 8 + 4 * i);
    count *= t.dims[i];
  }
  const std::size_t payload_at = 8 + 4 * static_cast<std::size_t>(rank);
  if (buf.size() != payload_at + 4 * count) {
    throw DataError("read_tensor: payload size does not match dims in " + name);
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t w = detail::load_u32(buf.data() + payload_at + 4 * i);
    float f = 0.0f;
    std::memcpy(&f, &w, sizeof f);
    t.data[i] = f;
  }
  return t;
}

// A real matrix stored as [rows, cols].
inline Tensor matrix_tensor(const std::vector<double>& values, std::size_t rows,
                            std::size_t cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("matrix_tensor: " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " needs " + std::to_string(rows * cols) + " values, got " +
                     std::to_string(values.size()));
  }
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
  t.data.reserve(values.size());
  for (double v : values) t.data.push_back(static_cast<float>(v));
  return t;
}

// A complex spectrogram stored as [frames, bins, 2] with the real part in
// component 0 and the imaginary part in component 1.
inline Tensor spectrogram_tensor(const Spectrogram& spec) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(spec.frames), static_cast<std::uint32_t>(spec.bins), 2};
  t.data.reserve(spec.frames * spec.bins * 2);
  for (std::size_t k = 0; k < spec.frames; ++k) {
    for (std::size_t b = 0; b < spec.bins; ++b) {
      const auto& z = spec.at(k, b);
      t.data.push_back(static_cast<float>(z.real()));
      t.data.push_back(static_cast<float>(z.imag()));
    }
  }
  return t;
}

}  // namespace ahs
