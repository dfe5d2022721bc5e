#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ahs {

// Error taxonomy, mirrored by the CLI exit codes:
//   ConfigError -> 1, DataError -> 2, NumericError -> 3, ProtocolError -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

class ShapeError : public DataError {
 public:
  explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

// Divergence or non-finite values inside a stream; carries the frame at
// which the condition was first seen (-1 when not frame-associated).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg, long frame = -1)
      : Error(frame >= 0 ? msg + " (frame " + std::to_string(frame) + ")" : msg),
        frame_(frame) {}
  long frame() const { return frame_; }

 private:
  long frame_;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& msg) : Error(msg) {}
};

class TimeoutError : public ProtocolError {
 public:
  explicit TimeoutError(const std::string& msg, long frame = -1)
      : ProtocolError(frame >= 0 ? msg + " (frame " + std::to_string(frame) + ")" : msg),
        frame_(frame) {}
  long frame() const { return frame_; }

 private:
  long frame_;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }
inline double linear_to_db(double x) { return 20.0 * std::log10(x); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }

}  // namespace ahs
