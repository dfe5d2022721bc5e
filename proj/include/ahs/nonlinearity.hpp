#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ahs/common.hpp"
#include "ahs/signal.hpp"

namespace ahs {

// Memoryless loudspeaker/amplifier distortion. Every model maps 0 to 0 and
// is bounded by its saturation level.
struct NonlinearityModel {
  enum class Kind { kIdentity, kHardClip, kSigmoid };

  Kind kind = Kind::kIdentity;
  double clip_threshold = 0.8;  // hard clip level, fraction of full scale
  double gamma = 1.0;           // sigmoid saturation level
  double slope_pos = 4.0;       // sigmoid steepness for b(x) > 0
  double slope_neg = 0.5;       // sigmoid steepness for b(x) <= 0

  static NonlinearityModel identity() { return {}; }
  static NonlinearityModel hard_clip(double threshold = 0.8) {
    NonlinearityModel m;
    m.kind = Kind::kHardClip;
    m.clip_threshold = threshold;
    return m;
  }
  static NonlinearityModel sigmoid(double gamma = 1.0) {
    NonlinearityModel m;
    m.kind = Kind::kSigmoid;
    m.gamma = gamma;
    return m;
  }

  void validate() const {
    if (kind == Kind::kHardClip && clip_threshold <= 0.0) {
      throw ConfigError("hard_clip threshold must be positive");
    }
    if (kind == Kind::kSigmoid && gamma <= 0.0) {
      throw ConfigError("sigmoid gamma must be positive");
    }
  }

  double operator()(double x) const {
    switch (kind) {
      case Kind::kIdentity:
        return x;
      case Kind::kHardClip:
        return std::clamp(x, -clip_threshold, clip_threshold);
      case Kind::kSigmoid: {
        // Soft saturation used in echo-path simulation: a scaled logistic
        // over the bent input b(x) = 1.5x - 0.3x^2, steeper on the rising
        // side. b(0) = 0 keeps the zero fixed point.
        const double b = 1.5 * x - 0.3 * x * x;
        const double a = (b > 0.0) ? slope_pos : slope_neg;
        return gamma * (2.0 / (1.0 + std::exp(-a * b)) - 1.0);
      }
    }
    return x;
  }

  const char* name() const {
    switch (kind) {
      case Kind::kIdentity: return "identity";
      case Kind::kHardClip: return "hard_clip";
      case Kind::kSigmoid: return "sigmoid";
    }
    return "?";
  }

  static NonlinearityModel from_name(const std::string& s) {
    if (s == "identity") return identity();
    if (s == "hard_clip") return hard_clip();
    if (s == "sigmoid") return sigmoid();
    throw ConfigError("unknown nonlinearity: " + s);
  }
};

inline TimeSignal apply_nonlinearity(const TimeSignal& x, const NonlinearityModel& model) {
  model.validate();
  TimeSignal out = x;
  for (double& v : out.samples) v = model(v);
  return out;
}

}  // namespace ahs
