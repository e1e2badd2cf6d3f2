#pragma once

#include <cmath>
#include <vector>

#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Second-order low-pass Butterworth section, discretized with the bilinear
/// transform (cutoff prewarped), Direct Form II transposed. Unity DC gain by
/// construction; |H| at the cutoff is exactly -3.01 dB.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
  double a1 = 0.0, a2 = 0.0;            // denominator (a0 = 1)

  static Biquad lowpass(double cutoff_hz, double sample_hz) {
    if (!(cutoff_hz > 0.0) || !(sample_hz > 0.0) || cutoff_hz >= 0.5 * sample_hz) {
      throw DomainError("lowpass cutoff must be in (0, fs/2)");
    }
    const double wc = std::tan(kPi * cutoff_hz / sample_hz);
    const double k1 = std::sqrt(2.0) * wc;
    const double k2 = wc * wc;
    const double a0 = 1.0 + k1 + k2;
    Biquad q;
    q.b0 = k2 / a0;
    q.b1 = 2.0 * k2 / a0;
    q.b2 = k2 / a0;
    q.a1 = 2.0 * (k2 - 1.0) / a0;
    q.a2 = (1.0 - k1 + k2) / a0;
    return q;
  }

  double magnitude(double freq_hz, double sample_hz) const {
    const std::complex<double> z = std::polar(1.0, kTwoPi * freq_hz / sample_hz);
    const std::complex<double> zi = 1.0 / z;
    return std::abs((b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi));
  }
};

/// Per-channel filter states for one biquad applied to a signal vector.
/// Filters warm-start on the first sample: the internal state is set to the
/// constant-input steady state, so a constant input passes through unchanged
/// from sample one.
class ChannelFilter {
 public:
  ChannelFilter() = default;
  ChannelFilter(Biquad coeffs, int channels)
      : q_(coeffs), s1_(VecX::Zero(channels)), s2_(VecX::Zero(channels)) {}

  void reset() { primed_ = false; }

  VecX step(const VecX& x) {
    require_finite(x, "filter input");
    if (!primed_) {
      // steady state for constant input x: y = x
      s1_ = ((q_.b1 - q_.a1) + (q_.b2 - q_.a2)) * x;
      s2_ = (q_.b2 - q_.a2) * x;
      primed_ = true;
    }
    VecX y = q_.b0 * x + s1_;
    s1_ = q_.b1 * x - q_.a1 * y + s2_;
    s2_ = q_.b2 * x - q_.a2 * y;
    return y;
  }

  bool primed() const { return primed_; }
  const VecX& state1() const { return s1_; }
  const VecX& state2() const { return s2_; }
  VecX& state1() { return s1_; }
  VecX& state2() { return s2_; }
  void set_primed(bool p) { primed_ = p; }

 private:
  Biquad q_;
  VecX s1_, s2_;
  bool primed_ = false;
};

/// Observation- and action-path filter memories owned by one episode.
/// Observation channels (33) filter at 10 Hz cutoff; target joint angles
/// (12) at 5 Hz; both run on the 25 Hz policy clock.
struct FilterState {
  static constexpr double kPolicyHz = 25.0;
  static constexpr double kObsCutoffHz = 10.0;
  static constexpr double kActionCutoffHz = 5.0;
  static constexpr int kObsChannels = 33;  // S_O block

  ChannelFilter obs{Biquad::lowpass(kObsCutoffHz, kPolicyHz), kObsChannels};
  ChannelFilter action{Biquad::lowpass(kActionCutoffHz, kPolicyHz), kNumJoints};

  void reset() {
    obs.reset();
    action.reset();
  }
};

}  // namespace mlpcpg
