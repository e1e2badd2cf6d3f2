#include <gtest/gtest.h>

#include "mlpcpg/filters.hpp"

using namespace mlpcpg;

namespace {

// Steady-state amplitude of a filtered sinusoid via least-squares projection
// onto the quadrature pair, over complete cycles after settling.
double measured_gain(double freq, double sample_hz, ChannelFilter& filt) {
  const int settle = 200, measure = 400;
  double c_acc = 0.0, s_acc = 0.0, norm = 0.0;
  for (int n = 0; n < settle + measure; ++n) {
    const double t = n / sample_hz;
    VecX x(1);
    x[0] = std::sin(kTwoPi * freq * t);
    const VecX y = filt.step(x);
    if (n >= settle) {
      c_acc += y[0] * std::cos(kTwoPi * freq * t);
      s_acc += y[0] * std::sin(kTwoPi * freq * t);
      norm += 0.5;  // average power of the unit probe over whole cycles
    }
  }
  return std::sqrt(c_acc * c_acc + s_acc * s_acc) / norm;
}

}  // namespace

TEST(Biquad, UnityDcGain) {
  for (double fc : {10.0, 5.0}) {
    const Biquad q = Biquad::lowpass(fc, 25.0);
    EXPECT_NEAR(q.magnitude(0.0, 25.0), 1.0, 1e-12);
  }
}

TEST(Biquad, MinusThreeDbAtCutoff) {
  for (double fc : {10.0, 5.0}) {
    const Biquad q = Biquad::lowpass(fc, 25.0);
    EXPECT_NEAR(q.magnitude(fc, 25.0), 1.0 / std::sqrt(2.0), 1e-12);
  }
}

TEST(Biquad, RejectsInvalidCutoff) {
  EXPECT_THROW(Biquad::lowpass(0.0, 25.0), DomainError);
  EXPECT_THROW(Biquad::lowpass(12.5, 25.0), DomainError);
  EXPECT_THROW(Biquad::lowpass(-1.0, 25.0), DomainError);
}

TEST(ChannelFilter, ConstantInputPassesFromFirstSample) {
  ChannelFilter f(Biquad::lowpass(10.0, 25.0), 3);
  VecX x(3);
  x << 1.5, -2.0, 0.25;
  for (int n = 0; n < 50; ++n) {
    const VecX y = f.step(x);
    EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ChannelFilter, WarmStartAfterReset) {
  ChannelFilter f(Biquad::lowpass(5.0, 25.0), 1);
  VecX a(1), b(1);
  a << 3.0;
  b << -7.0;
  EXPECT_NEAR(f.step(a)[0], 3.0, 1e-12);
  f.reset();
  EXPECT_NEAR(f.step(b)[0], -7.0, 1e-12);  // first output equals first sample
}

TEST(ChannelFilter, CutoffSinusoidAttenuatedToHalfPower) {
  {
    ChannelFilter f(Biquad::lowpass(10.0, 25.0), 1);
    const double gain = measured_gain(10.0, 25.0, f);
    EXPECT_NEAR(gain, 0.7071, 0.05 * 0.7071);
  }
  {
    ChannelFilter f(Biquad::lowpass(5.0, 25.0), 1);
    const double gain = measured_gain(5.0, 25.0, f);
    EXPECT_NEAR(gain, 0.7071, 0.05 * 0.7071);
  }
}

TEST(ChannelFilter, LowFrequencyPassesHighAttenuates) {
  ChannelFilter lo(Biquad::lowpass(5.0, 25.0), 1);
  EXPECT_GT(measured_gain(0.5, 25.0, lo), 0.98);
  ChannelFilter hi(Biquad::lowpass(5.0, 25.0), 1);
  EXPECT_LT(measured_gain(11.0, 25.0, hi), 0.2);
}

TEST(ChannelFilter, RejectsNonFinite) {
  ChannelFilter f(Biquad::lowpass(10.0, 25.0), 2);
  VecX x(2);
  x << 1.0, std::nan("");
  EXPECT_THROW(f.step(x), DomainError);
}

TEST(FilterState, ChannelsMatchObservationLayout) {
  FilterState fs;
  EXPECT_EQ(FilterState::kObsChannels, 33);
  VecX so = VecX::Ones(33);
  EXPECT_EQ(fs.obs.step(so).size(), 33);
  EXPECT_EQ(fs.action.step(Vec12::Ones()).size(), 12);
  fs.reset();
  EXPECT_FALSE(fs.obs.primed());
}
