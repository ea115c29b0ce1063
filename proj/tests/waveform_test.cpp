#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "disagg/waveform.hpp"

using namespace disagg;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> sine(std::size_t n, double f, double fs, double offset = 0.0,
                         double amplitude = 1.0) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    v[t] = amplitude * std::sin(kTwoPi * f * static_cast<double>(t) / fs) + offset;
  }
  return v;
}

Waveform sine_waveform(std::size_t n, double fs) {
  auto v = sine(n, 60.0, fs);
  return make_waveform(v, v, fs, 60.0);
}

}  // namespace

TEST(Waveform, ValidateRejectsBadMetadata) {
  EXPECT_THROW(make_waveform({1.0}, {1.0, 2.0}, 3000, 60), std::invalid_argument);
  EXPECT_THROW(make_waveform({}, {}, 3000, 60), std::invalid_argument);
  EXPECT_THROW(make_waveform({1.0}, {1.0}, 0, 60), std::invalid_argument);
  EXPECT_THROW(make_waveform({1.0}, {1.0}, 3000, 0), std::invalid_argument);
  EXPECT_THROW(make_waveform({1.0}, {1.0}, 400, 60), std::invalid_argument);
  EXPECT_NO_THROW(make_waveform({1.0}, {1.0}, 480, 60));
}

TEST(Waveform, DefaultWindowIsOnePeriod) {
  EXPECT_EQ(default_window_length(3000, 60), 50u);
  EXPECT_EQ(default_window_length(30000, 60), 500u);
  EXPECT_EQ(default_window_length(3000, 50), 60u);
}

TEST(Resample, DecimationLength) {
  const auto out = resample(sine_waveform(30000, 30000), 3000);
  EXPECT_EQ(out.fs, 3000.0);
  EXPECT_EQ(out.size(), 3000u);
  EXPECT_EQ(out.voltage.size(), 3000u);
}

TEST(Resample, LengthIsFloorOfRatio) {
  const auto out = resample(sine_waveform(30007, 30000), 3000);
  EXPECT_EQ(out.size(), 3000u);
}

TEST(Resample, IdentityWhenRatesMatch) {
  const auto w = sine_waveform(1234, 3000);
  const auto out = resample(w, 3000);
  EXPECT_EQ(out.voltage, w.voltage);
  EXPECT_EQ(out.current, w.current);
  EXPECT_EQ(out.fs, w.fs);
}

TEST(Resample, DecimatedSineMatchesClosedForm) {
  const auto out = resample(sine_waveform(30000, 30000), 3000);
  const auto expect = sine(3000, 60.0, 3000.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < expect.size(); ++j) {
    worst = std::max(worst, std::abs(out.current[j] - expect[j]));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Resample, RejectsNonIntegerRatio) {
  const auto w = sine_waveform(3000, 30000);
  try {
    resample(w, 7000);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("not an integer"), std::string::npos) << e.what();
  }
  EXPECT_THROW(resample(w, 0.0), std::invalid_argument);
  EXPECT_THROW(resample(w, -3000.0), std::invalid_argument);
}

TEST(Resample, UpsampleLengthAndShape) {
  const auto w = sine_waveform(600, 3000);
  const auto up = resample(w, 6000);
  EXPECT_EQ(up.size(), 1200u);
  EXPECT_EQ(up.fs, 6000.0);
  const auto expect = sine(1200, 60.0, 6000.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < expect.size(); ++j) {
    worst = std::max(worst, std::abs(up.current[j] - expect[j]));
  }
  EXPECT_LT(worst, 1e-2);
}

TEST(Resample, IdempotentInRate) {
  const auto once = resample(sine_waveform(30000, 30000), 3000);
  const auto twice = resample(once, 3000);
  EXPECT_EQ(twice.fs, once.fs);
  EXPECT_EQ(twice.current, once.current);
  EXPECT_EQ(twice.voltage, once.voltage);
}

TEST(Resample, LowpassKernelHasUnitDcGainAndSymmetry) {
  const auto h = windowed_sinc_lowpass(127, 0.045);
  ASSERT_EQ(h.size(), 127u);
  double sum = 0.0;
  for (double x : h) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
}

TEST(Resample, AliasingToneIsSuppressed) {
  // 1450 Hz at 30 kHz lies below the 1500 Hz Nyquist of the target but above
  // the 1350 Hz cutoff; 2900 Hz would alias onto 100 Hz without the filter.
  auto v = sine(30000, 2900.0, 30000.0);
  const auto out = resample(make_waveform(v, v, 30000, 60), 3000);
  double peak = 0.0;
  for (std::size_t j = 200; j + 200 < out.size(); ++j) peak = std::max(peak, std::abs(out.current[j]));
  EXPECT_LT(peak, 1e-2);
}

TEST(Crossings, TwoPeriodSine) {
  const auto c = find_abscissa_crossings(sine(100, 60.0, 3000.0));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[0], 0.0, 0.01);
  EXPECT_NEAR(c[1], 50.0, 0.01);
}

TEST(Crossings, ConstantPositiveHasNone) {
  EXPECT_TRUE(find_abscissa_crossings(std::vector<double>(64, 2.5)).empty());
  EXPECT_TRUE(find_abscissa_crossings(std::vector<double>(64, -2.5)).empty());
}

TEST(Crossings, DcOffsetMatchesClosedFormRoots) {
  // sin(theta) + 0.5 rises through zero where theta = -pi/6 (mod 2 pi).
  const double period = 50.0;
  const auto v = sine(500, 60.0, 3000.0, 0.5);
  const auto c = find_abscissa_crossings(v);
  ASSERT_EQ(c.size(), 10u);
  for (std::size_t m = 0; m < c.size(); ++m) {
    // Bisection on the closed form in the bracket the crossing fell into.
    auto f = [&](double t) { return std::sin(kTwoPi * t / period) + 0.5; };
    double lo = std::floor(c[m]);
    double hi = lo + 1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    EXPECT_NEAR(c[m], lo, 0.05);
    EXPECT_NEAR(lo, period * (static_cast<double>(m) + 1.0 - 1.0 / 12.0), 1e-6);
  }
}

TEST(Crossings, ExactZeroCountsAsPositive) {
  const std::vector<double> v{-1.0, 0.0, 1.0, -1.0, 0.0};
  const auto c = find_abscissa_crossings(v);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[0], 1.0, 1e-12);
  EXPECT_LT(c[0], 1.0);
  EXPECT_GE(c[0], 0.0);
  EXPECT_NEAR(c[1], 4.0, 1e-12);
  EXPECT_LT(c[1], 4.0);
}

TEST(Crossings, PropertyBracketHolds) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(257);
    double s = 0.0;
    for (auto& x : v) x = (s += g(rng));
    if (trial % 3 == 0) {
      for (auto& x : v) x = std::round(x);  // exercise exact zeros
    }
    for (double c : find_abscissa_crossings(v)) {
      const auto t = static_cast<std::size_t>(std::floor(c));
      ASSERT_LT(t + 1, v.size());
      if (t == 0 && v[0] == 0.0) continue;  // leading rising zero
      EXPECT_LT(v[t], 0.0) << "trial " << trial << " c=" << c;
      EXPECT_GE(v[t + 1], 0.0) << "trial " << trial << " c=" << c;
    }
  }
}

TEST(Windows, StrideCount) {
  const auto w = sine_waveform(3000, 3000);
  const auto win = extract_windows(w, 50, WindowAlign::stride);
  EXPECT_EQ(win.size(), 60u);
  for (const auto& x : win) EXPECT_EQ(x.length(), 50u);
}

TEST(Windows, StrideReconcatenatesPrefix) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> v(1037);
  for (auto& x : v) x = g(rng);
  const auto w = make_waveform(v, v, 3000, 60);
  const auto win = extract_windows(w, 50, WindowAlign::stride);
  ASSERT_EQ(win.size(), 20u);
  std::vector<double> joined;
  for (const auto& x : win) joined.insert(joined.end(), x.samples.begin(), x.samples.end());
  EXPECT_EQ(joined, std::vector<double>(v.begin(), v.begin() + 1000));
}

TEST(Windows, ZeroCrossingAligned) {
  const auto w = sine_waveform(100, 3000);
  const auto win = extract_windows(w, 50, WindowAlign::zero_crossing);
  ASSERT_EQ(win.size(), 2u);
  const auto c = find_abscissa_crossings(w.voltage);
  for (std::size_t i = 0; i < win.size(); ++i) {
    EXPECT_LE(std::abs(static_cast<double>(win[i].origin) - c[i]), 1.0);
    EXPECT_EQ(win[i].length(), 50u);
    for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(win[i].samples[t], w.current[win[i].origin + t]);
  }
}

TEST(Windows, LongerThanSignalIsEmpty) {
  const auto w = sine_waveform(40, 3000);
  EXPECT_TRUE(extract_windows(w, 50, WindowAlign::stride).empty());
  EXPECT_TRUE(extract_windows(w, 50, WindowAlign::zero_crossing).empty());
}

TEST(Windows, NeverShortOrOutOfBounds) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> f(50.0, 70.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 300 + static_cast<std::size_t>(trial) * 7;
    const auto v = sine(n, f(rng), 3000.0, 0.1);
    const auto w = make_waveform(v, v, 3000, 60);
    for (auto mode : {WindowAlign::stride, WindowAlign::zero_crossing}) {
      for (const auto& x : extract_windows(w, 50, mode)) {
        EXPECT_EQ(x.length(), 50u);
        EXPECT_LE(x.origin + 50, n);
      }
    }
  }
}
