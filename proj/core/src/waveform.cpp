#include "disagg/waveform.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace disagg {
namespace {

constexpr std::size_t kResampleTaps = 127;
constexpr double kCutoffFraction = 0.45;

// Odd (point) reflection about the end samples keeps value and slope
// continuous across the boundary.
double extended_sample(std::span<const double> x, std::ptrdiff_t n) {
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  if (n >= 0 && n < len) return x[static_cast<std::size_t>(n)];
  if (n < 0) {
    const std::ptrdiff_t m = std::min(-n, len - 1);
    return 2.0 * x.front() - x[static_cast<std::size_t>(m)];
  }
  const std::ptrdiff_t m = std::max<std::ptrdiff_t>(2 * (len - 1) - n, 0);
  return 2.0 * x.back() - x[static_cast<std::size_t>(m)];
}

std::vector<double> decimate(std::span<const double> x, std::size_t factor,
                             std::span<const double> kernel, std::size_t out_len) {
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> y(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    const auto centre = static_cast<std::ptrdiff_t>(j * factor);
    double acc = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      acc += kernel[k] * extended_sample(x, centre + half - static_cast<std::ptrdiff_t>(k));
    }
    y[j] = acc;
  }
  return y;
}

std::vector<double> interpolate(std::span<const double> x, std::size_t factor,
                                std::span<const double> kernel) {
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto L = static_cast<std::ptrdiff_t>(factor);
  std::vector<double> y(x.size() * factor);
  for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(y.size()); ++m) {
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(kernel.size()); ++k) {
      const std::ptrdiff_t p = m + half - k;  // position in the zero-stuffed stream
      if (p % L != 0) continue;
      acc += kernel[static_cast<std::size_t>(k)] * extended_sample(x, p / L);
    }
    y[static_cast<std::size_t>(m)] = static_cast<double>(factor) * acc;
  }
  return y;
}

// Returns the integer n with |ratio - n| tiny, or 0 if none.
std::size_t integer_ratio(double ratio) {
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * ratio) return 0;
  return static_cast<std::size_t>(n);
}

}  // namespace

void Waveform::validate() const {
  if (current.empty() || voltage.size() != current.size()) {
    throw std::invalid_argument("waveform: voltage and current must have equal non-zero length (got " +
                                std::to_string(voltage.size()) + " and " +
                                std::to_string(current.size()) + ")");
  }
  if (!(fs > 0.0) || !(f0 > 0.0)) {
    throw std::invalid_argument("waveform: fs and f0 must be positive");
  }
  if (fs / f0 < 8.0) {
    throw std::invalid_argument("waveform: need at least 8 samples per period (fs/f0 = " +
                                std::to_string(fs / f0) + ")");
  }
}

Waveform make_waveform(std::vector<double> voltage, std::vector<double> current, double fs,
                       double f0) {
  Waveform w{std::move(voltage), std::move(current), fs, f0};
  w.validate();
  return w;
}

std::size_t default_window_length(double fs, double f0) {
  if (!(fs > 0.0) || !(f0 > 0.0)) throw std::invalid_argument("fs and f0 must be positive");
  return static_cast<std::size_t>(std::llround(fs / f0));
}

std::vector<double> windowed_sinc_lowpass(std::size_t taps, double cutoff) {
  if (taps == 0 || taps % 2 == 0) throw std::invalid_argument("lowpass: taps must be odd");
  if (!(cutoff > 0.0) || !(cutoff < 0.5)) {
    throw std::invalid_argument("lowpass: cutoff must lie in (0, 0.5) cycles/sample");
  }
  constexpr double pi = std::numbers::pi;
  const double centre = static_cast<double>(taps - 1) / 2.0;
  std::vector<double> h(taps);
  double sum = 0.0;
  // Evaluate the leading half and mirror it so the kernel is exactly
  // symmetric (linear phase).
  for (std::size_t n = 0; n <= taps / 2; ++n) {
    const double t = static_cast<double>(n) - centre;
    const double sinc = t == 0.0 ? 2.0 * cutoff : std::sin(2.0 * pi * cutoff * t) / (pi * t);
    const double phase = 2.0 * pi * static_cast<double>(n) / static_cast<double>(taps - 1);
    const double blackman = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    h[n] = h[taps - 1 - n] = sinc * blackman;
  }
  for (double v : h) sum += v;
  for (double& v : h) v /= sum;
  return h;
}

Waveform resample(const Waveform& w, double fs_target) {
  w.validate();
  if (!(fs_target > 0.0)) throw std::invalid_argument("resample: fs_target must be positive");
  if (fs_target == w.fs) return w;

  Waveform out;
  out.f0 = w.f0;
  out.fs = fs_target;
  if (w.fs > fs_target) {
    const std::size_t factor = integer_ratio(w.fs / fs_target);
    if (factor == 0) {
      throw std::invalid_argument("resample: fs/fs_target = " + std::to_string(w.fs / fs_target) +
                                  " is not an integer; fractional resampling is not supported");
    }
    const auto kernel = windowed_sinc_lowpass(kResampleTaps, kCutoffFraction / static_cast<double>(factor));
    const std::size_t out_len = w.size() / factor;
    out.voltage = decimate(w.voltage, factor, kernel, out_len);
    out.current = decimate(w.current, factor, kernel, out_len);
  } else {
    const std::size_t factor = integer_ratio(fs_target / w.fs);
    if (factor == 0) {
      throw std::invalid_argument("resample: fs_target/fs = " + std::to_string(fs_target / w.fs) +
                                  " is not an integer; fractional resampling is not supported");
    }
    const auto kernel = windowed_sinc_lowpass(kResampleTaps, kCutoffFraction / static_cast<double>(factor));
    out.voltage = interpolate(w.voltage, factor, kernel);
    out.current = interpolate(w.current, factor, kernel);
  }
  if (out.current.empty()) {
    throw std::invalid_argument("resample: signal too short for the requested rate");
  }
  return out;
}

std::vector<double> find_abscissa_crossings(std::span<const double> v) {
  std::vector<double> crossings;
  if (v.size() < 2) return crossings;
  if (v[0] == 0.0 && v[1] > 0.0) crossings.push_back(0.0);
  for (std::size_t t = 0; t + 1 < v.size(); ++t) {
    if (v[t] < 0.0 && v[t + 1] >= 0.0) {
      const double next = static_cast<double>(t + 1);
      double c = static_cast<double>(t) - v[t] / (v[t + 1] - v[t]);
      // An exact zero at t+1 would land on the positive sample; keep floor(c) == t.
      if (c >= next) c = std::nextafter(next, 0.0);
      crossings.push_back(c);
    }
  }
  return crossings;
}

std::vector<Window> extract_windows(const Waveform& w, std::size_t length, WindowAlign align) {
  std::vector<Window> windows;
  if (length == 0) throw std::invalid_argument("extract_windows: window length must be positive");
  const std::size_t n = w.current.size();
  if (length > n) {
    std::cerr << "warning: window length " << length << " exceeds signal length " << n
              << "; no windows extracted\n";
    return windows;
  }
  auto emit = [&](std::size_t start) {
    if (start + length > n) return;
    Window win;
    win.origin = start;
    win.samples.assign(w.current.begin() + static_cast<std::ptrdiff_t>(start),
                       w.current.begin() + static_cast<std::ptrdiff_t>(start + length));
    windows.push_back(std::move(win));
  };
  if (align == WindowAlign::stride) {
    for (std::size_t s = 0; s + length <= n; s += length) emit(s);
  } else {
    for (double c : find_abscissa_crossings(w.voltage)) {
      emit(static_cast<std::size_t>(std::llround(c)));
    }
  }
  return windows;
}

}  // namespace disagg
