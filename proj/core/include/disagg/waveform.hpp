#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace disagg {

/// A sampled voltage/current pair with its sampling metadata.
struct Waveform {
  std::vector<double> voltage;  // volts
  std::vector<double> current;  // amperes
  double fs = 0.0;              // sampling rate, Hz
  double f0 = 0.0;              // grid fundamental, Hz

  std::size_t size() const noexcept { return current.size(); }
  double samples_per_period() const noexcept { return fs / f0; }

  /// Throws std::invalid_argument unless lengths match and are non-empty,
  /// fs, f0 > 0 and there are at least 8 samples per period.
  void validate() const;
};

/// Builds and validates a waveform.
Waveform make_waveform(std::vector<double> voltage, std::vector<double> current,
                       double fs, double f0);

/// A fixed-length slice of a current signal.
struct Window {
  std::vector<double> samples;
  std::size_t origin = 0;  // index into the source waveform

  std::size_t length() const noexcept { return samples.size(); }
};

enum class WindowAlign { zero_crossing, stride };

/// round(fs / f0): one fundamental period.
std::size_t default_window_length(double fs, double f0);

/// Integer-ratio resampling. Decimation applies a 127-tap Blackman
/// windowed-sinc low-pass (cutoff 0.45 * fs_target) before keeping every
/// M-th sample; interpolation zero-stuffs and applies the same kernel
/// designed against the input rate. Signal edges are extended by odd
/// (point) reflection. Throws std::invalid_argument for non-integer
/// ratios.
Waveform resample(const Waveform& w, double fs_target);

/// Lowpass kernel used by resample; exposed for inspection and tests.
/// `cutoff` is in cycles per sample (0 < cutoff < 0.5). Unity DC gain.
std::vector<double> windowed_sinc_lowpass(std::size_t taps, double cutoff);

/// Fractional indices of negative-to-positive voltage transitions.
///
/// A crossing is reported between t and t+1 whenever v[t] < 0 <= v[t+1],
/// refined by linear interpolation. An exact zero counts as the positive
/// side. A record that starts exactly on a rising zero (v[0] == 0 < v[1])
/// reports a crossing at 0.
std::vector<double> find_abscissa_crossings(std::span<const double> v);

/// Cuts windows of `length` samples from the current signal. In
/// zero_crossing mode windows start at the nearest integer index of each
/// voltage crossing; in stride mode every `length` samples. Windows that
/// would run past the end are dropped; a length longer than the signal
/// yields an empty result and a warning on stderr.
std::vector<Window> extract_windows(const Waveform& w, std::size_t length,
                                    WindowAlign align);

}  // namespace disagg
