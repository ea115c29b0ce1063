#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "disagg/types.hpp"
#include "disagg/waveform.hpp"

namespace disagg {

/// Fryze split of one cycle of current into the part collinear with the
/// voltage (carrying all average power) and the orthogonal remainder.
struct FryzeComponents {
  std::vector<double> active;      // i_a
  std::vector<double> non_active;  // i_f = i - i_a
  double active_power = 0.0;       // p_a = mean(v * i)
  double v_rms = 0.0;
};

/// v and i hold one fundamental cycle each (T_s = v.size()). Throws
/// std::invalid_argument on length mismatch or zero rms voltage.
FryzeComponents fryze_decompose(std::span<const double> v, std::span<const double> i);

/// Piecewise aggregate approximation: m segment means. Segments partition
/// [0, n) as evenly as possible, the remainder going to the leading
/// segments.
std::vector<double> paa(std::span<const double> x, std::size_t m);

/// D(i, j) = |x_i - x_j|.
Matrix distance_matrix(std::span<const double> x);

/// Period-synchronous current matrix: one row per crossing-to-crossing
/// span of the voltage, each resampled to round(fs / f0) points.
struct PeriodMatrix {
  Matrix values;

  std::size_t periods() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t samples_per_period() const noexcept {
    return static_cast<std::size_t>(values.cols());
  }
};

/// Throws std::invalid_argument when the voltage has fewer than two
/// abscissa crossings.
PeriodMatrix fitps(const Waveform& w);

/// sin(2 pi f0 t / fs), t = 0..length-1: the grid voltage seen by a window
/// that starts on a rising voltage zero.
std::vector<double> reference_voltage(std::size_t length, double fs, double f0);

// Batch feature maps over crossing-aligned current windows (one per row).
// The windows carry no voltage, so the reference voltage stands in for it.

/// Fryze -> PAA(m) -> distance matrix for i_a and i_f, stacked as two
/// channels and flattened: 2 * m * m columns.
Matrix fryze_features(const Matrix& windows, std::size_t paa_segments, double fs, double f0);

/// FIT-PS row of each window (the window is wrapped periodically so the
/// span up to the next crossing is available): round(fs/f0) columns.
Matrix fitps_features(const Matrix& windows, double fs, double f0);

}  // namespace disagg
