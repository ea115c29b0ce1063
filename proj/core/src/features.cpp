#include "disagg/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace disagg {

FryzeComponents fryze_decompose(std::span<const double> v, std::span<const double> i) {
  if (v.empty() || v.size() != i.size()) {
    throw std::invalid_argument("fryze: voltage and current must have equal non-zero length");
  }
  const auto cycle = static_cast<double>(v.size());
  double power = 0.0;
  double v_sq = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    power += v[t] * i[t];
    v_sq += v[t] * v[t];
  }
  FryzeComponents out;
  out.active_power = power / cycle;
  out.v_rms = std::sqrt(v_sq / cycle);
  if (out.v_rms == 0.0) throw std::invalid_argument("fryze: rms voltage is zero");

  const double conductance = out.active_power / (out.v_rms * out.v_rms);
  out.active.resize(v.size());
  out.non_active.resize(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) {
    out.active[t] = conductance * v[t];
    out.non_active[t] = i[t] - out.active[t];
  }
  return out;
}

std::vector<double> paa(std::span<const double> x, std::size_t m) {
  const std::size_t n = x.size();
  if (m < 1 || m > n) {
    throw std::invalid_argument("paa: need 1 <= segments (" + std::to_string(m) +
                                ") <= length (" + std::to_string(n) + ")");
  }
  const std::size_t base = n / m;
  const std::size_t extra = n % m;
  std::vector<double> out(m);
  std::size_t start = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t len = base + (j < extra ? 1 : 0);
    double sum = 0.0;
    for (std::size_t t = start; t < start + len; ++t) sum += x[t];
    out[j] = sum / static_cast<double>(len);
    start += len;
  }
  return out;
}

Matrix distance_matrix(std::span<const double> x) {
  const auto m = static_cast<Eigen::Index>(x.size());
  Matrix d(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      d(r, c) = std::abs(x[static_cast<std::size_t>(r)] - x[static_cast<std::size_t>(c)]);
    }
  }
  return d;
}

PeriodMatrix fitps(const Waveform& w) {
  w.validate();
  const auto crossings = find_abscissa_crossings(w.voltage);
  if (crossings.size() < 2) {
    throw std::invalid_argument("fitps: need at least two voltage abscissa crossings, found " +
                                std::to_string(crossings.size()));
  }
  const auto n_k = static_cast<Eigen::Index>(default_window_length(w.fs, w.f0));
  const auto n_l = static_cast<Eigen::Index>(crossings.size() - 1);
  const std::size_t last = w.current.size() - 1;

  PeriodMatrix out;
  out.values.resize(n_l, n_k);
  for (Eigen::Index l = 0; l < n_l; ++l) {
    const double start = crossings[static_cast<std::size_t>(l)];
    const double step =
        (crossings[static_cast<std::size_t>(l) + 1] - start) / static_cast<double>(n_k);
    for (Eigen::Index j = 0; j < n_k; ++j) {
      const double pos = start + static_cast<double>(j) * step;
      const auto lo = std::min(static_cast<std::size_t>(pos), last);
      const std::size_t hi = std::min(lo + 1, last);
      const double frac = pos - static_cast<double>(lo);
      out.values(l, j) = (1.0 - frac) * w.current[lo] + frac * w.current[hi];
    }
  }
  return out;
}

std::vector<double> reference_voltage(std::size_t length, double fs, double f0) {
  std::vector<double> v(length);
  for (std::size_t t = 0; t < length; ++t) {
    v[t] = std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(t) / fs);
  }
  return v;
}

Matrix fryze_features(const Matrix& windows, std::size_t paa_segments, double fs, double f0) {
  const auto len = static_cast<std::size_t>(windows.cols());
  const auto v = reference_voltage(len, fs, f0);
  const auto m = static_cast<Eigen::Index>(paa_segments);
  Matrix out(windows.rows(), 2 * m * m);
  std::vector<double> current(len);
  for (Eigen::Index r = 0; r < windows.rows(); ++r) {
    for (std::size_t t = 0; t < len; ++t) current[t] = windows(r, static_cast<Eigen::Index>(t));
    const auto parts = fryze_decompose(v, current);
    const Matrix da = distance_matrix(paa(parts.active, paa_segments));
    const Matrix df = distance_matrix(paa(parts.non_active, paa_segments));
    out.row(r).head(m * m) = Eigen::Map<const RowVector>(da.data(), m * m);
    out.row(r).tail(m * m) = Eigen::Map<const RowVector>(df.data(), m * m);
  }
  return out;
}

Matrix fitps_features(const Matrix& windows, double fs, double f0) {
  const auto len = static_cast<std::size_t>(windows.cols());
  if (len < 2) throw std::invalid_argument("fitps_features: windows too short");
  // Two extra samples reach past the next rising voltage zero.
  Waveform w;
  w.fs = fs;
  w.f0 = f0;
  w.voltage = reference_voltage(len + 2, fs, f0);
  w.current.resize(len + 2);
  Matrix out;
  for (Eigen::Index r = 0; r < windows.rows(); ++r) {
    for (std::size_t t = 0; t < len + 2; ++t) {
      w.current[t] = windows(r, static_cast<Eigen::Index>(t % len));
    }
    const PeriodMatrix pm = fitps(w);
    if (r == 0) out.resize(windows.rows(), pm.values.cols());
    out.row(r) = pm.values.row(0);
  }
  return out;
}

}  // namespace disagg
