#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "disagg/ingest.hpp"
#include "disagg/waveform.hpp"

namespace disagg {

/// Parametric steady-state appliance: a harmonic mixture plus white noise.
/// amplitudes[h] and phases[h] belong to harmonic h + 1 of f0.
struct SyntheticClassSpec {
  int class_id = 0;
  std::vector<double> amplitudes;
  std::vector<double> phases;  // radians
  double noise_sigma = 0.0;

  void validate() const;
};

/// One window of a synthetic class:
/// x[t] = sum_h a_h sin(2 pi (h+1) f0 t / fs + phi_h) + N(0, sigma^2).
Window synth_class_window(const SyntheticClassSpec& spec, std::size_t length, double fs, double f0,
                          std::uint64_t seed);

/// Random, pairwise-distinct class specs: amplitudes U(0.2, 1.0), phases
/// U(0, 2 pi), for harmonics 1..n_harmonics.
std::vector<SyntheticClassSpec> make_synthetic_specs(std::size_t n_classes,
                                                     std::size_t n_harmonics, double noise_sigma,
                                                     std::uint64_t seed);

/// Generates `windows_per_class` standalone windows per spec and splits
/// them 70/10/20 (per class, seeded).
SplitCatalog make_synthetic_catalog(std::span<const SyntheticClassSpec> specs,
                                    std::size_t windows_per_class, std::size_t length, double fs,
                                    double f0, std::uint64_t seed);

/// One mixed current window and its multi-label target.
struct AggregateSample {
  std::vector<double> x;
  std::vector<std::uint8_t> y;         // length n_classes
  int cardinality = 0;                 // sum(y)
  std::vector<int> duplicates;         // per class, 0 when absent
  std::vector<std::uint64_t> sources;  // uids of the summed windows
};

enum class InclusionMode {
  uniform_k,  // k ~ U[k_min, k_max], then a uniform k-subset
  bernoulli,  // each class independently with inclusion_probability
};

struct AggregateOptions {
  std::size_t n_classes = 0;
  std::size_t k_min = 1;
  std::size_t k_max = 0;  // 0 means n_classes
  std::size_t dup_min = 1;
  std::size_t dup_max = 10;
  InclusionMode mode = InclusionMode::uniform_k;
  double inclusion_probability = 0.5;

  /// Throws std::invalid_argument on inconsistent bounds.
  void validate() const;
  std::size_t effective_k_max() const noexcept { return k_max == 0 ? n_classes : k_max; }
};

/// Pool windows grouped by class for repeated draws.
class ClassPool {
 public:
  ClassPool(std::span<const SplitEntry> entries, std::size_t n_classes);

  std::size_t n_classes() const noexcept { return by_class_.size(); }
  std::size_t window_length() const noexcept { return window_length_; }
  std::span<const SplitEntry* const> of_class(std::size_t c) const { return by_class_.at(c); }

 private:
  std::vector<std::vector<const SplitEntry*>> by_class_;
  std::size_t window_length_ = 0;
};

/// Kirchhoff summation of randomly chosen windows: a class subset is drawn
/// per `opts`, each chosen class contributes U[dup_min, dup_max] windows
/// drawn independently with replacement from its pool, and the chosen
/// windows are summed sample-wise.
AggregateSample aggregate(const ClassPool& pool, const AggregateOptions& opts,
                          std::uint64_t seed);

AggregateSample aggregate(std::span<const SplitEntry> pool, const AggregateOptions& opts,
                          std::uint64_t seed);

struct SplitCounts {
  std::size_t train = 7000;
  std::size_t val = 1000;
  std::size_t test = 2000;
};

struct AggregateDataset {
  std::vector<AggregateSample> train;
  std::vector<AggregateSample> val;
  std::vector<AggregateSample> test;
};

/// Mixes each split only from its own pool. Sample i of split s uses seed
/// derive_seed(seed, s, i), so the result does not depend on generation
/// order.
AggregateDataset build_dataset(const SplitCatalog& catalog, SplitCounts counts,
                               const AggregateOptions& opts, std::uint64_t seed);

}  // namespace disagg
