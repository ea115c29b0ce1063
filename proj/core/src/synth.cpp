#include "disagg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"

namespace disagg {

void SyntheticClassSpec::validate() const {
  if (amplitudes.empty() || amplitudes.size() != phases.size()) {
    throw std::invalid_argument("synthetic class " + std::to_string(class_id) +
                                ": amplitudes and phases must be non-empty and equally long");
  }
  if (std::none_of(amplitudes.begin(), amplitudes.end(), [](double a) { return a != 0.0; })) {
    throw std::invalid_argument("synthetic class " + std::to_string(class_id) +
                                ": needs at least one nonzero harmonic amplitude");
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("synthetic class " + std::to_string(class_id) +
                                ": noise_sigma must be >= 0");
  }
}

Window synth_class_window(const SyntheticClassSpec& spec, std::size_t length, double fs, double f0,
                          std::uint64_t seed) {
  spec.validate();
  if (length < 8) throw std::invalid_argument("synth_class_window: window length must be >= 8");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Window w;
  w.samples.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    const double base = two_pi * f0 * static_cast<double>(t) / fs;
    double v = 0.0;
    for (std::size_t h = 0; h < spec.amplitudes.size(); ++h) {
      v += spec.amplitudes[h] * std::sin(static_cast<double>(h + 1) * base + spec.phases[h]);
    }
    if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
    w.samples[t] = v;
  }
  return w;
}

std::vector<SyntheticClassSpec> make_synthetic_specs(std::size_t n_classes,
                                                     std::size_t n_harmonics, double noise_sigma,
                                                     std::uint64_t seed) {
  if (n_classes == 0 || n_harmonics == 0) {
    throw std::invalid_argument("make_synthetic_specs: need at least one class and harmonic");
  }
  Rng rng(derive_seed(seed, "specs"));
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<SyntheticClassSpec> specs;
  while (specs.size() < n_classes) {
    SyntheticClassSpec s;
    s.class_id = static_cast<int>(specs.size());
    s.noise_sigma = noise_sigma;
    for (std::size_t h = 0; h < n_harmonics; ++h) {
      s.amplitudes.push_back(amp(rng));
      s.phases.push_back(phase(rng));
    }
    const bool duplicate = std::any_of(specs.begin(), specs.end(), [&](const auto& o) {
      return o.amplitudes == s.amplitudes && o.phases == s.phases;
    });
    if (!duplicate) specs.push_back(std::move(s));
  }
  return specs;
}

SplitCatalog make_synthetic_catalog(std::span<const SyntheticClassSpec> specs,
                                    std::size_t windows_per_class, std::size_t length, double fs,
                                    double f0, std::uint64_t seed) {
  std::vector<SplitEntry> entries;
  std::vector<std::string> names;
  entries.reserve(specs.size() * windows_per_class);
  for (std::size_t c = 0; c < specs.size(); ++c) {
    if (specs[c].class_id != static_cast<int>(c)) {
      throw std::invalid_argument("make_synthetic_catalog: specs must be ordered by class id");
    }
    names.push_back("synthetic_" + std::to_string(c));
    for (std::size_t i = 0; i < windows_per_class; ++i) {
      const std::uint64_t uid = (static_cast<std::uint64_t>(c) << 32) | i;
      entries.push_back(SplitEntry{static_cast<int>(c),
                                   synth_class_window(specs[c], length, fs, f0,
                                                      derive_seed(seed, "roi", uid)),
                                   uid});
    }
  }
  return make_splits(std::move(entries), std::move(names), seed);
}

void AggregateOptions::validate() const {
  const std::size_t kmax = effective_k_max();
  if (n_classes == 0) throw std::invalid_argument("aggregate: n_classes must be positive");
  if (kmax > n_classes) {
    throw std::invalid_argument("aggregate: k_max = " + std::to_string(kmax) +
                                " exceeds n_classes = " + std::to_string(n_classes));
  }
  if (k_min < 1 || k_min > kmax) throw std::invalid_argument("aggregate: need 1 <= k_min <= k_max");
  if (dup_min < 1 || dup_min > dup_max) {
    throw std::invalid_argument("aggregate: need 1 <= dup_min <= dup_max");
  }
  if (mode == InclusionMode::bernoulli &&
      !(inclusion_probability > 0.0 && inclusion_probability <= 1.0)) {
    throw std::invalid_argument("aggregate: inclusion probability must lie in (0, 1]");
  }
}

ClassPool::ClassPool(std::span<const SplitEntry> entries, std::size_t n_classes)
    : by_class_(n_classes) {
  for (const auto& e : entries) {
    if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= n_classes) {
      throw DataError("pool: class id " + std::to_string(e.class_id) + " out of range");
    }
    if (window_length_ == 0) window_length_ = e.window.length();
    if (e.window.length() != window_length_) {
      throw DataError("pool: windows have inconsistent lengths");
    }
    by_class_[static_cast<std::size_t>(e.class_id)].push_back(&e);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (by_class_[c].empty()) {
      throw DataError("pool: no windows for class " + std::to_string(c));
    }
  }
}

AggregateSample aggregate(const ClassPool& pool, const AggregateOptions& opts,
                          std::uint64_t seed) {
  opts.validate();
  if (pool.n_classes() != opts.n_classes) {
    throw std::invalid_argument("aggregate: pool has " + std::to_string(pool.n_classes()) +
                                " classes, options say " + std::to_string(opts.n_classes));
  }
  const std::size_t n = opts.n_classes;
  Rng rng(seed);

  std::vector<std::size_t> chosen;
  if (opts.mode == InclusionMode::uniform_k) {
    std::uniform_int_distribution<std::size_t> k_dist(opts.k_min, opts.effective_k_max());
    const std::size_t k = k_dist(rng);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    std::bernoulli_distribution include(opts.inclusion_probability);
    do {
      chosen.clear();
      for (std::size_t c = 0; c < n; ++c) {
        if (include(rng)) chosen.push_back(c);
      }
    } while (chosen.size() < opts.k_min || chosen.size() > opts.effective_k_max());
  }
  std::sort(chosen.begin(), chosen.end());

  AggregateSample s;
  s.x.assign(pool.window_length(), 0.0);
  s.y.assign(n, 0);
  s.duplicates.assign(n, 0);
  s.cardinality = static_cast<int>(chosen.size());
  std::uniform_int_distribution<std::size_t> dup_dist(opts.dup_min, opts.dup_max);
  for (std::size_t c : chosen) {
    const auto members = pool.of_class(c);
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    const std::size_t dups = dup_dist(rng);
    for (std::size_t d = 0; d < dups; ++d) {
      const SplitEntry& e = *members[pick(rng)];
      for (std::size_t t = 0; t < s.x.size(); ++t) s.x[t] += e.window.samples[t];
      s.sources.push_back(e.uid);
    }
    s.y[c] = 1;
    s.duplicates[c] = static_cast<int>(dups);
  }
  return s;
}

AggregateSample aggregate(std::span<const SplitEntry> pool, const AggregateOptions& opts,
                          std::uint64_t seed) {
  return aggregate(ClassPool(pool, opts.n_classes), opts, seed);
}

AggregateDataset build_dataset(const SplitCatalog& catalog, SplitCounts counts,
                               const AggregateOptions& opts, std::uint64_t seed) {
  opts.validate();
  auto mix = [&](const std::vector<SplitEntry>& entries, std::size_t count,
                 const char* stream) {
    if (entries.empty()) throw DataError(std::string("build_dataset: empty ") + stream + " pool");
    const ClassPool pool(entries, opts.n_classes);
    std::vector<AggregateSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(aggregate(pool, opts, derive_seed(seed, stream, i)));
    }
    return out;
  };
  AggregateDataset ds;
  ds.train = mix(catalog.train, counts.train, "train");
  ds.val = mix(catalog.val, counts.val, "val");
  ds.test = mix(catalog.test, counts.test, "test");
  return ds;
}

}  // namespace disagg
