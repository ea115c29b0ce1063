#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "disagg/dataset_io.hpp"
#include "disagg/errors.hpp"
#include "disagg/rng.hpp"
#include "disagg/synth.hpp"
#include "support/oracles.hpp"

using namespace disagg;

namespace {

SplitEntry entry(int c, std::vector<double> x, std::uint64_t uid) {
  Window w;
  w.samples = std::move(x);
  return {c, w, uid};
}

std::vector<double> wave(std::size_t n, bool cosine) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
    v[t] = cosine ? std::cos(a) : std::sin(a);
  }
  return v;
}

SplitCatalog small_catalog(std::size_t n_classes, std::uint64_t seed) {
  const auto specs = make_synthetic_specs(n_classes, 4, 0.05, seed);
  return make_synthetic_catalog(specs, 40, 50, 3000, 60, seed);
}

std::map<std::uint64_t, const SplitEntry*> by_uid(const std::vector<SplitEntry>& v) {
  std::map<std::uint64_t, const SplitEntry*> m;
  for (const auto& e : v) m[e.uid] = &e;
  return m;
}

}  // namespace

TEST(Synth, SingleHarmonicIsUnitSine) {
  SyntheticClassSpec s{0, {1.0}, {0.0}, 0.0};
  const auto w = synth_class_window(s, 50, 3000, 60, 1);
  ASSERT_EQ(w.length(), 50u);
  for (std::size_t t = 0; t < 50; ++t) {
    EXPECT_NEAR(w.samples[t], std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 50.0),
                1e-12);
  }
}

TEST(Synth, SameSeedSameWindow) {
  SyntheticClassSpec s{0, {1.0, 0.3}, {0.1, 0.2}, 0.0};
  EXPECT_EQ(synth_class_window(s, 50, 3000, 60, 9).samples,
            synth_class_window(s, 50, 3000, 60, 9).samples);
  s.noise_sigma = 0.1;
  EXPECT_EQ(synth_class_window(s, 50, 3000, 60, 9).samples,
            synth_class_window(s, 50, 3000, 60, 9).samples);
  EXPECT_NE(synth_class_window(s, 50, 3000, 60, 9).samples,
            synth_class_window(s, 50, 3000, 60, 10).samples);
}

TEST(Synth, SpecValidation) {
  EXPECT_THROW((SyntheticClassSpec{0, {0.0, 0.0}, {0.0, 0.0}, 0.0}.validate()),
               std::invalid_argument);
  EXPECT_THROW((SyntheticClassSpec{0, {1.0}, {0.0, 0.0}, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((SyntheticClassSpec{0, {1.0}, {0.0}, -1.0}.validate()), std::invalid_argument);
  EXPECT_THROW(synth_class_window(SyntheticClassSpec{0, {1.0}, {0.0}, 0.0}, 7, 3000, 60, 0),
               std::invalid_argument);
}

TEST(Synth, SpecsArePairwiseDistinct) {
  const auto specs = make_synthetic_specs(32, 3, 0.0, 4);
  ASSERT_EQ(specs.size(), 32u);
  for (std::size_t a = 0; a < specs.size(); ++a) {
    EXPECT_EQ(specs[a].class_id, static_cast<int>(a));
    for (std::size_t b = a + 1; b < specs.size(); ++b) {
      EXPECT_FALSE(specs[a].amplitudes == specs[b].amplitudes && specs[a].phases == specs[b].phases);
    }
  }
}

TEST(Synth, SyntheticClassesAreLinearlySeparable) {
  const auto specs = make_synthetic_specs(8, 6, 0.05, 21);
  Matrix tr(8 * 100, 50), te(8 * 100, 50);
  std::vector<int> ytr, yte;
  for (std::size_t c = 0; c < 8; ++c) {
    for (std::size_t i = 0; i < 200; ++i) {
      const auto w = synth_class_window(specs[c], 50, 3000, 60, derive_seed(21, "w", c * 1000 + i));
      Matrix& dst = i % 2 == 0 ? tr : te;
      const auto row = static_cast<Eigen::Index>(c * 100 + i / 2);
      for (std::size_t t = 0; t < 50; ++t) dst(row, static_cast<Eigen::Index>(t)) = w.samples[t];
      (i % 2 == 0 ? ytr : yte).push_back(static_cast<int>(c));
    }
  }
  EXPECT_GT(oracle::linear_classifier_accuracy(tr, ytr, te, yte, 8), 0.99);
}

TEST(Aggregate, SinPlusCosExactly) {
  const std::vector<SplitEntry> pool{entry(0, wave(50, false), 1), entry(1, wave(50, true), 2)};
  AggregateOptions o;
  o.n_classes = 2;
  o.k_min = o.k_max = 2;
  o.dup_min = o.dup_max = 1;
  const auto s = aggregate(pool, o, 123);
  const auto a = wave(50, false);
  const auto b = wave(50, true);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(s.x[t], a[t] + b[t]);
  EXPECT_EQ(s.y, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(s.cardinality, 2);
}

TEST(Aggregate, ThreeDuplicatesOfConstant) {
  const std::vector<SplitEntry> pool{entry(0, std::vector<double>(50, 1.0), 1),
                                     entry(0, std::vector<double>(50, 1.0), 2)};
  AggregateOptions o;
  o.n_classes = 1;
  o.k_min = o.k_max = 1;
  o.dup_min = o.dup_max = 3;
  const auto s = aggregate(pool, o, 5);
  for (double x : s.x) EXPECT_EQ(x, 3.0);
  EXPECT_EQ(s.duplicates, std::vector<int>{3});
  EXPECT_EQ(s.sources.size(), 3u);
}

TEST(Aggregate, KMaxAboveClassCountRejected) {
  AggregateOptions o;
  o.n_classes = 4;
  o.k_max = 5;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o.k_max = 4;
  o.dup_min = 0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(Aggregate, MissingClassInPoolRejected) {
  const std::vector<SplitEntry> pool{entry(0, wave(50, false), 1)};
  AggregateOptions o;
  o.n_classes = 2;
  EXPECT_THROW(aggregate(pool, o, 1), DataError);
}

TEST(Aggregate, UniformInclusionFrequency) {
  const std::size_t n = 16;
  std::vector<SplitEntry> pool;
  for (std::size_t c = 0; c < n; ++c) pool.push_back(entry(static_cast<int>(c), {1.0, 2.0}, c));
  AggregateOptions o;
  o.n_classes = n;
  const ClassPool cp(pool, n);
  const std::size_t draws = 10000;
  std::vector<double> hits(n, 0.0);
  std::map<int, std::size_t> k_hist;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto s = aggregate(cp, o, derive_seed(77, "mc", i));
    for (std::size_t c = 0; c < n; ++c) hits[c] += s.y[c];
    ++k_hist[s.cardinality];
  }
  // Uniform k in [1, n] then a uniform k-subset: P(c in subset) = E[k] / n.
  const double p = (static_cast<double>(n) + 1.0) / 2.0 / static_cast<double>(n);
  const double mean = p * draws;
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  for (std::size_t c = 0; c < n; ++c) EXPECT_LE(std::abs(hits[c] - mean), 3.0 * sigma) << c;
  EXPECT_EQ(k_hist.begin()->first, 1);
  EXPECT_EQ(k_hist.rbegin()->first, 16);
}

TEST(Aggregate, BernoulliModeRespectsBounds) {
  std::vector<SplitEntry> pool;
  for (int c = 0; c < 8; ++c) pool.push_back(entry(c, {1.0}, static_cast<std::uint64_t>(c)));
  AggregateOptions o;
  o.n_classes = 8;
  o.k_max = 5;
  o.mode = InclusionMode::bernoulli;
  o.inclusion_probability = 0.4;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto s = aggregate(pool, o, i);
    EXPECT_GE(s.cardinality, 1);
    EXPECT_LE(s.cardinality, 5);
  }
}

TEST(Aggregate, SuperpositionAndLabelSoundness) {
  const auto cat = small_catalog(6, 3);
  const auto lookup = by_uid(cat.train);
  AggregateOptions o;
  o.n_classes = 6;
  const ClassPool pool(cat.train, 6);
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto s = aggregate(pool, o, i);
    std::vector<double> sum(50, 0.0);
    std::set<int> contributed;
    for (auto uid : s.sources) {
      const auto* e = lookup.at(uid);
      contributed.insert(e->class_id);
      for (std::size_t t = 0; t < 50; ++t) sum[t] += e->window.samples[t];
    }
    EXPECT_EQ(s.x, sum);
    int k = 0;
    for (int c = 0; c < 6; ++c) {
      EXPECT_EQ(s.y[static_cast<std::size_t>(c)] == 1, contributed.count(c) == 1);
      if (s.y[static_cast<std::size_t>(c)]) {
        EXPECT_GE(s.duplicates[static_cast<std::size_t>(c)], 1);
        EXPECT_LE(s.duplicates[static_cast<std::size_t>(c)], 10);
      } else {
        EXPECT_EQ(s.duplicates[static_cast<std::size_t>(c)], 0);
      }
      k += s.y[static_cast<std::size_t>(c)];
    }
    EXPECT_EQ(k, s.cardinality);
    EXPECT_GE(k, 1);
  }
}

TEST(BuildDataset, CountsAndHygiene) {
  const auto cat = small_catalog(5, 8);
  AggregateOptions o;
  o.n_classes = 5;
  const auto ds = build_dataset(cat, {10, 2, 4}, o, 8);
  EXPECT_EQ(ds.train.size(), 10u);
  EXPECT_EQ(ds.val.size(), 2u);
  EXPECT_EQ(ds.test.size(), 4u);

  const auto big = build_dataset(cat, {300, 60, 60}, o, 8);
  const auto train_ids = by_uid(cat.train);
  const auto val_ids = by_uid(cat.val);
  const auto test_ids = by_uid(cat.test);
  for (const auto& s : big.train) {
    for (auto uid : s.sources) EXPECT_TRUE(train_ids.count(uid));
  }
  for (const auto& s : big.val) {
    for (auto uid : s.sources) EXPECT_TRUE(val_ids.count(uid));
  }
  for (const auto& s : big.test) {
    for (auto uid : s.sources) EXPECT_TRUE(test_ids.count(uid));
  }
}

TEST(BuildDataset, DefaultCounts) {
  const SplitCounts c;
  EXPECT_EQ(c.train, 7000u);
  EXPECT_EQ(c.val, 1000u);
  EXPECT_EQ(c.test, 2000u);
  const auto cat = small_catalog(4, 2);
  AggregateOptions o;
  o.n_classes = 4;
  const auto ds = build_dataset(cat, c, o, 2);
  EXPECT_EQ(ds.train.size(), 7000u);
  EXPECT_EQ(ds.val.size(), 1000u);
  EXPECT_EQ(ds.test.size(), 2000u);
}

TEST(BuildDataset, Deterministic) {
  const auto cat = small_catalog(5, 8);
  AggregateOptions o;
  o.n_classes = 5;
  const auto a = build_dataset(cat, {50, 10, 20}, o, 42);
  const auto b = build_dataset(cat, {50, 10, 20}, o, 42);
  EXPECT_EQ(stack_labels(a.train), stack_labels(b.train));
  EXPECT_EQ(stack_windows(a.test), stack_windows(b.test));
  // Prefix stability: sample i does not depend on how many are drawn.
  const auto c = build_dataset(cat, {20, 10, 20}, o, 42);
  EXPECT_EQ(c.train[19].x, a.train[19].x);
}

TEST(BuildDataset, EmptyPoolRejected) {
  auto cat = small_catalog(3, 1);
  cat.val.clear();
  AggregateOptions o;
  o.n_classes = 3;
  EXPECT_THROW(build_dataset(cat, {5, 1, 2}, o, 1), DataError);
}

TEST(DatasetIo, AggregatesRoundTrip) {
  const auto dir = oracle::scratch_dir("synth_io");
  const auto cat = small_catalog(4, 6);
  AggregateOptions o;
  o.n_classes = 4;
  const auto ds = build_dataset(cat, {20, 2, 2}, o, 6);
  write_aggregates_jsonl(dir / "train.jsonl", ds.train);
  const auto back = read_aggregates_jsonl(dir / "train.jsonl");
  ASSERT_EQ(back.size(), ds.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].x, ds.train[i].x);
    EXPECT_EQ(back[i].y, ds.train[i].y);
    EXPECT_EQ(back[i].cardinality, ds.train[i].cardinality);
  }
  write_pool_jsonl(dir / "pool.jsonl", cat.train);
  const auto pool = read_pool_jsonl(dir / "pool.jsonl");
  ASSERT_EQ(pool.size(), cat.train.size());
  EXPECT_EQ(pool[3].uid, cat.train[3].uid);
  EXPECT_EQ(pool[3].window.samples, cat.train[3].window.samples);
}

TEST(DatasetIo, InconsistentCardinalityRejected) {
  const auto dir = oracle::scratch_dir("synth_io_bad");
  std::ofstream(dir / "bad.jsonl") << R"({"x":[1,2],"y":[1,0],"k":2})" << "\n";
  EXPECT_THROW(read_aggregates_jsonl(dir / "bad.jsonl"), DataError);
}
