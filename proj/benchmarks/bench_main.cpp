#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "disagg/features.hpp"
#include "disagg/ica.hpp"
#include "disagg/model.hpp"
#include "disagg/waveform.hpp"

using namespace disagg;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

BinaryMatrix labels(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(0.4);
  BinaryMatrix y(rows, cols);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = b(rng) ? 1 : 0;
  return y;
}

void BM_FitIca(benchmark::State& state) {
  // Windows of 50 samples built from a sparse (Laplacian-like) mixture.
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Matrix S = gaussian(n, 17, 1).array().cube().matrix();
  const Matrix X = S * gaussian(17, 50, 2);
  IcaOptions o;
  o.n_components = 17;
  for (auto _ : state) benchmark::DoNotOptimize(fit_ica(X, o));
}
BENCHMARK(BM_FitIca)->Arg(2000)->Arg(7000)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  ResNetHyper h;
  h.n_inputs = 17;
  h.n_classes = 16;
  auto model = ResNetFFN::initialized(h, 3);
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const Matrix X = gaussian(batch, 17, 4);
  const BinaryMatrix Y = labels(batch, 16, 5);
  for (auto _ : state) benchmark::DoNotOptimize(model.loss_and_gradient(X, Y));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Forward(benchmark::State& state) {
  ResNetHyper h;
  h.n_inputs = 17;
  h.n_classes = 16;
  const auto model = ResNetFFN::initialized(h, 3);
  const Matrix X = gaussian(2000, 17, 6);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(X));
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

void BM_Resample(benchmark::State& state) {
  std::vector<double> v(30000);
  for (std::size_t t = 0; t < v.size(); ++t) {
    v[t] = std::sin(2.0 * std::numbers::pi * 60.0 * static_cast<double>(t) / 30000.0);
  }
  const auto w = make_waveform(v, v, 30000, 60);
  for (auto _ : state) benchmark::DoNotOptimize(resample(w, 3000));
}
BENCHMARK(BM_Resample)->Unit(benchmark::kMicrosecond);

void BM_KnnPredict(benchmark::State& state) {
  const KnnModel model{gaussian(7000, 17, 7), labels(7000, 16, 8), 5};
  const Matrix Q = gaussian(200, 17, 9);
  for (auto _ : state) benchmark::DoNotOptimize(knn_predict(model, Q));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_KnnPredict)->Unit(benchmark::kMillisecond);

void BM_FryzeFeatures(benchmark::State& state) {
  const Matrix W = gaussian(100, 50, 10);
  for (auto _ : state) benchmark::DoNotOptimize(fryze_features(W, 50, 3000, 60));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_FryzeFeatures)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
