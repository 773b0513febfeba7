#include <benchmark/benchmark.h>

#include <vector>

#include "spectrasep/cube.hpp"
#include "spectrasep/evaluation.hpp"
#include "spectrasep/forest.hpp"
#include "spectrasep/rng.hpp"
#include "spectrasep/tissue_index.hpp"

using namespace spectrasep;

namespace {

constexpr std::size_t kWidth = 640;
constexpr std::size_t kHeight = 480;

SpectralCube filled(CalibrationState state, float lo, float hi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(kWidth * kHeight * kHsiChannels);
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return SpectralCube(kWidth, kHeight, kHsiChannels, {}, state, std::move(v));
}

void BM_CalibrateNormalize(benchmark::State& state) {
  const auto raw = filled(CalibrationState::raw_counts, 100.0f, 3000.0f, 1);
  const auto white = filled(CalibrationState::raw_counts, 3500.0f, 4000.0f, 2);
  const auto dark = filled(CalibrationState::raw_counts, 0.0f, 50.0f, 3);
  for (auto _ : state) {
    auto out = l1_normalize(calibrate(raw, white, dark));
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * raw.size() * sizeof(float)));
}
BENCHMARK(BM_CalibrateNormalize)->Unit(benchmark::kMillisecond);

void BM_TissueIndex(benchmark::State& state) {
  const auto cube = l1_normalize(filled(CalibrationState::reflectance, 0.05f, 1.0f, 4));
  const Mask mask(kWidth, kHeight, true);
  const auto spec = default_index_specs()[0];
  for (auto _ : state) {
    auto map = compute_index(cube, spec, mask);
    benchmark::DoNotOptimize(&map);
  }
}
BENCHMARK(BM_TissueIndex)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t p = 104;
  Rng rng(5);
  std::vector<std::string> ids, names;
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.3) ? 1 : 0;
    ids.push_back("r" + std::to_string(i));
    labels.push_back(y);
    for (std::size_t j = 0; j < p; ++j) values.push_back(rng.normal(j < 4 ? y : 0.0, 1.0));
  }
  const FeatureTable table(ids, names, values);
  ForestParams params;
  params.n_trees = 100;
  for (auto _ : state) {
    auto forest = RandomForest::fit(table, labels, 7, params);
    benchmark::DoNotOptimize(&forest);
  }
}
BENCHMARK(BM_ForestFit)->Arg(150)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 600; ++i) {
    y.push_back(i % 4 == 0 ? 1 : 0);
    v.push_back(rng.normal(y.back(), 1.0));
  }
  for (auto _ : state) {
    auto r = bootstrap_ci(v, y, 1000, 8);
    benchmark::DoNotOptimize(&r);
  }
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
