// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0

// Serial vs OpenMP kernels on a desk-sized batch (GRU, hidden 64, n 50, m 182).

#include <benchmark/benchmark.h>

#include <random>

#include "tfcl/kernels.hpp"

namespace {

using namespace tfcl;

struct Fixture {
  nn::ModelParams params;
  std::vector<data::SequencePair> pairs;
  std::vector<nn::TFMask> masks;
  std::vector<const data::SequencePair*> pair_refs;
  std::vector<const nn::TFMask*> mask_refs;

  Fixture(std::size_t batch, std::size_t hidden, std::size_t n, std::size_t m)
      : params(nn::init_params({nn::CellKind::gru, 3, hidden, 1}, 1)) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < batch; ++i) {
      data::SequencePair p;
      p.input = Series(static_cast<Eigen::Index>(n), 3);
      p.target = Series(static_cast<Eigen::Index>(m), 3);
      for (Eigen::Index k = 0; k < p.input.size(); ++k) p.input.data()[k] = g(rng);
      for (Eigen::Index k = 0; k < p.target.size(); ++k) p.target.data()[k] = g(rng);
      pairs.push_back(std::move(p));
      nn::TFMask mask(m - 1);
      for (auto& v : mask) v = coin(rng);
      masks.push_back(std::move(mask));
    }
    for (std::size_t i = 0; i < batch; ++i) {
      pair_refs.push_back(&pairs[i]);
      mask_refs.push_back(&masks[i]);
    }
  }
};

Fixture& desk() {
  static Fixture f(32, 64, 50, 182);
  return f;
}

void BM_GradientSerial(benchmark::State& state) {
  auto& f = desk();
  nn::Gradients g;
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::batch_gradient_serial(f.params, f.pair_refs, f.mask_refs, 4, g));
}

void BM_GradientParallel(benchmark::State& state) {
  auto& f = desk();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  nn::Gradients g;
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::batch_gradient_parallel(f.params, f.pair_refs, f.mask_refs, 4, g));
  kernels::set_num_threads(0);
}

void BM_ForecastSerial(benchmark::State& state) {
  auto& f = desk();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::forecast_serial(f.params, f.pair_refs, 182, 4));
}

void BM_ForecastParallel(benchmark::State& state) {
  auto& f = desk();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::forecast_parallel(f.params, f.pair_refs, 182, 4));
  kernels::set_num_threads(0);
}

}  // namespace

BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForecastSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForecastParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
