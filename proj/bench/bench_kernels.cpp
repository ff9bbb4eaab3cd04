// Serial reference vs OpenMP column kernels for the copula likelihood.

#include "clip/copula_model.hpp"
#include "clip/kernels.hpp"
#include "clip/solver.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

namespace {

struct Problem {
  clip::Matrix y1, y2, x1, x2;
  clip::CopulaSpec spec;
  clip::UnmixingPair pair;
};

Problem make_problem(int c, int v) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  auto logistic = [&] {
    const double p = u(rng);
    return std::log(p / (1.0 - p));
  };
  Problem p;
  p.x1.resize(c, v);
  p.x2.resize(c, v);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < v; ++j) {
      p.x1(i, j) = logistic();
      p.x2(i, j) = 0.8 * p.x1(i, j) + 0.6 * logistic();
    }
  p.spec.sigma.assign(static_cast<std::size_t>(c), 0.9);
  p.pair = clip::init_unmixing(c, 3);
  p.y1 = p.pair.w1 * p.x1;
  p.y2 = p.pair.w2 * p.x2;
  return p;
}

void BM_ScoresSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  clip::Matrix s1(p.y1.rows(), p.y1.cols()), s2(p.y2.rows(), p.y2.cols());
  for (auto _ : state) {
    auto t = clip::kernels::scores_serial(p.y1, p.y2, p.spec.sigma, {}, s1, s2);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(state.iterations() * p.y1.size());
}

void BM_ScoresParallel(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  clip::Matrix s1(p.y1.rows(), p.y1.cols()), s2(p.y2.rows(), p.y2.cols());
  for (auto _ : state) {
    auto t = clip::kernels::scores_parallel(p.y1, p.y2, p.spec.sigma, {}, s1, s2);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(state.iterations() * p.y1.size());
  state.counters["threads"] = omp_get_max_threads();
}

void BM_JointNll(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto exec = state.range(2) ? clip::Exec::Parallel : clip::Exec::Serial;
  for (auto _ : state) {
    auto nll = clip::joint_nll(p.pair.w1, p.pair.w2, p.x1, p.x2, p.spec, {}, exec);
    benchmark::DoNotOptimize(nll);
  }
  state.SetItemsProcessed(state.iterations() * p.x1.size());
}

}  // namespace

BENCHMARK(BM_ScoresSerial)->Args({4, 1024})->Args({4, 3600})->Args({75, 8192});
BENCHMARK(BM_ScoresParallel)->Args({4, 1024})->Args({4, 3600})->Args({75, 8192});
BENCHMARK(BM_JointNll)->Args({75, 8192, 0})->Args({75, 8192, 1});

BENCHMARK_MAIN();
