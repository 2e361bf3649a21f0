#include "msvm2/geometry.hpp"
#include "msvm2/selection.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

using namespace msvm2;

// Gaussian blobs around Q evenly spaced centers on the unit circle.
Dataset blobs(int q, int per_class, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int m = q * per_class;
  PointMatrix points(m, 2);
  std::vector<int> labels(static_cast<std::size_t>(m));
  std::vector<std::string> names;
  for (int k = 0; k < q; ++k) names.push_back("c" + std::to_string(k));
  for (int i = 0; i < m; ++i) {
    const int k = i % q;
    const double angle = 6.283185307179586 * k / q;
    points(i, 0) = radius * std::cos(angle) + noise(rng);
    points(i, 1) = radius * std::sin(angle) + noise(rng);
    labels[static_cast<std::size_t>(i)] = k;
  }
  return make_dataset(std::move(points), std::move(labels), std::move(names));
}

void BM_BuildGram(benchmark::State& state) {
  const Dataset data = blobs(4, static_cast<int>(state.range(0)) / 4, 3.0, 1);
  const KernelSpec kernel = KernelSpec::gaussian(0.5, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(build_gram(kernel, data.points));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGram)->RangeMultiplier(2)->Range(32, 512)->Complexity();

void BM_SolveDual(benchmark::State& state) {
  const int q = static_cast<int>(state.range(1));
  const Dataset data = blobs(q, static_cast<int>(state.range(0)) / q, 2.5, 2);
  const DualProblem problem(build_gram(KernelSpec::gaussian(0.5, 0.1), data.points), data.labels, q);
  long iterations = 0;
  for (auto _ : state) {
    const DualSolution s = solve_dual(problem);
    iterations = s.iterations;
    benchmark::DoNotOptimize(s.objective);
  }
  state.counters["solver_iterations"] = static_cast<double>(iterations);
}
BENCHMARK(BM_SolveDual)
    ->Args({60, 3})
    ->Args({60, 4})
    ->Args({120, 3})
    ->Args({240, 4})
    ->Unit(benchmark::kMillisecond);

void BM_MinEnclosingBall(benchmark::State& state) {
  const Dataset data = blobs(3, static_cast<int>(state.range(0)) / 3, 3.0, 3);
  const GramMatrix gram = build_gram(KernelSpec::gaussian(0.2, 0.1), data.points);
  for (auto _ : state) benchmark::DoNotOptimize(min_enclosing_ball(gram).radius);
}
BENCHMARK(BM_MinEnclosingBall)->Arg(60)->Arg(240)->Arg(960)->Unit(benchmark::kMillisecond);

void BM_ExactLoo(benchmark::State& state) {
  const Dataset data = blobs(3, 20, 2.5, 4);
  TrainOptions options;
  options.C = 5.0;
  LooOptions loo;
  loo.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_loo(data, KernelSpec::gaussian(0.5), options, loo).error_count);
  }
}
BENCHMARK(BM_ExactLoo)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
