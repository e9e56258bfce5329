// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <numeric>

#include "spinarray/kernels.hpp"
#include "spinarray/moments.hpp"
#include "spinarray/simulate.hpp"

namespace {

using namespace spinarray;

kernels::GaussianSource source(int m) {
  const auto res = SqueezedResource::from_squeezing(1450, from_db(-6.5), 0.94);
  const auto model = partition_moments(res, SensorPartition::equal(1450, m, 0.94));
  kernels::GaussianSource src;
  src.mean = Eigen::VectorXd::Zero(m);
  src.sqrt_cov = symmetric_sqrt(model.gamma);
  src.seed = 7;
  return src;
}

template <auto Kernel>
void BM_Sample(benchmark::State& state) {
  const auto src = source(static_cast<int>(state.range(1)));
  kernels::RowMatrix out(state.range(0), state.range(1));
  for (auto _ : state) {
    Kernel(src, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_Moments(benchmark::State& state) {
  const auto src = source(static_cast<int>(state.range(1)));
  kernels::RowMatrix rows(state.range(0), state.range(1));
  kernels::sample_gaussian(src, rows);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_SpinSum(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const kernels::SpinOp sz = {0.5, 0.0, 0.0, -0.5};
  std::vector<int> spins(static_cast<std::size_t>(n));
  std::iota(spins.begin(), spins.end(), 0);
  kernels::cvec in(std::size_t{1} << n, 1.0), out(in.size());
  for (auto _ : state) {
    Kernel(sz, spins, in, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void shot_args(benchmark::internal::Benchmark* b) {
  for (const int shots : {1 << 14, 1 << 17}) {
    for (const int m : {2, 3}) b->Args({shots, m});
  }
}

BENCHMARK(BM_Sample<kernels::sample_gaussian_serial>)->Name("sample/serial")->Apply(shot_args);
BENCHMARK(BM_Sample<kernels::sample_gaussian>)->Name("sample/omp")->Apply(shot_args);
BENCHMARK(BM_Moments<kernels::column_moments_serial>)->Name("moments/serial")->Apply(shot_args);
BENCHMARK(BM_Moments<kernels::column_moments>)->Name("moments/omp")->Apply(shot_args);
BENCHMARK(BM_SpinSum<kernels::apply_spin_sum_serial>)->Name("spin_sum/serial")->DenseRange(8, 12, 2);
BENCHMARK(BM_SpinSum<kernels::apply_spin_sum>)->Name("spin_sum/omp")->DenseRange(8, 12, 2);

}  // namespace

BENCHMARK_MAIN();
