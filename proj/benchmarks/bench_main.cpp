#include <mdeconv/estimators.hpp>
#include <mdeconv/lkernel.hpp>
#include <mdeconv/simulate.hpp>

#include <benchmark/benchmark.h>

using namespace mdeconv;

namespace {

void
BM_ComplexGamma(benchmark::State& state)
{
  double y = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(complex_gamma(cplx(0.7, y)));
    y += 0.001;
  }
}
BENCHMARK(BM_ComplexGamma);

void
BM_NumericLKernelTable(benchmark::State& state)
{
  const auto model = ErrorModel::uniform(1.0);
  const auto kernel = build_gaussian_jackknife_kernel(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(lkernel_numeric(model, kernel, 0.0, 0.2));
}
BENCHMARK(BM_NumericLKernelTable)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void
BM_PointEstimate(benchmark::State& state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sample =
    generate_sample(TargetDensity::exponential(1.0), ErrorModel::uniform(1.0), n, 1);
  const EstimatorConfig config{ AtPoint{ 1.0 }, 0.0, 0.3, lkernel_closed_beta(1.0, 1, 0.3) };
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate(sample, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_PointEstimate)->Arg(1000)->Arg(100000);

void
BM_ZeroEstimateNumericTable(benchmark::State& state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sample =
    generate_sample(TargetDensity::exponential(2.0), ErrorModel::power(0.5), n, 1);
  const auto l = lkernel_zero_numeric(ErrorModel::power(0.5), build_exponential_zero_kernel(1),
                                      0.25, 0.2);
  const EstimatorConfig config{ AtZero{}, 0.25, 0.2, l };
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate(sample, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ZeroEstimateNumericTable)->Arg(1000)->Arg(100000);

} // namespace

BENCHMARK_MAIN();
