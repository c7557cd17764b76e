#include <benchmark/benchmark.h>

#include "bless/chi2.hpp"
#include "bless/em.hpp"
#include "bless/model.hpp"
#include "bless/simulation.hpp"

namespace {

using namespace bless;

BlessModel bench_model(int copies, int k, int d) {
  SimConfig config;
  config.p = copies * k;
  config.k = k;
  config.d = d;
  config.seed = 1;
  return random_model(config, GraphicalMatrix::identity_stack(k, copies));
}

void BM_PmfDirect(benchmark::State& state) {
  const BlessModel m = bench_model(static_cast<int>(state.range(0)), 3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(response_pmf_direct(m));
}
BENCHMARK(BM_PmfDirect)->Arg(2)->Arg(3);

void BM_PmfKhatriRao(benchmark::State& state) {
  const BlessModel m = bench_model(static_cast<int>(state.range(0)), 3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(response_pmf_kr(m));
}
BENCHMARK(BM_PmfKhatriRao)->Arg(2)->Arg(3);

void BM_EStep(benchmark::State& state) {
  const BlessModel m = bench_model(2, 3, 3);
  const ResponseTable table = compress(sample_dataset(m, static_cast<int>(state.range(0)), 2).data);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(m, table));
}
BENCHMARK(BM_EStep)->Arg(1000)->Arg(10000);

void BM_Chi2Test(benchmark::State& state) {
  const BlessModel m = bench_model(2, 2, 2);
  const Dataset data = sample_dataset(m, static_cast<int>(state.range(0)), 3).data;
  for (auto _ : state) benchmark::DoNotOptimize(chi2_independence_test(data, {0, 2}, {1, 3}));
}
BENCHMARK(BM_Chi2Test)->Arg(2000)->Arg(20000);

void BM_FitKnownG(benchmark::State& state) {
  const BlessModel m = bench_model(3, 2, 3);
  const Dataset data = sample_dataset(m, 10000, 4).data;
  EmConfig config;
  config.restarts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_known_g(data, m.g, 3, config));
}
BENCHMARK(BM_FitKnownG)->Unit(benchmark::kMillisecond);

void BM_FitUnknownG(benchmark::State& state) {
  const BlessModel m = bench_model(3, 2, 3);
  const Dataset data = sample_dataset(m, 10000, 5).data;
  EmConfig config;
  config.restarts = 2;
  config.max_iters = 300;
  for (auto _ : state) benchmark::DoNotOptimize(fit_unknown_g(data, 2, 3, config));
}
BENCHMARK(BM_FitUnknownG)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
