#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "normlens/attention.hpp"
#include "normlens/elb.hpp"
#include "normlens/norm.hpp"
#include "normlens/report.hpp"
#include "normlens/rng.hpp"
#include "normlens/signflip.hpp"
#include "normlens/tensor.hpp"

namespace {

using namespace normlens;

TokenBatch random_batch(std::size_t n, std::size_t l, std::size_t d) {
  Rng r(42);
  std::vector<double> data(n * l * d);
  for (double& v : data) v = 1.5 + r.normal();
  return TokenBatch(n, l, d, std::move(data));
}

NormConfig config_for(int i) {
  NormConfig cfg;
  cfg.method = static_cast<NormMethod>(i);
  return cfg;
}

void BM_Normalize(benchmark::State& state) {
  const auto x = random_batch(32, 64, static_cast<std::size_t>(state.range(1)));
  const NormConfig cfg = config_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(normalize(x, cfg));
  state.SetLabel(std::string(to_string(cfg.method)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.size()));
}
BENCHMARK(BM_Normalize)->ArgsProduct({{0, 1, 2, 3, 4}, {64, 256}});

void BM_AttentionScores(benchmark::State& state) {
  const auto x = random_batch(32, static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(attention_scores(x));
}
BENCHMARK(BM_AttentionScores)->Arg(16)->Arg(64)->Arg(128);

void BM_ShiftReport(benchmark::State& state) {
  const auto x = random_batch(32, 64, 256);
  NormConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(shift_report(x, cfg));
}
BENCHMARK(BM_ShiftReport)->Unit(benchmark::kMillisecond);

void BM_Elb(benchmark::State& state) {
  double k = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(elb(k, 1024, 256));
    k = k > 3.0 ? -1.0 : k + 1e-3;
  }
}
BENCHMARK(BM_Elb);

void BM_K50(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(k50(1024, 256));
}
BENCHMARK(BM_K50);

void BM_SignflipCount(benchmark::State& state) {
  const auto m = GaussianTokenModel::shared(256, 1.0, 1.0, 1.0, 1.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(count_signflip_events(m, n, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SignflipCount)->Arg(4096)->Arg(65536)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
