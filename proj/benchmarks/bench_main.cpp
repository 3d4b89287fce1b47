#include "qmimo/estimators.hpp"
#include "qmimo/model.hpp"
#include "qmimo/replica.hpp"

#include <benchmark/benchmark.h>

using namespace qmimo;

namespace {

SystemConfig bench_system(int bits) {
  SystemConfig s;
  s.K = 16;
  s.N = 64;
  s.T1 = 16;
  s.T2 = 144;
  s.noise_var = 0.4;
  s.quantizer = bits > 0 ? make_quantizer(bits, 0.5) : make_unquantized();
  return s;
}

void BM_Jcd(benchmark::State& state) {
  const auto s = bench_system(static_cast<int>(state.range(0)));
  const auto blk = generate_block(s, {1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(jcd_estimate(blk.Ytilde, blk.X1, s));
}
BENCHMARK(BM_Jcd)->Arg(1)->Arg(3)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_KnownChannel(benchmark::State& state) {
  const auto s = bench_system(static_cast<int>(state.range(0)));
  const auto blk = generate_block(s, {1, 0});
  const auto data = blk.Ytilde.columns(s.T1, s.T2);
  for (auto _ : state) benchmark::DoNotOptimize(detect_known_channel(data, blk.H, s));
}
BENCHMARK(BM_KnownChannel)->Arg(3)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_GenerateBlock(benchmark::State& state) {
  const auto s = bench_system(3);
  std::uint64_t t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_block(s, {1, t++}));
}
BENCHMARK(BM_GenerateBlock)->Unit(benchmark::kMicrosecond);

void BM_Chi(benchmark::State& state) {
  const auto q = make_quantizer(static_cast<int>(state.range(0)), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(chi(0.8, 0.9, 1.0, 1.0, 0.1, q));
}
BENCHMARK(BM_Chi)->Arg(1)->Arg(3)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_SolveFixedPoint(benchmark::State& state) {
  ReplicaConfig c;
  c.noise_var = 0.1;
  c.quantizer = make_quantizer(static_cast<int>(state.range(0)), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_fixed_point(c));
}
BENCHMARK(BM_SolveFixedPoint)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
