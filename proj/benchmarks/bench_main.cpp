#include <benchmark/benchmark.h>

#include <vector>

#include "cht/evolution.hpp"
#include "cht/linkpred.hpp"
#include "cht/netgen.hpp"
#include "cht/sampling.hpp"

namespace {

// Arguments: size, density in percent.
void BM_ch2_l3n(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const cht::BipartiteMask m = cht::gen_er(n, n, state.range(1) / 100.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cht::ch2_l3n(m));
}
BENCHMARK(BM_ch2_l3n)
    ->ArgsProduct({{256, 512, 1024}, {1, 5, 10, 20}})
    ->Unit(benchmark::kMillisecond);

void BM_ch3_l3p(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const cht::BipartiteMask m = cht::gen_er(n, n, state.range(1) / 100.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cht::ch3_l3p(m));
}
BENCHMARK(BM_ch3_l3p)
    ->ArgsProduct({{256, 512}, {1, 5, 10}})
    ->Args({1024, 5})
    ->Unit(benchmark::kMillisecond);

void BM_gen_brf(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  cht::BrfParams p;
  p.randomness = 0.25;
  p.target_density = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(cht::gen_brf(n, n, p));
}
BENCHMARK(BM_gen_brf)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_gen_bsf(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  cht::BsfParams p;
  p.target_density = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(cht::gen_bsf(n, n, p));
}
BENCHMARK(BM_gen_bsf)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_weighted_sample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  cht::Rng rng(3);
  std::vector<double> w(n);
  for (double& v : w) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(cht::weighted_sample_without_replacement(w, n / 10, rng));
}
BENCHMARK(BM_weighted_sample)->Arg(1 << 12)->Arg(1 << 16);

void BM_evolve_step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const cht::BipartiteMask m = cht::gen_er(n, n, 0.05, 2);
  cht::EvolutionConfig cfg;
  cfg.percolate = false;
  cht::LayerState layer(Eigen::MatrixXd::Random(n, n), m);
  std::uint64_t step = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cht::evolve_step(layer, cfg, {0.05, 0.5, step++, 0, false, false}));
  }
}
BENCHMARK(BM_evolve_step)->Arg(256)->Arg(784)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
