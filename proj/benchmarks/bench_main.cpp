#include <benchmark/benchmark.h>

#include "tsketch/adversary.hpp"
#include "tsketch/heavy_hitters.hpp"
#include "tsketch/f2_sketch.hpp"
#include "tsketch/l1_sketch.hpp"
#include "tsketch/robust_f2.hpp"
#include "tsketch/sizing.hpp"
#include "tsketch/tri_framework.hpp"

using namespace tsketch;

namespace {

SeedPath seed_of(uint64_t s) { return SeedPath{s, {}}; }

void BM_SignColumn(benchmark::State& state) {
  SignFamily signs(123, state.range(0));
  std::vector<double> st(size_t(state.range(0)), 0.0);
  uint32_t a = 1;
  for (auto _ : state) {
    signs.apply_column(std::span<double>(st), ++a % 1024 + 1, 3.0);
    benchmark::DoNotOptimize(st.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SignColumn)->Arg(128)->Arg(2048);

void BM_F2Update(benchmark::State& state) {
  F2Sketch sk(seed_of(7), 4096, F2Shape{8, state.range(0)});
  int64_t t = 0;
  for (auto _ : state) {
    sk.update({++t, uint32_t(t % 4096) + 1, (t & 1) ? 5 : -5});
    benchmark::DoNotOptimize(sk.state().data());
  }
}
BENCHMARK(BM_F2Update)->Arg(16)->Arg(128);

void BM_F2Estimate(benchmark::State& state) {
  F2Sketch sk(seed_of(8), 4096, F2Shape{24, state.range(0)});
  for (int64_t t = 1; t <= 2000; ++t)
    sk.update({t, uint32_t(t % 4096) + 1, t % 13 - 6});
  for (auto _ : state) benchmark::DoNotOptimize(sk.estimate());
}
BENCHMARK(BM_F2Estimate)->Arg(128)->Arg(800);

void BM_L1Update(benchmark::State& state) {
  L1Sketch sk(seed_of(9), 4096, state.range(0));
  int64_t t = 0;
  for (auto _ : state) {
    sk.update({++t, uint32_t(t % 4096) + 1, 3});
    benchmark::DoNotOptimize(sk.state().data());
  }
}
BENCHMARK(BM_L1Update)->Arg(148);

void BM_TreeUpdateExact(benchmark::State& state) {
  SizingOverrides ov;
  ov.B = 16;
  Params p = size_parameters(1024, int64_t(1) << 40, 0.2, ov);
  TreeState tree(p, seed_of(10));
  Rng64 rng(5);
  int64_t t = 0;
  for (auto _ : state) {
    tree.process_update({++t, uint32_t(rng.next_below(1024)) + 1,
                         int64_t(rng.next_below(100)) + 1});
    benchmark::DoNotOptimize(tree.time());
  }
}
BENCHMARK(BM_TreeUpdateExact);

void BM_TreeUpdateRandomized(benchmark::State& state) {
  SizingOverrides ov;
  ov.B = 10;
  ov.L_max = int64_t(1) << 40;
  ov.sketch_eps = 0.3;
  ov.sketch_log2_inv_delta = 5;
  ov.realization = SketchRealization::Random;
  Params p = size_parameters(4096, int64_t(1) << 30, 0.2, ov);
  TreeState tree(p, seed_of(11));
  Rng64 rng(6);
  int64_t t = 0;
  for (auto _ : state) {
    tree.process_update({++t, uint32_t(rng.next_below(4096)) + 1,
                         int64_t(rng.next_below(100)) + 1});
    benchmark::DoNotOptimize(tree.time());
  }
}
BENCHMARK(BM_TreeUpdateRandomized);

void BM_TriUpdateExact(benchmark::State& state) {
  TriFunction fn = make_tri_function(parse_loss("lp_p", 1.0),
                                     TriSketchKind::ExactOracle, 1024,
                                     int64_t(1) << 40);
  TriParams tp = size_tri(fn, 1024, int64_t(1) << 40, 2.0, 4.0);
  TriEstimator est(fn, tp, seed_of(12));
  Rng64 rng(7);
  int64_t t = 0;
  for (auto _ : state) {
    est.process_update({++t, uint32_t(rng.next_below(1024)) + 1,
                        int64_t(rng.next_below(40)) + 1});
    benchmark::DoNotOptimize(est.time());
  }
}
BENCHMARK(BM_TriUpdateExact);

void BM_HeavyReport(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    SizingOverrides ov;
    ov.B = 16;
    ov.mode = RunMode::Streaming;
    Params p = size_parameters(256, 4096, 0.0025, ov);
    TreeState tree(p, seed_of(13));
    int64_t t = 0;
    for (uint32_t i = 1; i <= 256; ++i)
      tree.process_update({++t, i, i == 5 ? 30000 : 700});
    state.ResumeTiming();
    benchmark::DoNotOptimize(find_heavy(tree, 0.5).hits.size());
  }
}
BENCHMARK(BM_HeavyReport);

}  // namespace

BENCHMARK_MAIN();
