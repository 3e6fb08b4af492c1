#include <corder/bundled.hpp>
#include <corder/discovery.hpp>
#include <corder/effect.hpp>
#include <corder/elicitation.hpp>
#include <corder/sims.hpp>

#include <benchmark/benchmark.h>

using namespace corder;

static void BM_TripletPerfect(benchmark::State& state) {
  auto g = bundled_graph(state.range(0) == 0 ? "asia" : "child");
  for (auto _ : state) {
    PerfectExpert e(g), tb(g);
    benchmark::DoNotOptimize(triplet_pipeline(g.vars, e, tb));
  }
}
BENCHMARK(BM_TripletPerfect)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_PairwiseEpsilon(benchmark::State& state) {
  auto g = bundled_graph("child");
  for (auto _ : state) {
    EpsilonExpert e({0.3, 1, g});
    benchmark::DoNotOptimize(pairwise_pipeline(g.vars, e));
  }
}
BENCHMARK(BM_PairwiseEpsilon)->Unit(benchmark::kMillisecond);

static void BM_EnumerateTuples(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_tuples(n, 3, 3, 7));
}
BENCHMARK(BM_EnumerateTuples)->Arg(20)->Arg(50);

static void BM_DSeparation(benchmark::State& state) {
  auto g = bundled_graph("child");
  std::vector<NodeId> z{3, 7, 11};
  for (auto _ : state)
    for (NodeId x = 0; x < g.size(); ++x) benchmark::DoNotOptimize(d_separated(g.adj, x, (x + 5) % g.size(), z));
}
BENCHMARK(BM_DSeparation);

static void BM_OraclePc(benchmark::State& state) {
  auto g = bundled_graph("child");
  OracleCiTest test(g);
  for (auto _ : state) benchmark::DoNotOptimize(pc_cpdag(test));
}
BENCHMARK(BM_OraclePc)->Unit(benchmark::kMillisecond);

static void BM_Prop4(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sim_prop4(0.3, 100000, 1, static_cast<std::size_t>(state.range(0)), false));
}
BENCHMARK(BM_Prop4)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_DagClasses(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dag_classes(5));
}
BENCHMARK(BM_DagClasses)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
