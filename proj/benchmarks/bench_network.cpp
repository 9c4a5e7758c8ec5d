#include <benchmark/benchmark.h>

#include "trafficgp/features.hpp"
#include "trafficgp/road_network.hpp"
#include "trafficgp/synthetic.hpp"

using namespace trafficgp;

namespace {

// Grid road network with roughly 2 segments per node.
RoadNetwork make_network(int side) {
  SynthSpec spec;
  spec.grid_rows = side;
  spec.grid_cols = side;
  spec.n_segments = 2 * side * side - 4;
  spec.interval_minutes = 60;
  spec.spatial_regimes = 1;
  spec.temporal_regimes = 1;
  spec.regime_means = {30.0};
  spec.days = 1;
  spec.seed = 53;
  return RoadNetwork::from_records(generate_synthetic(spec).edges);
}

void bm_betweenness(benchmark::State& state) {
  const RoadNetwork net = make_network(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_edge_betweenness(net));
  }
  state.SetComplexityN(static_cast<std::int64_t>(net.edges().size()));
}

void bm_feature_table(benchmark::State& state) {
  const RoadNetwork net = make_network(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(FeatureTable::derive(net));
  }
}

}  // namespace

BENCHMARK(bm_betweenness)->Arg(6)->Arg(10)->Arg(16)->Complexity()->Unit(
    benchmark::kMillisecond);
BENCHMARK(bm_feature_table)->Arg(10)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
