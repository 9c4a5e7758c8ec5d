#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "trafficgp/gp.hpp"
#include "trafficgp/rng.hpp"

using namespace trafficgp;

namespace {

struct Problem {
  std::vector<GPInput> x;
  Eigen::VectorXd y;
};

Problem make_problem(int n, std::uint64_t seed) {
  Rng g(seed);
  Problem p;
  p.y.resize(n);
  for (int i = 0; i < n; ++i) {
    GPInput q;
    q.u = {uniform_double(g, 3.0), uniform_double(g, 3.0)};
    q.v = {q.u.lon + 0.3, q.u.lat + uniform_double(g, 0.3)};
    q.t = uniform_double(g);
    p.x.push_back(q);
    p.y[i] = 25.0 + 5.0 * std::sin(q.u.lon + q.v.lat) + normal_double(g);
  }
  return p;
}

KernelConfig fixed_config() {
  KernelConfig cfg;
  cfg.spatial_lengthscale = 1.2;
  cfg.temporal_lengthscale = 0.5;
  cfg.signal_variance = 9.0;
  cfg.noise_variance = 0.1;
  return cfg;
}

void bm_train(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), 31);
  const KernelConfig cfg = fixed_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(GPModel::train(p.x, p.y, cfg));
  }
  state.SetComplexityN(state.range(0));
}

void bm_predict(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), 37);
  const GPModel m = GPModel::train(p.x, p.y, fixed_config());
  Rng g(41);
  GPInput q;
  q.u = {uniform_double(g, 3.0), uniform_double(g, 3.0)};
  q.v = {q.u.lon + 0.3, q.u.lat};
  q.t = 0.4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.predict(q));
  }
}

void bm_fit(benchmark::State& state) {
  const Problem p = make_problem(100, 43);
  FitOptions opts;
  opts.max_evals = static_cast<int>(state.range(0));
  opts.random_starts = 1;
  opts.seed = 47;
  for (auto _ : state) {
    benchmark::DoNotOptimize(GPModel::fit(p.x, p.y, opts));
  }
}

}  // namespace

BENCHMARK(bm_train)->Arg(50)->Arg(100)->Arg(200)->Arg(400)->Complexity()->Unit(
    benchmark::kMillisecond);
BENCHMARK(bm_predict)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_fit)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
