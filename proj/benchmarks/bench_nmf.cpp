#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "trafficgp/nmf.hpp"
#include "trafficgp/rng.hpp"

using namespace trafficgp;

namespace {

// Speed-like dense matrix with a planted low-rank structure plus noise.
Eigen::MatrixXd make_matrix(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  Rng g(seed);
  Eigen::MatrixXd w(n, 4), h(4, m);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 1.0 + uniform_double(g, 4.0);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = 1.0 + uniform_double(g, 4.0);
  Eigen::MatrixXd d = w * h;
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] += normal_double(g);
  return d.cwiseMax(0.5);
}

void bm_factorize_dense(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto m = static_cast<Eigen::Index>(state.range(1));
  const Eigen::MatrixXd d = make_matrix(n, m, 17);
  const BoolGrid mask = BoolGrid::Constant(n, m, true);
  NMFConfig cfg;
  cfg.k = static_cast<int>(state.range(2));
  cfg.lambda = 1.0;
  cfg.max_iters = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(factorize(d, mask, cfg));
  }
  state.SetItemsProcessed(state.iterations() * n * m * cfg.max_iters);
}

void bm_factorize_sparse(benchmark::State& state) {
  const Eigen::Index n = 476, m = 288;
  const Eigen::MatrixXd d = make_matrix(n, m, 23);
  Rng g(29);
  BoolGrid mask(n, m);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform_double(g) < 0.01 * static_cast<double>(state.range(0));
  }
  NMFConfig cfg;
  cfg.k = 5;
  cfg.lambda = 1.0;
  cfg.max_iters = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(factorize(d, mask, cfg));
  }
}

}  // namespace

BENCHMARK(bm_factorize_dense)
    ->Args({60, 288, 2})
    ->Args({60, 288, 5})
    ->Args({240, 288, 5})
    ->Args({240, 288, 10})
    ->Unit(benchmark::kMillisecond);

// range(0) is the observed percentage of the 476x288 grid
BENCHMARK(bm_factorize_sparse)->Arg(10)->Arg(30)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
