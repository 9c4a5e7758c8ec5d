#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"
#include "trafficgp/speed_data.hpp"

namespace trafficgp {

struct NMFConfig {
  int k = 1;
  double lambda = 100.0;  // L1 weight on both factors
  int max_iters = 200;    // full coordinate-descent cycles
  std::uint64_t seed = 0;
  double rel_tol = 0.0;   // early stop on relative residual change; 0 disables
};

struct Factorization {
  Eigen::MatrixXd w;  // N x K, non-negative
  Eigen::MatrixXd h;  // K x M, non-negative
  // Per completed cycle: sum of squared residuals over observed entries, and
  // the full objective (0.5 * residual + lambda * (sum W + sum H)). The
  // objective is the quantity each coordinate update minimizes, so it is
  // non-increasing; the raw residual is only guaranteed monotone at lambda=0.
  std::vector<double> residual_trace;
  std::vector<double> objective_trace;
  int iterations = 0;
  NMFConfig config;
};

// Sparse non-negative factorization of the observed entries of `d` by cyclic
// coordinate descent with single-variable Newton steps truncated at zero.
// Factors are initialized uniformly on [0, sqrt(mean_observed/K)) from `seed`.
// Full masks take a cached-product path; partial masks maintain an incremental
// residual over observed entries. Identical inputs give identical output.
Factorization factorize(const Eigen::MatrixXd& d, const BoolGrid& mask, const NMFConfig& cfg);
Factorization factorize(const SpeedMatrix& d, const NMFConfig& cfg);

// One full update cycle (all of W cluster-by-cluster, then all of H) in place.
// Returns the masked squared residual after the sweep.
double cd_cycle(const Eigen::MatrixXd& d, const BoolGrid& mask, Eigen::MatrixXd& w,
                Eigen::MatrixXd& h, double lambda);

// 0.5 * sum over observed (d - wh)^2 + lambda * (sum W + sum H).
double masked_loss(const Eigen::MatrixXd& d, const BoolGrid& mask, const Eigen::MatrixXd& w,
                   const Eigen::MatrixXd& h, double lambda);

// Reconstruction W*H with entries clamped at zero from below.
Eigen::MatrixXd impute(const Factorization& f);

// Writes W.csv / H.csv (row-major, 17 significant digits, no header) and
// metadata.txt (k, lambda, seed, iterations, final residual) into `dir`.
void save_factorization(const std::string& dir, const Factorization& f);
Factorization load_factorization(const std::string& dir);

}  // namespace trafficgp
