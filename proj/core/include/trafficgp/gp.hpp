#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "trafficgp/kernels.hpp"

namespace trafficgp {

struct Prediction {
  double mean = 0.0;      // posterior mean clamped to be non-negative
  double raw_mean = 0.0;  // unclamped posterior mean
  double variance = 0.0;  // latent-function variance (no observation noise), clamped at zero
};

// Hyperparameter search settings. The budget caps likelihood evaluations during
// the search; the final refit at the chosen hyperparameters is not counted.
struct FitOptions {
  bool use_side_info = false;
  bool squared_form = false;
  std::uint64_t seed = 0;
  int max_evals = 200;
  int random_starts = 3;  // log-uniform restarts in addition to the data-driven start
  double scale_lower = 1e-3;  // bounds for lengthscales and signal variance
  double scale_upper = 1e3;
  double noise_lower = 1e-6;  // noise upper bound is max(var(y), 2 * noise_lower)
};

class GPModel {
 public:
  // Conditions on the data at fixed hyperparameters. The prior mean is the
  // target average; Cholesky failures escalate diagonal jitter from 1e-8 by
  // factors of ten up to 1e-2 before giving up.
  static GPModel train(std::vector<GPInput> inputs, const Eigen::VectorXd& targets,
                       KernelConfig cfg);

  // Maximizes the log marginal likelihood over hyperparameters: one
  // data-driven start (median-distance lengthscales, variance-based signal and
  // noise) plus random restarts, then cyclic golden-section line searches in
  // log space on the best start.
  static GPModel fit(std::vector<GPInput> inputs, const Eigen::VectorXd& targets,
                     const FitOptions& opts);

  Prediction predict(const GPInput& query) const;

  const KernelConfig& config() const { return cfg_; }
  double prior_mean() const { return mu0_; }
  double log_marginal_likelihood() const { return lml_; }
  double applied_jitter() const { return jitter_; }
  Eigen::Index size() const { return delta_y_.size(); }

 private:
  GPModel() = default;

  std::vector<GPInput> inputs_;
  KernelConfig cfg_;
  double mu0_ = 0.0;
  double lml_ = 0.0;
  double jitter_ = 0.0;
  Eigen::VectorXd delta_y_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Log marginal likelihood of the targets under the given hyperparameters, with
// the prior mean set to the target average.
double log_marginal_likelihood(const std::vector<GPInput>& inputs, const Eigen::VectorXd& targets,
                               const KernelConfig& cfg);

}  // namespace trafficgp
