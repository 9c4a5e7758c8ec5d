#pragma once

#include <optional>
#include <vector>

#include "trafficgp/common.hpp"
#include "trafficgp/features.hpp"
#include "trafficgp/road_network.hpp"

namespace trafficgp {

// Covariance hyperparameters. The radial basis takes the form written with an
// unsquared norm, k(x,x') = exp(-||x-x'|| / l^2); `squared_form` switches to
// the conventional squared-exponential exp(-||x-x'||^2 / (2 l^2)).
struct KernelConfig {
  double spatial_lengthscale = 1.0;
  double temporal_lengthscale = 1.0;
  double signal_variance = 1.0;  // sigma_f^2
  double noise_variance = 0.1;   // sigma^2
  std::vector<double> node_side_lengthscales;  // one per node-wise numeric feature
  std::vector<double> edge_side_lengthscales;  // one per edge-wise numeric feature
  bool use_side_info = false;
  bool squared_form = false;

  void validate() const;
};

// One GP input: a directed segment given by its endpoint coordinates, a
// time-of-day scaled to [0, 1), and optional side information.
struct GPInput {
  LonLat u, v;
  double t = 0.0;
  std::optional<SideInfo> side;
};

double rbf(double distance, double lengthscale, bool squared_form = false);
double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lengthscale,
           bool squared_form = false);

// Product of endpoint kernels: k(u,u') * k(v,v') over (lon,lat) distances.
// Reversing one segment's direction changes the value.
double edge_kernel(const GPInput& a, const GPInput& b, double lengthscale,
                   bool squared_form = false);

// Separable signal covariance sigma_f^2 * k_s(u,u') * k_s(v,v') * k_t(t,t'),
// plus, when side info is on, additive terms: per node-wise feature the
// product of its endpoint kernels, per numeric edge feature a scalar kernel,
// and the dot product of the one-hot blocks.
double spacetime_kernel(const GPInput& a, const GPInput& b, const KernelConfig& cfg);

// Pure kernel matrix (no noise), symmetric by construction.
Eigen::MatrixXd kernel_matrix(const std::vector<GPInput>& x, const KernelConfig& cfg);

// kernel_matrix plus sigma^2 on the diagonal.
Eigen::MatrixXd gram(const std::vector<GPInput>& x, const KernelConfig& cfg);

}  // namespace trafficgp
