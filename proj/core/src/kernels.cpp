#include "trafficgp/kernels.hpp"

#include <cmath>

namespace trafficgp {

namespace {

double node_dist(const LonLat& a, const LonLat& b) {
  return std::hypot(a.lon - b.lon, a.lat - b.lat);
}

void check_side(const GPInput& a, const KernelConfig& cfg) {
  if (!a.side) throw ValidationError("side information requested but absent on an input");
  if (static_cast<std::size_t>(a.side->node_u.size()) != cfg.node_side_lengthscales.size() ||
      static_cast<std::size_t>(a.side->node_v.size()) != cfg.node_side_lengthscales.size() ||
      static_cast<std::size_t>(a.side->edge_numeric.size()) != cfg.edge_side_lengthscales.size()) {
    throw ValidationError("side information dimensions do not match kernel configuration");
  }
}

}  // namespace

void KernelConfig::validate() const {
  if (!(spatial_lengthscale > 0.0) || !(temporal_lengthscale > 0.0)) {
    throw ValidationError("lengthscales must be positive");
  }
  if (!(signal_variance > 0.0)) throw ValidationError("signal variance must be positive");
  if (noise_variance < 0.0) throw ValidationError("noise variance must be non-negative");
  for (double l : node_side_lengthscales) {
    if (!(l > 0.0)) throw ValidationError("side lengthscales must be positive");
  }
  for (double l : edge_side_lengthscales) {
    if (!(l > 0.0)) throw ValidationError("side lengthscales must be positive");
  }
}

double rbf(double distance, double lengthscale, bool squared_form) {
  const double l2 = lengthscale * lengthscale;
  if (squared_form) return std::exp(-distance * distance / (2.0 * l2));
  return std::exp(-std::abs(distance) / l2);
}

double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lengthscale,
           bool squared_form) {
  if (x.size() != y.size()) throw ValidationError("rbf input dimensions differ");
  return rbf((x - y).norm(), lengthscale, squared_form);
}

double edge_kernel(const GPInput& a, const GPInput& b, double lengthscale, bool squared_form) {
  return rbf(node_dist(a.u, b.u), lengthscale, squared_form) *
         rbf(node_dist(a.v, b.v), lengthscale, squared_form);
}

double spacetime_kernel(const GPInput& a, const GPInput& b, const KernelConfig& cfg) {
  double k = cfg.signal_variance * edge_kernel(a, b, cfg.spatial_lengthscale, cfg.squared_form) *
             rbf(a.t - b.t, cfg.temporal_lengthscale, cfg.squared_form);
  if (cfg.use_side_info) {
    check_side(a, cfg);
    check_side(b, cfg);
    const SideInfo& sa = *a.side;
    const SideInfo& sb = *b.side;
    for (std::size_t i = 0; i < cfg.node_side_lengthscales.size(); ++i) {
      const double l = cfg.node_side_lengthscales[i];
      k += rbf(sa.node_u(static_cast<Eigen::Index>(i)) - sb.node_u(static_cast<Eigen::Index>(i)),
               l, cfg.squared_form) *
           rbf(sa.node_v(static_cast<Eigen::Index>(i)) - sb.node_v(static_cast<Eigen::Index>(i)),
               l, cfg.squared_form);
    }
    for (std::size_t j = 0; j < cfg.edge_side_lengthscales.size(); ++j) {
      k += rbf(sa.edge_numeric(static_cast<Eigen::Index>(j)) -
                   sb.edge_numeric(static_cast<Eigen::Index>(j)),
               cfg.edge_side_lengthscales[j], cfg.squared_form);
    }
    if (sa.edge_onehot.size() != sb.edge_onehot.size()) {
      throw ValidationError("side information dimensions do not match");
    }
    k += sa.edge_onehot.dot(sb.edge_onehot);
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const std::vector<GPInput>& x, const KernelConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = spacetime_kernel(x[static_cast<std::size_t>(i)],
                                        x[static_cast<std::size_t>(j)], cfg);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd gram(const std::vector<GPInput>& x, const KernelConfig& cfg) {
  Eigen::MatrixXd g = kernel_matrix(x, cfg);
  g.diagonal().array() += cfg.noise_variance;
  return g;
}

}  // namespace trafficgp
