#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "trafficgp/kernels.hpp"
#include "trafficgp/rng.hpp"

using namespace trafficgp;

namespace {

GPInput make_input(double ulon, double ulat, double vlon, double vlat, double t) {
  GPInput q;
  q.u = {ulon, ulat};
  q.v = {vlon, vlat};
  q.t = t;
  return q;
}

SideInfo make_side(std::vector<double> nu, std::vector<double> nv, std::vector<double> en,
                   std::vector<double> oh) {
  SideInfo s;
  s.node_u = Eigen::Map<Eigen::VectorXd>(nu.data(), static_cast<Eigen::Index>(nu.size()));
  s.node_v = Eigen::Map<Eigen::VectorXd>(nv.data(), static_cast<Eigen::Index>(nv.size()));
  s.edge_numeric = Eigen::Map<Eigen::VectorXd>(en.data(), static_cast<Eigen::Index>(en.size()));
  s.edge_onehot = Eigen::Map<Eigen::VectorXd>(oh.data(), static_cast<Eigen::Index>(oh.size()));
  return s;
}

}  // namespace

TEST_CASE("scalar radial basis, plain form") {
  // distance equal to lengthscale squared decays to exp(-1)
  CHECK(rbf(4.0, 2.0) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK(rbf(0.0, 0.7) == 1.0);
  CHECK(rbf(1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // monotone decrease in distance
  CHECK(rbf(0.5, 1.0) > rbf(0.6, 1.0));
  CHECK(rbf(10.0, 3.0) > rbf(11.0, 3.0));
  // absolute value of the distance is used
  CHECK(rbf(-3.0, 1.5) == rbf(3.0, 1.5));
}

TEST_CASE("scalar radial basis, squared form") {
  CHECK(rbf(1.0, 1.0, true) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(rbf(2.0, 2.0, true) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(rbf(2.0, 1.0, true) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(rbf(0.0, 1.0, true) == 1.0);
  // even in the distance
  CHECK(rbf(-2.0, 1.0, true) == rbf(2.0, 1.0, true));
}

TEST_CASE("vector radial basis uses the euclidean norm") {
  Eigen::VectorXd x(2), y(2);
  x << 0.0, 0.0;
  y << 3.0, 4.0;
  CHECK(rbf(x, y, 1.0) == doctest::Approx(rbf(5.0, 1.0)).epsilon(1e-12));
  CHECK(rbf(x, y, 2.0, true) == doctest::Approx(rbf(5.0, 2.0, true)).epsilon(1e-12));
  Eigen::VectorXd z(3);
  z << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(rbf(x, z, 1.0), ValidationError);
}

TEST_CASE("kernel configuration validation") {
  KernelConfig good;
  CHECK_NOTHROW(good.validate());

  KernelConfig c = good;
  c.spatial_lengthscale = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.temporal_lengthscale = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.signal_variance = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.noise_variance = -1e-9;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.noise_variance = 0.0;
  CHECK_NOTHROW(c.validate());
  c = good;
  c.node_side_lengthscales = {1.0, 0.0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.edge_side_lengthscales = {-2.0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("edge kernel is a product over endpoints") {
  const GPInput a = make_input(0.0, 0.0, 1.0, 0.0, 0.0);
  CHECK(edge_kernel(a, a, 0.8) == 1.0);

  // hand-computed product: |u-u'| = 1 (lon) and |v-v'| = 2 (lat)
  const GPInput b = make_input(1.0, 0.0, 1.0, 2.0, 0.0);
  const double expected = rbf(1.0, 0.5) * rbf(2.0, 0.5);
  CHECK(edge_kernel(a, b, 0.5) == doctest::Approx(expected).epsilon(1e-12));

  // direction matters: reversing one segment drops the value below 1
  GPInput rev = a;
  std::swap(rev.u, rev.v);
  CHECK(edge_kernel(a, rev, 1.0) < 1.0);
  CHECK(edge_kernel(a, rev, 1.0) ==
        doctest::Approx(rbf(1.0, 1.0) * rbf(1.0, 1.0)).epsilon(1e-12));

  // sharing the head endpoint leaves only the tail factor
  GPInput c = a;
  c.u = {0.0, 3.0};
  CHECK(edge_kernel(a, c, 1.0) == doctest::Approx(rbf(3.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("spacetime kernel at identical inputs equals the signal variance") {
  const GPInput a = make_input(0.3, -0.2, 0.9, 0.4, 0.25);
  KernelConfig cfg;
  cfg.signal_variance = 1.0;
  CHECK(spacetime_kernel(a, a, cfg) == doctest::Approx(1.0).epsilon(1e-12));
  cfg.signal_variance = 6.5;
  CHECK(spacetime_kernel(a, a, cfg) == doctest::Approx(6.5).epsilon(1e-12));
}

TEST_CASE("spacetime kernel separates into spatial and temporal factors") {
  const GPInput a = make_input(0.0, 0.0, 1.0, 0.0, 0.1);
  const GPInput b = make_input(0.0, 2.0, 1.0, 1.0, 0.4);
  KernelConfig cfg;
  cfg.spatial_lengthscale = 1.3;
  cfg.temporal_lengthscale = 0.7;
  cfg.signal_variance = 2.0;
  const double expected =
      2.0 * rbf(2.0, 1.3) * rbf(1.0, 1.3) * rbf(0.3, 0.7);
  CHECK(spacetime_kernel(a, b, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("side information adds terms not scaled by the signal variance") {
  GPInput a = make_input(0.0, 0.0, 1.0, 0.0, 0.0);
  GPInput b = make_input(0.5, 0.0, 1.5, 0.0, 0.2);
  const SideInfo same = make_side({0.4, -1.0}, {0.4, -1.0}, {2.5}, {1.0, 0.0, 0.0});
  a.side = same;
  b.side = same;

  KernelConfig with_side;
  with_side.node_side_lengthscales = {1.0, 1.0};
  with_side.edge_side_lengthscales = {1.0};
  with_side.use_side_info = true;
  KernelConfig without = with_side;
  without.use_side_info = false;

  // identical side vectors add 2 node products + 1 edge numeric + onehot dot = 4
  const double add1 = spacetime_kernel(a, b, with_side) - spacetime_kernel(a, b, without);
  CHECK(add1 == doctest::Approx(4.0).epsilon(1e-12));

  with_side.signal_variance = 9.0;
  without.signal_variance = 9.0;
  const double add9 = spacetime_kernel(a, b, with_side) - spacetime_kernel(a, b, without);
  CHECK(add9 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("one-hot blocks contribute their dot product") {
  GPInput a = make_input(0.0, 0.0, 1.0, 0.0, 0.0);
  GPInput b = a;
  a.side = make_side({}, {}, {}, {1.0, 0.0, 0.0});
  b.side = make_side({}, {}, {}, {0.0, 1.0, 0.0});

  KernelConfig cfg;
  cfg.use_side_info = true;
  // identical space-time parts: sigma_f^2 = 1, so kernel = 1 + onehot dot
  CHECK(spacetime_kernel(a, a, cfg) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(spacetime_kernel(a, b, cfg) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("side information errors") {
  GPInput a = make_input(0.0, 0.0, 1.0, 0.0, 0.0);
  GPInput b = a;
  KernelConfig cfg;
  cfg.use_side_info = true;
  cfg.node_side_lengthscales = {1.0};

  // absent side info
  CHECK_THROWS_AS(spacetime_kernel(a, b, cfg), ValidationError);

  // wrong node feature count
  a.side = make_side({1.0, 2.0}, {1.0, 2.0}, {}, {});
  b.side = a.side;
  CHECK_THROWS_AS(spacetime_kernel(a, b, cfg), ValidationError);

  // mismatched one-hot widths
  a.side = make_side({1.0}, {1.0}, {}, {1.0, 0.0});
  b.side = make_side({1.0}, {1.0}, {}, {1.0, 0.0, 0.0});
  CHECK_THROWS_AS(spacetime_kernel(a, b, cfg), ValidationError);
}

TEST_CASE("one-element kernel matrix and gram") {
  KernelConfig cfg;
  cfg.signal_variance = 3.25;
  cfg.noise_variance = 0.5;
  const std::vector<GPInput> x = {make_input(0.1, 0.2, 0.3, 0.4, 0.5)};
  const Eigen::MatrixXd k = kernel_matrix(x, cfg);
  REQUIRE(k.rows() == 1);
  REQUIRE(k.cols() == 1);
  CHECK(k(0, 0) == doctest::Approx(3.25).epsilon(1e-12));
  const Eigen::MatrixXd g = gram(x, cfg);
  CHECK(g(0, 0) == doctest::Approx(3.75).epsilon(1e-12));
}

TEST_CASE("duplicate inputs give identical rows before jitter") {
  const GPInput a = make_input(0.0, 0.0, 1.0, 1.0, 0.3);
  const std::vector<GPInput> x = {a, a, make_input(2.0, 0.0, 3.0, 1.0, 0.7)};
  KernelConfig cfg;
  const Eigen::MatrixXd k = kernel_matrix(x, cfg);
  CHECK((k.row(0) - k.row(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel matrices on random inputs are near positive semidefinite") {
  Rng g(20260819ULL);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<GPInput> x;
    for (int i = 0; i < 20; ++i) {
      GPInput q = make_input(uniform_double(g, 4.0), uniform_double(g, 4.0),
                             uniform_double(g, 4.0), uniform_double(g, 4.0),
                             uniform_double(g));
      q.side = make_side({uniform_double(g)}, {uniform_double(g)}, {uniform_double(g, 3.0)},
                         {1.0, 0.0});
      x.push_back(q);
    }
    KernelConfig cfg;
    cfg.spatial_lengthscale = 0.9;
    cfg.temporal_lengthscale = 0.4;
    cfg.signal_variance = 2.0;
    cfg.node_side_lengthscales = {1.0};
    cfg.edge_side_lengthscales = {2.0};
    cfg.use_side_info = true;
    cfg.squared_form = (rep % 2 == 1);
    const Eigen::MatrixXd k = kernel_matrix(x, cfg);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}
