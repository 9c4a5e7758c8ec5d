#include "trafficgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kGoldenRatio = 0.6180339887498948482;

void validate_training_data(const std::vector<GPInput>& x, const Eigen::VectorXd& y, bool use_side,
                            Eigen::Index* node_dims, Eigen::Index* edge_dims) {
  if (x.empty()) throw ValidationError("training set is empty");
  if (static_cast<Eigen::Index>(x.size()) != y.size()) {
    throw ValidationError("input and target counts differ");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const GPInput& in = x[i];
    if (!std::isfinite(in.u.lon) || !std::isfinite(in.u.lat) || !std::isfinite(in.v.lon) ||
        !std::isfinite(in.v.lat) || !std::isfinite(in.t)) {
      throw ValidationError("inputs must be finite");
    }
    if (!std::isfinite(y[static_cast<Eigen::Index>(i)])) {
      throw ValidationError("targets must be finite");
    }
  }
  *node_dims = 0;
  *edge_dims = 0;
  if (!use_side) return;
  if (!x[0].side) throw ValidationError("side information requested but absent on an input");
  *node_dims = x[0].side->node_u.size();
  *edge_dims = x[0].side->edge_numeric.size();
  const Eigen::Index onehot_dims = x[0].side->edge_onehot.size();
  for (const GPInput& in : x) {
    if (!in.side) throw ValidationError("side information requested but absent on an input");
    if (in.side->node_u.size() != *node_dims || in.side->node_v.size() != *node_dims ||
        in.side->edge_numeric.size() != *edge_dims || in.side->edge_onehot.size() != onehot_dims) {
      throw ValidationError("side information dimensions differ between inputs");
    }
  }
}

// Attempts a Cholesky factorization, escalating diagonal jitter
// 0 -> 1e-8 -> 1e-7 -> ... -> 1e-2 until one succeeds.
bool jittered_llt(const Eigen::MatrixXd& g, Eigen::LLT<Eigen::MatrixXd>* out, double* jitter_used) {
  if (!g.allFinite()) return false;
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd gj = g;
    if (jitter > 0.0) gj.diagonal().array() += jitter;
    out->compute(gj);
    if (out->info() == Eigen::Success) {
      *jitter_used = jitter;
      return true;
    }
    if (jitter == 0.0) {
      jitter = 1e-8;
    } else if (jitter >= 0.99e-2) {
      return false;
    } else {
      jitter *= 10.0;
    }
  }
}

double lml_value(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& dy) {
  const Eigen::VectorXd alpha = llt.solve(dy);
  const double n = static_cast<double>(dy.size());
  return -0.5 * dy.dot(alpha) - llt.matrixLLT().diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * kPi);
}

// Per-pair exponent numerators for each kernel block, computed once per fit so
// a likelihood evaluation is one vectorized exponential plus a Cholesky. Each
// matrix holds raw distances for the plain form and squared distances for the
// squared form.
struct PairwiseCache {
  bool squared_form = false;
  bool use_side = false;
  Eigen::MatrixXd space;                    // endpoint-distance sums
  Eigen::MatrixXd time;                     // time-of-day offsets
  std::vector<Eigen::MatrixXd> node_feats;  // one per node feature
  std::vector<Eigen::MatrixXd> edge_feats;  // one per numeric edge feature
  Eigen::MatrixXd onehot;                   // categorical agreement dot products
};

PairwiseCache build_cache(const std::vector<GPInput>& x, bool use_side, bool squared) {
  PairwiseCache c;
  c.squared_form = squared;
  c.use_side = use_side;
  const auto n = static_cast<Eigen::Index>(x.size());
  c.space.resize(n, n);
  c.time.resize(n, n);
  auto combine = [squared](double a, double b) {
    return squared ? a * a + b * b : std::abs(a) + std::abs(b);
  };
  auto single = [squared](double d) { return squared ? d * d : std::abs(d); };
  for (Eigen::Index i = 0; i < n; ++i) {
    const GPInput& a = x[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i; j < n; ++j) {
      const GPInput& b = x[static_cast<std::size_t>(j)];
      const double du = std::hypot(a.u.lon - b.u.lon, a.u.lat - b.u.lat);
      const double dv = std::hypot(a.v.lon - b.v.lon, a.v.lat - b.v.lat);
      c.space(i, j) = combine(du, dv);
      c.space(j, i) = c.space(i, j);
      c.time(i, j) = single(a.t - b.t);
      c.time(j, i) = c.time(i, j);
    }
  }
  if (!use_side) return c;
  const Eigen::Index nd = x[0].side->node_u.size();
  const Eigen::Index ed = x[0].side->edge_numeric.size();
  c.node_feats.resize(static_cast<std::size_t>(nd));
  c.edge_feats.resize(static_cast<std::size_t>(ed));
  for (Eigen::Index f = 0; f < nd; ++f) {
    Eigen::MatrixXd& m = c.node_feats[static_cast<std::size_t>(f)];
    m.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const SideInfo& a = *x[static_cast<std::size_t>(i)].side;
      for (Eigen::Index j = i; j < n; ++j) {
        const SideInfo& b = *x[static_cast<std::size_t>(j)].side;
        m(i, j) = combine(a.node_u(f) - b.node_u(f), a.node_v(f) - b.node_v(f));
        m(j, i) = m(i, j);
      }
    }
  }
  for (Eigen::Index e = 0; e < ed; ++e) {
    Eigen::MatrixXd& m = c.edge_feats[static_cast<std::size_t>(e)];
    m.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const SideInfo& a = *x[static_cast<std::size_t>(i)].side;
      for (Eigen::Index j = i; j < n; ++j) {
        const SideInfo& b = *x[static_cast<std::size_t>(j)].side;
        m(i, j) = single(a.edge_numeric(e) - b.edge_numeric(e));
        m(j, i) = m(i, j);
      }
    }
  }
  c.onehot.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SideInfo& a = *x[static_cast<std::size_t>(i)].side;
    for (Eigen::Index j = i; j < n; ++j) {
      const SideInfo& b = *x[static_cast<std::size_t>(j)].side;
      c.onehot(i, j) = a.edge_onehot.dot(b.edge_onehot);
      c.onehot(j, i) = c.onehot(i, j);
    }
  }
  return c;
}

// Hyperparameter vector layout: [spatial scale, temporal scale, signal
// variance, noise variance, node-feature scales..., edge-feature scales...].
Eigen::MatrixXd gram_from_cache(const PairwiseCache& c, const std::vector<double>& th) {
  auto decay = [&c](double l) { return c.squared_form ? 1.0 / (2.0 * l * l) : 1.0 / (l * l); };
  Eigen::MatrixXd g =
      (-(c.space * decay(th[0]) + c.time * decay(th[1]))).array().exp().matrix() * th[2];
  const std::size_t nd = c.node_feats.size();
  const std::size_t ed = c.edge_feats.size();
  for (std::size_t f = 0; f < nd; ++f) {
    g.array() += (c.node_feats[f].array() * -decay(th[4 + f])).exp();
  }
  for (std::size_t e = 0; e < ed; ++e) {
    g.array() += (c.edge_feats[e].array() * -decay(th[4 + nd + e])).exp();
  }
  if (c.use_side) g += c.onehot;
  g.diagonal().array() += th[3];
  return g;
}

KernelConfig config_from(const std::vector<double>& th, Eigen::Index nd, Eigen::Index ed,
                         const FitOptions& opts) {
  KernelConfig cfg;
  cfg.spatial_lengthscale = th[0];
  cfg.temporal_lengthscale = th[1];
  cfg.signal_variance = th[2];
  cfg.noise_variance = th[3];
  cfg.use_side_info = opts.use_side_info;
  cfg.squared_form = opts.squared_form;
  for (Eigen::Index f = 0; f < nd; ++f) {
    cfg.node_side_lengthscales.push_back(th[static_cast<std::size_t>(4 + f)]);
  }
  for (Eigen::Index e = 0; e < ed; ++e) {
    cfg.edge_side_lengthscales.push_back(th[static_cast<std::size_t>(4 + nd + e)]);
  }
  return cfg;
}

// Lengthscale heuristic: the median pairwise distance within the block. The
// cache holds squared distances under the squared form, hence the sqrt there.
double median_distance(const Eigen::MatrixXd& m, bool squared_form) {
  const Eigen::Index n = m.rows();
  if (n < 2) return 1.0;
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) vals.push_back(m(i, j));
  }
  auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
  std::nth_element(vals.begin(), mid, vals.end());
  if (!(*mid > 0.0)) return 1.0;
  return squared_form ? std::sqrt(*mid) : *mid;
}

}  // namespace

GPModel GPModel::train(std::vector<GPInput> inputs, const Eigen::VectorXd& targets,
                       KernelConfig cfg) {
  cfg.validate();
  Eigen::Index nd = 0;
  Eigen::Index ed = 0;
  validate_training_data(inputs, targets, cfg.use_side_info, &nd, &ed);
  if (cfg.use_side_info &&
      (static_cast<Eigen::Index>(cfg.node_side_lengthscales.size()) != nd ||
       static_cast<Eigen::Index>(cfg.edge_side_lengthscales.size()) != ed)) {
    throw ValidationError("side lengthscale counts do not match feature dimensions");
  }
  GPModel m;
  m.inputs_ = std::move(inputs);
  m.cfg_ = std::move(cfg);
  m.mu0_ = targets.mean();
  m.delta_y_ = targets.array() - m.mu0_;
  const Eigen::MatrixXd g = gram(m.inputs_, m.cfg_);
  if (!jittered_llt(g, &m.llt_, &m.jitter_)) {
    throw NumericalError("covariance factorization failed at maximum jitter");
  }
  m.alpha_ = m.llt_.solve(m.delta_y_);
  const double n = static_cast<double>(m.delta_y_.size());
  m.lml_ = -0.5 * m.delta_y_.dot(m.alpha_) -
           m.llt_.matrixLLT().diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * kPi);
  return m;
}

GPModel GPModel::fit(std::vector<GPInput> inputs, const Eigen::VectorXd& targets,
                     const FitOptions& opts) {
  if (opts.max_evals < 1 || opts.random_starts < 0) {
    throw ValidationError("search budget and restart count must be positive");
  }
  if (!(opts.scale_lower > 0.0) || !(opts.scale_upper > opts.scale_lower) ||
      !(opts.noise_lower > 0.0)) {
    throw ValidationError("search bounds must be positive and ordered");
  }
  Eigen::Index nd = 0;
  Eigen::Index ed = 0;
  validate_training_data(inputs, targets, opts.use_side_info, &nd, &ed);
  if (inputs.size() < 2) throw ValidationError("hyperparameter search needs at least 2 points");

  const double mu0 = targets.mean();
  const Eigen::VectorXd dy = targets.array() - mu0;
  const double var_y = dy.squaredNorm() / static_cast<double>(dy.size());

  const PairwiseCache cache = build_cache(inputs, opts.use_side_info, opts.squared_form);

  const int dim = 4 + static_cast<int>(nd) + static_cast<int>(ed);
  std::vector<double> lower(static_cast<std::size_t>(dim), opts.scale_lower);
  std::vector<double> upper(static_cast<std::size_t>(dim), opts.scale_upper);
  lower[3] = opts.noise_lower;
  upper[3] = std::max(var_y, 2.0 * opts.noise_lower);

  auto clamp_to = [](double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); };

  const bool sq = opts.squared_form;
  std::vector<double> theta0(static_cast<std::size_t>(dim));
  theta0[0] = clamp_to(median_distance(cache.space, sq), lower[0], upper[0]);
  theta0[1] = clamp_to(median_distance(cache.time, sq), lower[1], upper[1]);
  theta0[2] = clamp_to(var_y, lower[2], upper[2]);
  theta0[3] = clamp_to(0.1 * var_y, lower[3], upper[3]);
  for (Eigen::Index f = 0; f < nd; ++f) {
    const std::size_t c = static_cast<std::size_t>(4 + f);
    theta0[c] = clamp_to(median_distance(cache.node_feats[static_cast<std::size_t>(f)], sq),
                         lower[c], upper[c]);
  }
  for (Eigen::Index e = 0; e < ed; ++e) {
    const std::size_t c = static_cast<std::size_t>(4 + nd + e);
    theta0[c] = clamp_to(median_distance(cache.edge_feats[static_cast<std::size_t>(e)], sq),
                         lower[c], upper[c]);
  }

  std::vector<std::vector<double>> starts;
  starts.push_back(theta0);
  Rng rng(mix_seed({opts.seed, 0x6870736561726368ULL}));
  for (int s = 0; s < opts.random_starts; ++s) {
    std::vector<double> th(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
      const std::size_t ci = static_cast<std::size_t>(c);
      const double lo = std::log(lower[ci]);
      const double hi = std::log(upper[ci]);
      th[ci] = std::exp(lo + (hi - lo) * uniform_double(rng));
    }
    starts.push_back(std::move(th));
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  int evals_used = 0;
  auto evaluate = [&](const std::vector<double>& th) -> std::optional<double> {
    if (evals_used >= opts.max_evals) return std::nullopt;
    ++evals_used;
    const Eigen::MatrixXd g = gram_from_cache(cache, th);
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    if (!jittered_llt(g, &llt, &jitter)) return neg_inf;
    return lml_value(llt, dy);
  };

  std::vector<double> theta_best;
  double lml_best = neg_inf;
  for (const auto& th : starts) {
    const auto v = evaluate(th);
    if (!v) break;
    if (theta_best.empty() || *v > lml_best) {
      lml_best = *v;
      theta_best = th;
    }
  }
  if (theta_best.empty() || lml_best == neg_inf) {
    throw NumericalError("every hyperparameter start failed to factorize");
  }

  // Golden-section line search on one coordinate in log space; any improvement
  // over the incumbent is accepted immediately.
  auto coordinate_search = [&](int c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    double lo = std::log(lower[ci]);
    double hi = std::log(upper[ci]);
    auto probe = [&](double log_v) -> std::optional<double> {
      std::vector<double> th = theta_best;
      th[ci] = std::exp(log_v);
      const auto v = evaluate(th);
      if (v && *v > lml_best) {
        lml_best = *v;
        theta_best = std::move(th);
      }
      return v;
    };
    double x1 = hi - kGoldenRatio * (hi - lo);
    double x2 = lo + kGoldenRatio * (hi - lo);
    auto f1 = probe(x1);
    if (!f1) return;
    auto f2 = probe(x2);
    if (!f2) return;
    for (int it = 0; it < 10 && hi - lo > 1e-3; ++it) {
      if (*f1 >= *f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kGoldenRatio * (hi - lo);
        f1 = probe(x1);
        if (!f1) return;
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kGoldenRatio * (hi - lo);
        f2 = probe(x2);
        if (!f2) return;
      }
    }
  };

  while (evals_used < opts.max_evals) {
    const double before = lml_best;
    for (int c = 0; c < dim && evals_used < opts.max_evals; ++c) coordinate_search(c);
    if (!(lml_best > before)) break;
  }

  return train(std::move(inputs), targets, config_from(theta_best, nd, ed, opts));
}

Prediction GPModel::predict(const GPInput& query) const {
  if (cfg_.use_side_info && !query.side) {
    throw ValidationError("query lacks side information required by the kernel");
  }
  const auto n = static_cast<Eigen::Index>(inputs_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = spacetime_kernel(query, inputs_[static_cast<std::size_t>(i)], cfg_);
  }
  Prediction p;
  p.raw_mean = mu0_ + k.dot(alpha_);
  p.mean = std::max(0.0, p.raw_mean);
  const double kqq = spacetime_kernel(query, query, cfg_);
  p.variance = std::max(0.0, kqq - k.dot(llt_.solve(k)));
  return p;
}

double log_marginal_likelihood(const std::vector<GPInput>& inputs, const Eigen::VectorXd& targets,
                               const KernelConfig& cfg) {
  cfg.validate();
  Eigen::Index nd = 0;
  Eigen::Index ed = 0;
  validate_training_data(inputs, targets, cfg.use_side_info, &nd, &ed);
  const Eigen::VectorXd dy = targets.array() - targets.mean();
  const Eigen::MatrixXd g = gram(inputs, cfg);
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!jittered_llt(g, &llt, &jitter)) {
    throw NumericalError("covariance factorization failed at maximum jitter");
  }
  return lml_value(llt, dy);
}

}  // namespace trafficgp
