#include "trafficgp/localization.hpp"

#include <algorithm>
#include <cmath>

#include "trafficgp/csv.hpp"
#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

int argmax_label(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;  // strict: ties keep the lowest index
  }
  return best + 1;
}

}  // namespace

std::pair<SpatialClustering, TemporalClustering> normalize_membership(
    const Factorization& f, const std::vector<std::string>& segment_index) {
  const int k = static_cast<int>(f.w.cols());
  if (segment_index.size() != static_cast<std::size_t>(f.w.rows())) {
    throw ValidationError("segment index length does not match W rows");
  }
  SpatialClustering sc;
  sc.k = k;
  sc.membership = f.w;
  for (Eigen::Index i = 0; i < sc.membership.rows(); ++i) {
    const double s = sc.membership.row(i).sum();
    if (s > 0.0) {
      sc.membership.row(i) /= s;
    } else {
      sc.membership.row(i).setConstant(1.0 / k);
    }
    const int label = argmax_label(sc.membership.row(i).transpose());
    sc.labels.push_back(label);
    sc.label_of[segment_index[static_cast<std::size_t>(i)]] = label;
  }

  TemporalClustering tc;
  tc.k = k;
  tc.membership = f.h;
  for (Eigen::Index j = 0; j < tc.membership.cols(); ++j) {
    const double s = tc.membership.col(j).sum();
    if (s > 0.0) {
      tc.membership.col(j) /= s;
    } else {
      tc.membership.col(j).setConstant(1.0 / k);
    }
    tc.labels.push_back(argmax_label(tc.membership.col(j)));
  }
  return {std::move(sc), std::move(tc)};
}

int temporal_lookup(long t, const TemporalClustering& tc) {
  const long m = static_cast<long>(tc.labels.size());
  if (m == 0) throw ValidationError("temporal clustering is empty");
  const long j = ((t % m) + m) % m;
  return tc.labels[static_cast<std::size_t>(j)];
}

NearestNeighborIndex::NearestNeighborIndex(const FeatureTable& train_table,
                                           const SpatialClustering& sc)
    : table_(train_table) {
  const auto& ids = table_.segments();
  if (ids.empty()) throw ValidationError("nearest-neighbor index needs at least one segment");
  labels_.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = sc.label_of.find(id);
    if (it == sc.label_of.end()) {
      throw ValidationError("segment '" + id + "' has no spatial cluster label");
    }
    labels_.push_back(it->second);
  }
  const Eigen::VectorXd first = table_.zscored(ids[0]);
  z_.resize(static_cast<Eigen::Index>(ids.size()), first.size());
  z_.row(0) = first;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    z_.row(static_cast<Eigen::Index>(i)) = table_.zscored(ids[i]);
  }
}

std::size_t NearestNeighborIndex::nearest_row(const Eigen::VectorXd& query_raw) const {
  const Eigen::VectorXd q = table_.zscored_from_raw(query_raw);
  std::size_t best = 0;
  double best_d = (z_.row(0).transpose() - q).squaredNorm();
  for (Eigen::Index i = 1; i < z_.rows(); ++i) {
    const double d = (z_.row(i).transpose() - q).squaredNorm();
    if (d < best_d) {  // strict: ties keep the smallest id (rows are sorted)
      best_d = d;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

int NearestNeighborIndex::map(const Eigen::VectorXd& query_raw) const {
  return labels_[nearest_row(query_raw)];
}

const std::string& NearestNeighborIndex::nearest_id(const Eigen::VectorXd& query_raw) const {
  return table_.segments()[nearest_row(query_raw)];
}

int nearest_neighbor_map(const Eigen::VectorXd& query_raw, const FeatureTable& train_table,
                         const SpatialClustering& sc) {
  return NearestNeighborIndex(train_table, sc).map(query_raw);
}

std::vector<std::vector<Triple>> localize(const SpeedMatrix& dt, const SpatialClustering& sc,
                                          const TemporalClustering& tc) {
  if (sc.k != tc.k) throw ValidationError("spatial and temporal cluster counts differ");
  if (sc.labels.size() != static_cast<std::size_t>(dt.rows()) ||
      tc.labels.size() != static_cast<std::size_t>(dt.cols())) {
    throw ValidationError("clustering does not match matrix shape");
  }
  const int k = sc.k;
  std::vector<std::vector<Triple>> subsets(static_cast<std::size_t>(k) * k);
  for (Eigen::Index i = 0; i < dt.rows(); ++i) {
    const int li = sc.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < dt.cols(); ++j) {
      if (!dt.mask(i, j)) continue;
      const int lj = tc.labels[static_cast<std::size_t>(j)];
      subsets[static_cast<std::size_t>((li - 1) * k + (lj - 1))].push_back(
          Triple{static_cast<int>(i), static_cast<int>(j), dt.values(i, j)});
    }
  }
  return subsets;
}

double explained_variance(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.size() != yhat.size()) throw ValidationError("length mismatch in explained variance");
  if (y.size() < 2) throw ValidationError("explained variance needs at least two values");
  const auto n = static_cast<double>(y.size());
  double sy = 0, syy = 0, se = 0, see = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sy += y[i];
    syy += y[i] * y[i];
    const double e = y[i] - yhat[i];
    se += e;
    see += e * e;
  }
  const double var_y = syy / n - (sy / n) * (sy / n);
  if (var_y <= 0.0) throw DataError("explained variance undefined: targets have zero variance");
  const double var_e = see / n - (se / n) * (se / n);
  return 1.0 - var_e / var_y;
}

KSelectionReport select_k(const Eigen::MatrixXd& d, const BoolGrid& mask, int k_min, int k_max,
                          int folds, std::uint64_t seed, const NMFConfig& base) {
  if (k_min < 1 || k_min > k_max) throw ValidationError("invalid K range");
  if (k_max > std::min(d.rows(), d.cols())) {
    throw ValidationError("K range exceeds min(N, M)");
  }
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");

  std::vector<std::pair<int, int>> observed;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (mask(i, j)) observed.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  if (observed.size() < static_cast<std::size_t>(folds)) {
    throw DataError("fewer observed entries than folds");
  }
  Rng rng(mix_seed({seed, 0x666f6c6473ULL}));  // "folds"
  shuffle_inplace(observed, rng);

  KSelectionReport report;
  for (int k = k_min; k <= k_max; ++k) report.ks.push_back(k);
  report.fold_r2.setZero(static_cast<Eigen::Index>(report.ks.size()), folds);

  for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
    const int k = report.ks[ki];
    for (int f = 0; f < folds; ++f) {
      BoolGrid cv_mask = mask;
      std::vector<std::pair<int, int>> held;
      for (std::size_t e = f; e < observed.size(); e += static_cast<std::size_t>(folds)) {
        cv_mask(observed[e].first, observed[e].second) = false;
        held.push_back(observed[e]);
      }
      if (held.empty()) throw DataError("cross-validation fold has no entries");
      NMFConfig cfg = base;
      cfg.k = k;
      cfg.seed = mix_seed({base.seed, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(f)});
      const Factorization fact = factorize(d, cv_mask, cfg);
      std::vector<double> y, yhat;
      y.reserve(held.size());
      yhat.reserve(held.size());
      for (const auto& [i, j] : held) {
        y.push_back(d(i, j));
        yhat.push_back(fact.w.row(i).dot(fact.h.col(j)));
      }
      report.fold_r2(static_cast<Eigen::Index>(ki), f) = explained_variance(y, yhat);
    }
  }

  report.mean_r2.resize(report.ks.size());
  report.std_r2.resize(report.ks.size());
  int best = 0;
  for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
    const auto row = report.fold_r2.row(static_cast<Eigen::Index>(ki));
    const double mean = row.mean();
    report.mean_r2[ki] = mean;
    report.std_r2[ki] = std::sqrt((row.array() - mean).square().sum() / folds);
    if (report.mean_r2[ki] > report.mean_r2[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(ki);  // strict: ties keep the smaller K
    }
  }
  report.chosen_k = report.ks[static_cast<std::size_t>(best)];
  return report;
}

void write_k_selection_csv(const std::string& summary_path, const std::string& folds_path,
                           const KSelectionReport& report) {
  CsvWriter folds(folds_path, {"K", "fold", "r2"});
  for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
    for (Eigen::Index f = 0; f < report.fold_r2.cols(); ++f) {
      folds.row({std::to_string(report.ks[ki]), std::to_string(f),
                 format_double(report.fold_r2(static_cast<Eigen::Index>(ki), f))});
    }
  }
  folds.close();
  CsvWriter summary(summary_path, {"K", "mean_r2", "std_r2", "chosen"});
  for (std::size_t ki = 0; ki < report.ks.size(); ++ki) {
    summary.row({std::to_string(report.ks[ki]), format_double(report.mean_r2[ki]),
                 format_double(report.std_r2[ki]),
                 report.ks[ki] == report.chosen_k ? "1" : "0"});
  }
  summary.close();
}

int GridClustering::cell_for(const LonLat& p) const {
  if (degenerate) return 1;
  auto axis_cell = [this](double v, double lo, double hi) {
    if (hi <= lo) return k - 1;  // collapsed axis: everything sits on the max boundary
    int c = static_cast<int>(std::floor((v - lo) / (hi - lo) * k));
    if (c < 0) c = 0;
    if (c >= k) c = k - 1;
    return c;
  };
  const int col = axis_cell(p.lon, min_lon, max_lon);
  const int row = axis_cell(p.lat, min_lat, max_lat);
  return row * k + col + 1;
}

GridClustering grid_partition(const RoadNetwork& network,
                              const std::vector<std::string>& covered, int k) {
  if (k < 1) throw ValidationError("grid needs K >= 1");
  if (covered.empty()) throw ValidationError("grid partition needs covered segments");
  GridClustering g;
  g.k = k;
  bool first = true;
  for (const auto& id : covered) {
    const LonLat p = network.midpoint(id);
    if (first) {
      g.min_lon = g.max_lon = p.lon;
      g.min_lat = g.max_lat = p.lat;
      first = false;
    } else {
      g.min_lon = std::min(g.min_lon, p.lon);
      g.max_lon = std::max(g.max_lon, p.lon);
      g.min_lat = std::min(g.min_lat, p.lat);
      g.max_lat = std::max(g.max_lat, p.lat);
    }
  }
  g.degenerate = (g.min_lon == g.max_lon && g.min_lat == g.max_lat);
  for (const auto& id : covered) {
    g.cell_of[id] = g.cell_for(network.midpoint(id));
  }
  return g;
}

}  // namespace trafficgp
