#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trafficgp/features.hpp"
#include "trafficgp/nmf.hpp"
#include "trafficgp/road_network.hpp"
#include "trafficgp/speed_data.hpp"

namespace trafficgp {

// Row-stochastic spatial memberships with hard labels (argmax, ties to the
// lowest cluster index; labels are 1-based).
struct SpatialClustering {
  Eigen::MatrixXd membership;           // N x K, rows sum to 1
  std::vector<int> labels;              // per matrix row
  std::map<std::string, int> label_of;  // segment id -> label
  int k = 1;
};

struct TemporalClustering {
  Eigen::MatrixXd membership;  // K x M, columns sum to 1
  std::vector<int> labels;     // per interval of day
  int k = 1;
};

// Normalizes W rows / H columns to unit sum (all-zero slices fall back to the
// uniform vector) and takes hard labels.
std::pair<SpatialClustering, TemporalClustering> normalize_membership(
    const Factorization& f, const std::vector<std::string>& segment_index);

// Cluster of the interval `t mod M` (time-of-day periodicity).
int temporal_lookup(long t, const TemporalClustering& tc);

// Maps a query's raw feature row to the spatial cluster of its nearest
// training segment. Distances are Euclidean over the training table's
// z-scored numeric features (zero-variance columns dropped) plus raw one-hot
// blocks; ties resolve to the lexicographically smallest segment id.
class NearestNeighborIndex {
 public:
  NearestNeighborIndex(const FeatureTable& train_table, const SpatialClustering& sc);
  int map(const Eigen::VectorXd& query_raw) const;
  const std::string& nearest_id(const Eigen::VectorXd& query_raw) const;

 private:
  FeatureTable table_;
  Eigen::MatrixXd z_;
  std::vector<int> labels_;
  std::size_t nearest_row(const Eigen::VectorXd& query_raw) const;
};

int nearest_neighbor_map(const Eigen::VectorXd& query_raw, const FeatureTable& train_table,
                         const SpatialClustering& sc);

struct Triple {
  int row = 0;       // index into SpeedMatrix.segment_index
  int interval = 0;  // interval of day
  double speed = 0.0;
};

// Partitions the observed entries of `dt` into the K x K cluster-pair subsets,
// row-major within each subset. Subset for labels (i, j) sits at
// (i-1)*K + (j-1).
std::vector<std::vector<Triple>> localize(const SpeedMatrix& dt, const SpatialClustering& sc,
                                          const TemporalClustering& tc);

// 1 - Var[y - yhat] / Var[y] with population variances E[v^2] - (E[v])^2.
double explained_variance(const std::vector<double>& y, const std::vector<double>& yhat);

struct KSelectionReport {
  std::vector<int> ks;
  Eigen::MatrixXd fold_r2;  // one row per K, one column per fold
  std::vector<double> mean_r2;
  std::vector<double> std_r2;
  int chosen_k = 1;
};

// Cross-validated choice of cluster count: observed entries are dealt into
// `folds` disjoint folds; each fold is additionally masked, the rest
// factorized, and the held-out entries scored by explained variance against
// the reconstruction. Highest mean wins, ties to the smaller K.
KSelectionReport select_k(const Eigen::MatrixXd& d, const BoolGrid& mask, int k_min, int k_max,
                          int folds, std::uint64_t seed, const NMFConfig& base);

// Long format (K,fold,r2) and summary (K,mean_r2,std_r2,chosen).
void write_k_selection_csv(const std::string& summary_path, const std::string& folds_path,
                           const KSelectionReport& report);

// K x K uniform longitude/latitude cells over the bounding box of the covered
// segments' midpoints; cell labels are 1-based, row-major by latitude then
// longitude. Points on the max boundary belong to the last cell; queries
// outside the box clamp to the nearest cell. A fully degenerate box (all
// midpoints identical) collapses to a single cell and sets `degenerate`.
struct GridClustering {
  int k = 1;
  double min_lon = 0, max_lon = 0, min_lat = 0, max_lat = 0;
  bool degenerate = false;
  std::map<std::string, int> cell_of;  // covered segment -> cell label

  int cell_for(const LonLat& midpoint) const;
  int n_cells() const { return k * k; }
};

GridClustering grid_partition(const RoadNetwork& network,
                              const std::vector<std::string>& covered, int k);

}  // namespace trafficgp
