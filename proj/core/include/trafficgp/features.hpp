#pragma once

#include <map>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"
#include "trafficgp/road_network.hpp"

namespace trafficgp {

// Per-segment side information split the way the covariance consumes it:
// one value per node-wise feature at each endpoint, numeric edge features,
// and concatenated one-hot blocks for categorical edge features.
struct SideInfo {
  Eigen::VectorXd node_u;
  Eigen::VectorXd node_v;
  Eigen::VectorXd edge_numeric;
  Eigen::VectorXd edge_onehot;
};

struct CategoricalBlock {
  std::string name;
  std::vector<std::string> categories;  // sorted; one column per category
};

// Count of shortest directed paths passing through each segment, summed over
// ordered node pairs as sigma_st(e)/sigma_st (hop-count shortest paths;
// unreachable pairs contribute nothing).
std::map<std::string, double> compute_edge_betweenness(const RoadNetwork& network);

// Numeric and categorical descriptors for every segment, plus the
// standardization statistics used by nearest-neighbor lookups.
//
// Raw row layout: [node features at u | node features at v | numeric edge
// features | one-hot blocks]. Node-wise: degree (in+out) of the endpoint.
// Numeric edge-wise: speed limit, lanes, length, betweenness. Categorical:
// road type, direction, one-way flag.
class FeatureTable {
 public:
  static FeatureTable derive(const RoadNetwork& network);

  // Same layout, statistics recomputed over `ids` only.
  FeatureTable restricted_to(const std::vector<std::string>& ids) const;

  const std::vector<std::string>& segments() const { return segments_; }
  bool has(const std::string& id) const { return index_.count(id) != 0; }

  std::size_t n_node_features() const { return node_feature_names_.size(); }
  std::size_t n_edge_numeric() const { return edge_numeric_names_.size(); }
  std::size_t numeric_dim() const { return 2 * n_node_features() + n_edge_numeric(); }
  std::size_t onehot_dim() const;

  const std::vector<std::string>& node_feature_names() const { return node_feature_names_; }
  const std::vector<std::string>& edge_numeric_names() const { return edge_numeric_names_; }
  const std::vector<CategoricalBlock>& categorical_blocks() const { return blocks_; }

  Eigen::VectorXd raw(const std::string& id) const;
  SideInfo side_info(const std::string& id) const;

  // Z-scored numeric features (columns with zero variance dropped) followed by
  // the raw one-hot block. Statistics are this table's own.
  Eigen::VectorXd zscored(const std::string& id) const;
  Eigen::VectorXd zscored_from_raw(const Eigen::VectorXd& raw_row) const;

  const Eigen::VectorXd& numeric_mean() const { return mean_; }
  const Eigen::VectorXd& numeric_std() const { return std_; }

 private:
  std::vector<std::string> segments_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> node_feature_names_;
  std::vector<std::string> edge_numeric_names_;
  std::vector<CategoricalBlock> blocks_;
  Eigen::MatrixXd raw_;        // one row per segment
  Eigen::VectorXd mean_, std_; // over the numeric prefix

  void recompute_stats();
};

}  // namespace trafficgp
