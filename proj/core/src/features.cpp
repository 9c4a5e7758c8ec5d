#include "trafficgp/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace trafficgp {

std::map<std::string, double> compute_edge_betweenness(const RoadNetwork& network) {
  // Brandes' accumulation adapted to edge scores on a directed multigraph:
  // one hop-count BFS per source, then dependencies pushed backwards along
  // shortest-path edges. Parallel edges count as distinct paths.
  std::vector<std::string> node_ids;
  std::map<std::string, int> nidx;
  for (const auto& [id, pos] : network.nodes()) {
    nidx.emplace(id, static_cast<int>(node_ids.size()));
    node_ids.push_back(id);
  }
  struct Arc {
    int head;
    int edge;
  };
  std::vector<std::string> edge_ids;
  std::vector<std::vector<Arc>> out(node_ids.size());
  std::vector<int> tail_of;
  for (const auto& [id, e] : network.edges()) {
    const int eidx = static_cast<int>(edge_ids.size());
    edge_ids.push_back(id);
    out[static_cast<std::size_t>(nidx.at(e.from))].push_back(Arc{nidx.at(e.to), eidx});
    tail_of.push_back(nidx.at(e.from));
  }

  const int n = static_cast<int>(node_ids.size());
  std::vector<double> score(edge_ids.size(), 0.0);
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::vector<double> sigma(static_cast<std::size_t>(n));
  std::vector<double> delta(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> pred_edges(static_cast<std::size_t>(n));
  std::vector<int> order;
  std::vector<int> queue;

  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : pred_edges) p.clear();
    order.clear();
    queue.clear();

    dist[static_cast<std::size_t>(s)] = 0;
    sigma[static_cast<std::size_t>(s)] = 1.0;
    queue.push_back(s);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int v = queue[qi];
      order.push_back(v);
      for (const Arc& a : out[static_cast<std::size_t>(v)]) {
        if (dist[static_cast<std::size_t>(a.head)] < 0) {
          dist[static_cast<std::size_t>(a.head)] = dist[static_cast<std::size_t>(v)] + 1;
          queue.push_back(a.head);
        }
        if (dist[static_cast<std::size_t>(a.head)] == dist[static_cast<std::size_t>(v)] + 1) {
          sigma[static_cast<std::size_t>(a.head)] += sigma[static_cast<std::size_t>(v)];
          pred_edges[static_cast<std::size_t>(a.head)].push_back(a.edge);
        }
      }
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (int eidx : pred_edges[static_cast<std::size_t>(w)]) {
        const int v = tail_of[static_cast<std::size_t>(eidx)];
        const double c = sigma[static_cast<std::size_t>(v)] / sigma[static_cast<std::size_t>(w)] *
                         (1.0 + delta[static_cast<std::size_t>(w)]);
        score[static_cast<std::size_t>(eidx)] += c;
        delta[static_cast<std::size_t>(v)] += c;
      }
    }
  }

  std::map<std::string, double> result;
  for (std::size_t i = 0; i < edge_ids.size(); ++i) result[edge_ids[i]] = score[i];
  return result;
}

std::size_t FeatureTable::onehot_dim() const {
  std::size_t d = 0;
  for (const auto& b : blocks_) d += b.categories.size();
  return d;
}

FeatureTable FeatureTable::derive(const RoadNetwork& network) {
  FeatureTable t;
  t.node_feature_names_ = {"degree"};
  t.edge_numeric_names_ = {"speed_limit_mph", "lanes", "length_m", "betweenness"};

  std::map<std::string, double> degree;
  for (const auto& [id, e] : network.edges()) {
    degree[e.from] += 1.0;
    degree[e.to] += 1.0;
  }
  const auto betweenness = compute_edge_betweenness(network);

  std::set<std::string> road_types, directions, one_ways;
  for (const auto& [id, e] : network.edges()) {
    road_types.insert(e.attrs.road_type);
    directions.insert(e.attrs.direction);
    one_ways.insert(e.attrs.one_way ? "1" : "0");
  }
  t.blocks_ = {
      CategoricalBlock{"road_type", {road_types.begin(), road_types.end()}},
      CategoricalBlock{"direction", {directions.begin(), directions.end()}},
      CategoricalBlock{"one_way", {one_ways.begin(), one_ways.end()}},
  };

  t.segments_ = network.segment_ids();
  for (std::size_t i = 0; i < t.segments_.size(); ++i) t.index_[t.segments_[i]] = i;

  const std::size_t dim = t.numeric_dim() + t.onehot_dim();
  t.raw_.setZero(static_cast<Eigen::Index>(t.segments_.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < t.segments_.size(); ++i) {
    const Edge& e = network.edge(t.segments_[i]);
    Eigen::Index c = 0;
    auto row = t.raw_.row(static_cast<Eigen::Index>(i));
    row(c++) = degree.at(e.from);
    row(c++) = degree.at(e.to);
    row(c++) = e.attrs.speed_limit_mph;
    row(c++) = static_cast<double>(e.attrs.lanes);
    row(c++) = e.attrs.length_m;
    row(c++) = betweenness.at(t.segments_[i]);
    const std::string cat_values[3] = {e.attrs.road_type, e.attrs.direction,
                                       e.attrs.one_way ? "1" : "0"};
    for (std::size_t b = 0; b < t.blocks_.size(); ++b) {
      for (const auto& cat : t.blocks_[b].categories) {
        row(c++) = (cat == cat_values[b]) ? 1.0 : 0.0;
      }
    }
  }
  t.recompute_stats();
  return t;
}

void FeatureTable::recompute_stats() {
  const auto nd = static_cast<Eigen::Index>(numeric_dim());
  const auto n = raw_.rows();
  mean_ = raw_.leftCols(nd).colwise().mean();
  std_.resize(nd);
  for (Eigen::Index c = 0; c < nd; ++c) {
    const double var =
        (raw_.col(c).array() - mean_(c)).square().sum() / static_cast<double>(n);
    std_(c) = std::sqrt(var);
  }
}

FeatureTable FeatureTable::restricted_to(const std::vector<std::string>& ids) const {
  if (ids.empty()) throw ValidationError("feature table restriction needs at least one segment");
  FeatureTable t;
  t.node_feature_names_ = node_feature_names_;
  t.edge_numeric_names_ = edge_numeric_names_;
  t.blocks_ = blocks_;
  t.segments_ = ids;
  std::sort(t.segments_.begin(), t.segments_.end());
  t.raw_.resize(static_cast<Eigen::Index>(t.segments_.size()), raw_.cols());
  for (std::size_t i = 0; i < t.segments_.size(); ++i) {
    const auto it = index_.find(t.segments_[i]);
    if (it == index_.end()) {
      throw ValidationError("segment '" + t.segments_[i] + "' not in feature table");
    }
    t.index_[t.segments_[i]] = i;
    t.raw_.row(static_cast<Eigen::Index>(i)) = raw_.row(static_cast<Eigen::Index>(it->second));
  }
  t.recompute_stats();
  return t;
}

Eigen::VectorXd FeatureTable::raw(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("segment '" + id + "' not in feature table");
  return raw_.row(static_cast<Eigen::Index>(it->second));
}

SideInfo FeatureTable::side_info(const std::string& id) const {
  const Eigen::VectorXd r = raw(id);
  SideInfo s;
  const auto nn = static_cast<Eigen::Index>(n_node_features());
  const auto ne = static_cast<Eigen::Index>(n_edge_numeric());
  s.node_u = r.segment(0, nn);
  s.node_v = r.segment(nn, nn);
  s.edge_numeric = r.segment(2 * nn, ne);
  s.edge_onehot = r.segment(2 * nn + ne, static_cast<Eigen::Index>(onehot_dim()));
  return s;
}

Eigen::VectorXd FeatureTable::zscored_from_raw(const Eigen::VectorXd& raw_row) const {
  if (raw_row.size() != raw_.cols()) {
    throw ValidationError("feature vector dimension mismatch");
  }
  const auto nd = static_cast<Eigen::Index>(numeric_dim());
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(raw_row.size()));
  for (Eigen::Index c = 0; c < nd; ++c) {
    if (std_(c) > 0.0) vals.push_back((raw_row(c) - mean_(c)) / std_(c));
  }
  for (Eigen::Index c = nd; c < raw_row.size(); ++c) vals.push_back(raw_row(c));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Eigen::VectorXd FeatureTable::zscored(const std::string& id) const {
  return zscored_from_raw(raw(id));
}

}  // namespace trafficgp
