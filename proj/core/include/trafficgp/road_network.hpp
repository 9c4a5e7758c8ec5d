#pragma once

#include <map>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"

namespace trafficgp {

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

struct EdgeAttributes {
  bool one_way = true;
  double speed_limit_mph = 0.0;
  int lanes = 0;
  double length_m = 0.0;
  std::string road_type;
  std::string direction;
};

struct Edge {
  std::string from;
  std::string to;
  EdgeAttributes attrs;
};

struct EdgeRecord {
  std::string segment_id;
  std::string from_node;
  std::string to_node;
  LonLat from_pos;
  LonLat to_pos;
  EdgeAttributes attrs;
};

// Directed road graph: nodes keyed by id, directed edges (segments) keyed by
// segment id. A two-way street appears as two segments with swapped endpoints.
class RoadNetwork {
 public:
  // Validates and assembles records. Throws ValidationError on: empty input,
  // duplicate segment id, conflicting coordinates for one node id,
  // non-positive speed limit or length, lanes < 1.
  static RoadNetwork from_records(const std::vector<EdgeRecord>& records);

  // CSV columns: segment_id,from_node,to_node,from_lon,from_lat,to_lon,to_lat,
  // one_way,speed_limit_mph,lanes,length_m,road_type,direction
  static RoadNetwork load_csv(const std::string& path);
  static void write_csv(const std::string& path, const std::vector<EdgeRecord>& records);

  const std::map<std::string, LonLat>& nodes() const { return nodes_; }
  const std::map<std::string, Edge>& edges() const { return edges_; }

  bool has_segment(const std::string& id) const { return edges_.count(id) != 0; }
  const Edge& edge(const std::string& id) const;
  const LonLat& node(const std::string& id) const;
  LonLat midpoint(const std::string& segment_id) const;

  // Sorted segment ids.
  std::vector<std::string> segment_ids() const;

 private:
  std::map<std::string, LonLat> nodes_;
  std::map<std::string, Edge> edges_;
};

}  // namespace trafficgp
