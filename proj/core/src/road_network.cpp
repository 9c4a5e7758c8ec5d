#include "trafficgp/road_network.hpp"

#include "trafficgp/csv.hpp"

namespace trafficgp {

namespace {

const std::vector<std::string> kNetworkHeader = {
    "segment_id", "from_node", "to_node",  "from_lon",  "from_lat", "to_lon", "to_lat",
    "one_way",    "speed_limit_mph", "lanes", "length_m", "road_type", "direction"};

void check_node(std::map<std::string, LonLat>& nodes, const std::string& id, const LonLat& pos,
                const std::string& segment_id) {
  auto [it, inserted] = nodes.emplace(id, pos);
  if (!inserted && (it->second.lon != pos.lon || it->second.lat != pos.lat)) {
    throw ValidationError("node '" + id + "' has conflicting coordinates (seen again in segment '" +
                          segment_id + "')");
  }
}

}  // namespace

RoadNetwork RoadNetwork::from_records(const std::vector<EdgeRecord>& records) {
  if (records.empty()) throw ValidationError("network has no segments");
  RoadNetwork net;
  for (const auto& r : records) {
    if (r.segment_id.empty()) throw ValidationError("empty segment id");
    if (net.edges_.count(r.segment_id)) {
      throw ValidationError("duplicate segment id: '" + r.segment_id + "'");
    }
    if (!(r.attrs.speed_limit_mph > 0.0)) {
      throw ValidationError("segment '" + r.segment_id + "': speed limit must be positive");
    }
    if (r.attrs.lanes < 1) {
      throw ValidationError("segment '" + r.segment_id + "': lanes must be >= 1");
    }
    if (!(r.attrs.length_m > 0.0)) {
      throw ValidationError("segment '" + r.segment_id + "': length must be positive");
    }
    check_node(net.nodes_, r.from_node, r.from_pos, r.segment_id);
    check_node(net.nodes_, r.to_node, r.to_pos, r.segment_id);
    net.edges_.emplace(r.segment_id, Edge{r.from_node, r.to_node, r.attrs});
  }
  return net;
}

RoadNetwork RoadNetwork::load_csv(const std::string& path) {
  CsvReader reader(path, kNetworkHeader);
  std::vector<EdgeRecord> records;
  std::vector<std::string> f;
  while (reader.next(f)) {
    EdgeRecord r;
    r.segment_id = f[0];
    r.from_node = f[1];
    r.to_node = f[2];
    r.from_pos = {parse_double_field(f[3], "from_lon"), parse_double_field(f[4], "from_lat")};
    r.to_pos = {parse_double_field(f[5], "to_lon"), parse_double_field(f[6], "to_lat")};
    r.attrs.one_way = parse_bool_field(f[7], "one_way");
    r.attrs.speed_limit_mph = parse_double_field(f[8], "speed_limit_mph");
    r.attrs.lanes = static_cast<int>(parse_long_field(f[9], "lanes"));
    r.attrs.length_m = parse_double_field(f[10], "length_m");
    r.attrs.road_type = f[11];
    r.attrs.direction = f[12];
    records.push_back(std::move(r));
  }
  return from_records(records);
}

void RoadNetwork::write_csv(const std::string& path, const std::vector<EdgeRecord>& records) {
  CsvWriter w(path, kNetworkHeader);
  for (const auto& r : records) {
    w.row({r.segment_id, r.from_node, r.to_node, format_double(r.from_pos.lon),
           format_double(r.from_pos.lat), format_double(r.to_pos.lon), format_double(r.to_pos.lat),
           r.attrs.one_way ? "1" : "0", format_double(r.attrs.speed_limit_mph),
           std::to_string(r.attrs.lanes), format_double(r.attrs.length_m), r.attrs.road_type,
           r.attrs.direction});
  }
  w.close();
}

const Edge& RoadNetwork::edge(const std::string& id) const {
  const auto it = edges_.find(id);
  if (it == edges_.end()) throw ValidationError("unknown segment id: '" + id + "'");
  return it->second;
}

const LonLat& RoadNetwork::node(const std::string& id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ValidationError("unknown node id: '" + id + "'");
  return it->second;
}

LonLat RoadNetwork::midpoint(const std::string& segment_id) const {
  const Edge& e = edge(segment_id);
  const LonLat& a = node(e.from);
  const LonLat& b = node(e.to);
  return LonLat{(a.lon + b.lon) / 2.0, (a.lat + b.lat) / 2.0};
}

std::vector<std::string> RoadNetwork::segment_ids() const {
  std::vector<std::string> ids;
  ids.reserve(edges_.size());
  for (const auto& [id, e] : edges_) ids.push_back(id);
  return ids;
}

}  // namespace trafficgp
