#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trafficgp/road_network.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::to_string(
        std::chrono::steady_clock::now().time_since_epoch().count());
    path_ = std::filesystem::temp_directory_path() /
            ("trafficgp_test_" + stamp + "_" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline trafficgp::EdgeRecord make_edge(const std::string& id, const std::string& from,
                                       const std::string& to, trafficgp::LonLat from_pos,
                                       trafficgp::LonLat to_pos, double speed_limit = 30.0,
                                       int lanes = 2, const std::string& road_type = "residential",
                                       const std::string& direction = "EB") {
  trafficgp::EdgeRecord r;
  r.segment_id = id;
  r.from_node = from;
  r.to_node = to;
  r.from_pos = from_pos;
  r.to_pos = to_pos;
  r.attrs.one_way = true;
  r.attrs.speed_limit_mph = speed_limit;
  r.attrs.lanes = lanes;
  r.attrs.length_m = 100.0;
  r.attrs.road_type = road_type;
  r.attrs.direction = direction;
  return r;
}

// Chain n0 -> n1 -> ... -> n_{count}: `count` segments named s1..s{count}.
inline trafficgp::RoadNetwork chain_network(int count) {
  std::vector<trafficgp::EdgeRecord> records;
  for (int i = 0; i < count; ++i) {
    records.push_back(make_edge("s" + std::to_string(i + 1), "n" + std::to_string(i),
                                "n" + std::to_string(i + 1), {0.01 * i, 0.0},
                                {0.01 * (i + 1), 0.0}));
  }
  return trafficgp::RoadNetwork::from_records(records);
}

}  // namespace testutil
