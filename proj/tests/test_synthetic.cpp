#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "trafficgp/synthetic.hpp"

using namespace trafficgp;
using testutil::ScratchDir;
using testutil::slurp;

namespace {

SynthSpec base_spec() {
  SynthSpec s;
  s.grid_rows = 3;
  s.grid_cols = 3;
  s.n_segments = 12;
  s.interval_minutes = 60;
  s.spatial_regimes = 1;
  s.temporal_regimes = 1;
  s.regime_means = {20.0};
  s.days = 2;
  s.seed = 5;
  return s;
}

// Union-find over node names.
struct DisjointSet {
  std::map<std::string, std::string> parent;
  std::string find(const std::string& x) {
    if (!parent.count(x)) parent[x] = x;
    if (parent[x] == x) return x;
    return parent[x] = find(parent[x]);
  }
  void unite(const std::string& a, const std::string& b) { parent[find(a)] = find(b); }
};

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const SynthSpec spec = base_spec();
  ScratchDir dir;
  write_synthetic(generate_synthetic(spec), dir.file("net1.csv"), dir.file("spd1.csv"));
  write_synthetic(generate_synthetic(spec), dir.file("net2.csv"), dir.file("spd2.csv"));
  CHECK(slurp(dir.file("net1.csv")) == slurp(dir.file("net2.csv")));
  CHECK(slurp(dir.file("spd1.csv")) == slurp(dir.file("spd2.csv")));

  SynthSpec other = spec;
  other.seed = 6;
  write_synthetic(generate_synthetic(other), dir.file("net3.csv"), dir.file("spd3.csv"));
  CHECK(slurp(dir.file("net1.csv")) == slurp(dir.file("net3.csv")));  // layout is seed-free
  CHECK(slurp(dir.file("spd1.csv")) != slurp(dir.file("spd3.csv")));
}

TEST_CASE("noiseless speeds equal the regime mean plus the diurnal curve") {
  SynthSpec spec = base_spec();
  spec.noise_std = 0.0;
  spec.diurnal_amplitude = 3.0;
  spec.days = 1;
  const SyntheticData data = generate_synthetic(spec);
  REQUIRE_FALSE(data.speeds.empty());
  // one record per segment and interval: 12 * 24
  CHECK(data.speeds.size() == 12u * 24u);
  for (const SpeedRecord& r : data.speeds) {
    const int j = r.when.minute / 60;
    const double want =
        std::max(0.5, 20.0 + 3.0 * std::sin(2.0 * 3.14159265358979323846 * j / 24.0));
    CHECK(r.speed_mph == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("tiny means clamp at the floor speed") {
  SynthSpec spec = base_spec();
  spec.noise_std = 0.0;
  spec.diurnal_amplitude = 5.0;
  spec.regime_means = {1.0};  // 1 - 5 sin(...) dips far below zero
  spec.days = 1;
  const SyntheticData data = generate_synthetic(spec);
  double lowest = 1e9;
  for (const SpeedRecord& r : data.speeds) lowest = std::min(lowest, r.speed_mph);
  CHECK(lowest == 0.5);
}

TEST_CASE("any prefix of the segment order keeps the grid connected") {
  SynthSpec spec = base_spec();
  spec.grid_rows = 4;
  spec.grid_cols = 4;
  spec.n_segments = 24;
  const SyntheticData data = generate_synthetic(spec);
  REQUIRE(data.edges.size() == 24u);

  // the first nodes-1 = 15 arcs already touch and connect all 16 nodes
  DisjointSet ds;
  std::set<std::string> nodes;
  for (int i = 0; i < 15; ++i) {
    ds.unite(data.edges[static_cast<std::size_t>(i)].from_node,
             data.edges[static_cast<std::size_t>(i)].to_node);
    nodes.insert(data.edges[static_cast<std::size_t>(i)].from_node);
    nodes.insert(data.edges[static_cast<std::size_t>(i)].to_node);
  }
  CHECK(nodes.size() == 16u);
  std::set<std::string> roots;
  for (const std::string& n : nodes) roots.insert(ds.find(n));
  CHECK(roots.size() == 1u);

  // ids are zero-padded ordinals
  CHECK(data.edges[0].segment_id == "s00001");
  CHECK(data.edges[23].segment_id == "s00024");
}

TEST_CASE("no day loses an entire segment or interval at high missing rates") {
  SynthSpec spec = base_spec();
  spec.n_segments = 12;
  spec.missing_rate = 0.95;
  spec.days = 3;
  spec.seed = 9;
  const SyntheticData data = generate_synthetic(spec);

  std::map<long, std::set<std::string>> segments_by_day;
  std::map<long, std::set<int>> intervals_by_day;
  for (const SpeedRecord& r : data.speeds) {
    segments_by_day[r.when.day].insert(r.segment_id);
    intervals_by_day[r.when.day].insert(r.when.minute / 60);
  }
  CHECK(segments_by_day.size() == 3u);
  for (const auto& [day, ids] : segments_by_day) CHECK(ids.size() == 12u);
  for (const auto& [day, cols] : intervals_by_day) CHECK(cols.size() == 24u);

  // the rate still bites: far fewer records than the dense count
  CHECK(data.speeds.size() < 12u * 24u * 3u / 2u);
}

TEST_CASE("per-regime missing rates control sparsity by time of day") {
  SynthSpec spec = base_spec();
  spec.temporal_regimes = 2;
  spec.regime_means = {30.0, 30.0};
  spec.regime_missing_rates = {0.9, 0.0};
  spec.days = 4;
  const SyntheticData data = generate_synthetic(spec);

  std::size_t first_half = 0, second_half = 0;
  for (const SpeedRecord& r : data.speeds) {
    (r.when.minute / 60 < 12 ? first_half : second_half) += 1;
  }
  // dense half keeps all 12 * 12 * 4 records, sparse half roughly a tenth
  CHECK(second_half == 12u * 12u * 4u);
  CHECK(first_half < second_half / 4u);
}

TEST_CASE("spatial regimes interleave by ordinal and set the attributes") {
  SynthSpec spec = base_spec();
  spec.spatial_regimes = 3;
  spec.regime_means = {20.0, 30.0, 40.0};
  const SyntheticData data = generate_synthetic(spec);
  for (std::size_t i = 0; i < data.edges.size(); ++i) {
    const int r = static_cast<int>(i) % 3;
    CHECK(data.spatial_regime_of[i] == r);
    CHECK(data.edges[i].attrs.speed_limit_mph == 25.0 + 10.0 * (r % 5));
    CHECK(data.edges[i].attrs.lanes == 1 + r % 4);
    CHECK(data.edges[i].attrs.road_type == "class_" + std::to_string(r));
  }

  SynthSpec randomized = spec;
  randomized.regime_attributes = false;
  const SyntheticData rnd = generate_synthetic(randomized);
  bool any_differs = false;
  for (std::size_t i = 0; i < rnd.edges.size(); ++i) {
    if (rnd.edges[i].attrs.speed_limit_mph != data.edges[i].attrs.speed_limit_mph ||
        rnd.edges[i].attrs.lanes != data.edges[i].attrs.lanes) {
      any_differs = true;
    }
    CHECK(rnd.edges[i].attrs.lanes >= 1);
    CHECK(rnd.edges[i].attrs.speed_limit_mph >= 25.0);
  }
  CHECK(any_differs);
}

TEST_CASE("default temporal regimes are contiguous equal blocks") {
  SynthSpec spec = base_spec();
  spec.temporal_regimes = 2;
  spec.regime_means = {20.0, 30.0};
  const SyntheticData data = generate_synthetic(spec);
  REQUIRE(data.temporal_regime_of.size() == 24u);
  for (int j = 0; j < 12; ++j) CHECK(data.temporal_regime_of[static_cast<std::size_t>(j)] == 0);
  for (int j = 12; j < 24; ++j) CHECK(data.temporal_regime_of[static_cast<std::size_t>(j)] == 1);

  // an explicit layout overrides the blocks
  SynthSpec laid = spec;
  laid.temporal_regime_of.assign(24, 0);
  for (int j = 0; j < 24; j += 2) laid.temporal_regime_of[static_cast<std::size_t>(j)] = 1;
  const SyntheticData alt = generate_synthetic(laid);
  CHECK(alt.temporal_regime_of == laid.temporal_regime_of);
}

TEST_CASE("regime means are recoverable from the sample averages") {
  SynthSpec spec = base_spec();
  spec.spatial_regimes = 2;
  spec.regime_means = {20.0, 40.0};
  spec.noise_std = 0.3;
  spec.diurnal_amplitude = 0.0;
  spec.days = 4;
  const SyntheticData data = generate_synthetic(spec);

  std::map<std::string, std::pair<double, int>> sums;
  for (const SpeedRecord& r : data.speeds) {
    sums[r.segment_id].first += r.speed_mph;
    sums[r.segment_id].second += 1;
  }
  for (std::size_t i = 0; i < data.segment_ids.size(); ++i) {
    const auto& [sum, count] = sums[data.segment_ids[i]];
    const double want = data.spatial_regime_of[i] == 0 ? 20.0 : 40.0;
    CHECK(sum / count == doctest::Approx(want).epsilon(0.01));
  }
}

TEST_CASE("infeasible specifications are rejected") {
  SynthSpec s = base_spec();
  s.n_segments = 7;  // below nodes-1 = 8
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.n_segments = 100;  // above twice the adjacency count (2 * 12 = 24)
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.interval_minutes = 7;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.regime_means = {20.0, 30.0};  // wrong table size
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.regime_means = {0.0};
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.missing_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.temporal_regimes = 2;
  s.regime_means = {20.0, 30.0};
  s.regime_missing_rates = {0.5};  // must cover both regimes
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.temporal_regime_of.assign(10, 0);  // wrong layout length
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.temporal_regime_of.assign(24, 3);  // unknown regime index
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.days = 0;
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);

  s = base_spec();
  s.spatial_regimes = 13;  // more regimes than segments
  CHECK_THROWS_AS(generate_synthetic(s), ValidationError);
}

TEST_CASE("written files round-trip through the loaders") {
  SynthSpec spec = base_spec();
  spec.days = 3;
  spec.missing_rate = 0.2;
  const SyntheticData data = generate_synthetic(spec);
  ScratchDir dir;
  write_synthetic(data, dir.file("network.csv"), dir.file("speeds.csv"));

  const RoadNetwork net = RoadNetwork::load_csv(dir.file("network.csv"));
  CHECK(net.segment_ids().size() == 12u);
  std::size_t skipped = 0;
  const ObservationStore store =
      load_speeds_csv(dir.file("speeds.csv"), spec.interval_minutes, net, &skipped);
  CHECK(skipped == 0u);
  CHECK(store.days().size() == 3u);
  CHECK(store.segments().size() == 12u);
}
