#include "trafficgp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <utility>

#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kNodeSpacingDeg = 0.01;
constexpr double kMetersPerDegree = 111000.0;

struct Lattice {
  // Node ids row-major; adjacency pairs as (a, b) node ordinals with a < b in
  // scan order (all horizontal neighbors, then all vertical).
  std::vector<std::pair<int, int>> adjacencies;
};

std::string node_name(int rows_cols, int r, int c) {
  (void)rows_cols;
  char buf[32];
  std::snprintf(buf, sizeof buf, "n%d_%d", r, c);
  return buf;
}

std::string segment_name(int ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05d", ordinal + 1);
  return buf;
}

void validate(const SynthSpec& s, int m) {
  if (s.grid_rows < 1 || s.grid_cols < 1 || s.grid_rows * s.grid_cols < 2) {
    throw ValidationError("node grid needs at least two nodes");
  }
  const int n_adj = s.grid_rows * (s.grid_cols - 1) + s.grid_cols * (s.grid_rows - 1);
  if (s.n_segments < s.grid_rows * s.grid_cols - 1) {
    throw ValidationError("segment count cannot connect the node grid");
  }
  if (s.n_segments > 2 * n_adj) {
    throw ValidationError("segment count exceeds the lattice's directed adjacencies");
  }
  if (s.interval_minutes < 1 || 1440 % s.interval_minutes != 0) {
    throw ValidationError("interval minutes must divide 1440");
  }
  if (s.spatial_regimes < 1 || s.spatial_regimes > s.n_segments) {
    throw ValidationError("spatial regime count out of range");
  }
  if (s.temporal_regimes < 1 || s.temporal_regimes > m) {
    throw ValidationError("temporal regime count out of range");
  }
  if (static_cast<int>(s.regime_means.size()) != s.spatial_regimes * s.temporal_regimes) {
    throw ValidationError("regime mean table size must be spatial_regimes * temporal_regimes");
  }
  for (const double v : s.regime_means) {
    if (!(v > 0.0)) throw ValidationError("regime means must be positive");
  }
  if (s.noise_std < 0.0) throw ValidationError("noise std must be non-negative");
  if (!(s.missing_rate >= 0.0 && s.missing_rate < 1.0)) {
    throw ValidationError("missing rate must lie in [0, 1)");
  }
  if (!s.regime_missing_rates.empty()) {
    if (static_cast<int>(s.regime_missing_rates.size()) != s.temporal_regimes) {
      throw ValidationError("per-regime missing rates must cover every temporal regime");
    }
    for (const double r : s.regime_missing_rates) {
      if (!(r >= 0.0 && r < 1.0)) throw ValidationError("missing rate must lie in [0, 1)");
    }
  }
  if (!s.temporal_regime_of.empty()) {
    if (static_cast<int>(s.temporal_regime_of.size()) != m) {
      throw ValidationError("temporal regime layout must cover every interval of day");
    }
    for (const int r : s.temporal_regime_of) {
      if (r < 0 || r >= s.temporal_regimes) {
        throw ValidationError("temporal regime layout references an unknown regime");
      }
    }
  }
  if (s.days < 1) throw ValidationError("day count must be positive");
}

// Directed segment sequence over the lattice: spanning-tree arcs first (so any
// prefix of length >= nodes-1 connects the grid), then the reversed tree arcs,
// then the remaining adjacencies forward and reversed.
std::vector<std::pair<int, int>> segment_sequence(int rows, int cols) {
  const int n = rows * cols;
  std::vector<std::pair<int, int>> adj;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) adj.emplace_back(r * cols + c, r * cols + c + 1);
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c < cols; ++c) adj.emplace_back(r * cols + c, (r + 1) * cols + c);
  }
  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (const auto& [a, b] : adj) {
    neighbors[static_cast<std::size_t>(a)].push_back(b);
    neighbors[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& ns : neighbors) std::sort(ns.begin(), ns.end());

  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<std::pair<int, int>> tree;
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (const int w : neighbors[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        tree.emplace_back(v, w);
        frontier.push(w);
      }
    }
  }

  std::vector<std::pair<int, int>> seq = tree;
  for (const auto& [a, b] : tree) seq.emplace_back(b, a);
  std::vector<std::pair<int, int>> in_tree = tree;
  std::sort(in_tree.begin(), in_tree.end());
  auto is_tree = [&](int a, int b) {
    return std::binary_search(in_tree.begin(), in_tree.end(), std::make_pair(a, b)) ||
           std::binary_search(in_tree.begin(), in_tree.end(), std::make_pair(b, a));
  };
  for (const auto& [a, b] : adj) {
    if (!is_tree(a, b)) seq.emplace_back(a, b);
  }
  for (const auto& [a, b] : adj) {
    if (!is_tree(a, b)) seq.emplace_back(b, a);
  }
  return seq;
}

std::string direction_of(const LonLat& from, const LonLat& to) {
  const double dlon = to.lon - from.lon;
  const double dlat = to.lat - from.lat;
  if (std::abs(dlon) >= std::abs(dlat)) return dlon >= 0.0 ? "EB" : "WB";
  return dlat >= 0.0 ? "NB" : "SB";
}

}  // namespace

SyntheticData generate_synthetic(const SynthSpec& spec) {
  const int m = 1440 / std::max(1, spec.interval_minutes);
  validate(spec, m);

  SyntheticData out;
  out.temporal_regime_of = spec.temporal_regime_of;
  if (out.temporal_regime_of.empty()) {
    out.temporal_regime_of.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      out.temporal_regime_of[static_cast<std::size_t>(j)] =
          static_cast<int>((static_cast<long>(j) * spec.temporal_regimes) / m);
    }
  }

  const auto seq = segment_sequence(spec.grid_rows, spec.grid_cols);
  auto coord = [&](int ordinal) {
    const int r = ordinal / spec.grid_cols;
    const int c = ordinal % spec.grid_cols;
    return LonLat{c * kNodeSpacingDeg, r * kNodeSpacingDeg};
  };
  auto name = [&](int ordinal) {
    return node_name(spec.grid_cols, ordinal / spec.grid_cols, ordinal % spec.grid_cols);
  };

  Rng attr_rng(mix_seed({spec.seed, 0x6174747273ULL}));
  out.edges.reserve(static_cast<std::size_t>(spec.n_segments));
  out.segment_ids.reserve(static_cast<std::size_t>(spec.n_segments));
  out.spatial_regime_of.reserve(static_cast<std::size_t>(spec.n_segments));
  for (int i = 0; i < spec.n_segments; ++i) {
    const auto [a, b] = seq[static_cast<std::size_t>(i)];
    const int regime = i % spec.spatial_regimes;
    EdgeRecord rec;
    rec.segment_id = segment_name(i);
    rec.from_node = name(a);
    rec.to_node = name(b);
    rec.from_pos = coord(a);
    rec.to_pos = coord(b);
    rec.attrs.one_way = true;
    if (spec.regime_attributes) {
      rec.attrs.speed_limit_mph = 25.0 + 10.0 * (regime % 5);
      rec.attrs.lanes = 1 + regime % 4;
      rec.attrs.road_type = "class_" + std::to_string(regime);
    } else {
      rec.attrs.speed_limit_mph = 25.0 + 10.0 * static_cast<double>(uniform_below(attr_rng, 5));
      rec.attrs.lanes = 1 + static_cast<int>(uniform_below(attr_rng, 4));
      rec.attrs.road_type = "class_" + std::to_string(uniform_below(attr_rng, 3));
    }
    rec.attrs.length_m =
        kMetersPerDegree * std::hypot(rec.to_pos.lon - rec.from_pos.lon,
                                      rec.to_pos.lat - rec.from_pos.lat);
    rec.attrs.direction = direction_of(rec.from_pos, rec.to_pos);
    out.edges.push_back(std::move(rec));
    out.segment_ids.push_back(out.edges.back().segment_id);
    out.spatial_regime_of.push_back(regime);
  }

  const long day0 = days_from_civil(spec.start_date);
  const int n = spec.n_segments;
  Rng rng(mix_seed({spec.seed, 0x737065656473ULL}));
  Eigen::MatrixXd values(n, m);
  std::vector<unsigned char> keep(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));

  for (int d = 0; d < spec.days; ++d) {
    const long day = day0 + d;
    for (int i = 0; i < n; ++i) {
      const int rs = out.spatial_regime_of[static_cast<std::size_t>(i)];
      for (int j = 0; j < m; ++j) {
        const int rt = out.temporal_regime_of[static_cast<std::size_t>(j)];
        const double mean =
            spec.regime_means[static_cast<std::size_t>(rs * spec.temporal_regimes + rt)];
        const double diurnal = spec.diurnal_amplitude * std::sin(2.0 * kPi * j / m);
        const double noise = spec.noise_std * normal_double(rng);
        values(i, j) = std::max(0.5, mean + diurnal + noise);
        const double rate = spec.regime_missing_rates.empty()
                                ? spec.missing_rate
                                : spec.regime_missing_rates[static_cast<std::size_t>(rt)];
        keep[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
             static_cast<std::size_t>(j)] = uniform_double(rng) >= rate ? 1 : 0;
      }
    }
    // No day may lose an entire row or column: re-add one uniformly chosen
    // entry wherever that happened.
    for (int i = 0; i < n; ++i) {
      bool any = false;
      for (int j = 0; j < m && !any; ++j) {
        any = keep[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                   static_cast<std::size_t>(j)] != 0;
      }
      if (!any) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(m)));
        keep[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + j] = 1;
      }
    }
    for (int j = 0; j < m; ++j) {
      bool any = false;
      for (int i = 0; i < n && !any; ++i) {
        any = keep[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                   static_cast<std::size_t>(j)] != 0;
      }
      if (!any) {
        const auto i = static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(n)));
        keep[i * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] = 1;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        if (keep[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                 static_cast<std::size_t>(j)] == 0) {
          continue;
        }
        SpeedRecord rec;
        rec.segment_id = out.segment_ids[static_cast<std::size_t>(i)];
        rec.when = LocalTime{day, j * spec.interval_minutes};
        rec.speed_mph = values(i, j);
        out.speeds.push_back(std::move(rec));
      }
    }
  }
  return out;
}

void write_synthetic(const SyntheticData& data, const std::string& network_path,
                     const std::string& speeds_path) {
  RoadNetwork::write_csv(network_path, data.edges);
  write_speeds_csv(speeds_path, data.speeds);
}

}  // namespace trafficgp
