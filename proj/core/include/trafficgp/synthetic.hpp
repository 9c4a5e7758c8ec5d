#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"
#include "trafficgp/road_network.hpp"
#include "trafficgp/speed_data.hpp"

namespace trafficgp {

// Planted-structure generator: a directed lattice network and daily speed
// matrices of regime mean + diurnal profile + Gaussian noise, with entries
// dropped at a missing rate but never an entire row or column of a day.
struct SynthSpec {
  int grid_rows = 4;
  int grid_cols = 4;
  int n_segments = 24;
  int interval_minutes = 5;
  int spatial_regimes = 1;
  int temporal_regimes = 1;
  // Mean speed (mph) per (spatial, temporal) regime pair, spatial-major,
  // size spatial_regimes * temporal_regimes.
  std::vector<double> regime_means;
  double noise_std = 1.0;
  double diurnal_amplitude = 2.0;
  double missing_rate = 0.0;
  // Optional per-temporal-regime missing rates overriding missing_rate.
  std::vector<double> regime_missing_rates;
  // Optional explicit temporal regime per interval of day (size 1440/interval_minutes);
  // empty means contiguous equal blocks.
  std::vector<int> temporal_regime_of;
  int days = 7;
  CivilDate start_date{2014, 8, 4};
  // Tie edge attributes (speed limit, lanes, road class) to the spatial
  // regime instead of drawing them at random.
  bool regime_attributes = true;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<EdgeRecord> edges;
  std::vector<SpeedRecord> speeds;
  std::vector<std::string> segment_ids;   // ordinal order
  std::vector<int> spatial_regime_of;     // per segment ordinal, 0-based
  std::vector<int> temporal_regime_of;    // per interval of day, 0-based
};

SyntheticData generate_synthetic(const SynthSpec& spec);

void write_synthetic(const SyntheticData& data, const std::string& network_path,
                     const std::string& speeds_path);

}  // namespace trafficgp
