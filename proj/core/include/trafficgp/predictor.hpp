#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trafficgp/features.hpp"
#include "trafficgp/gp.hpp"
#include "trafficgp/localization.hpp"
#include "trafficgp/nmf.hpp"
#include "trafficgp/road_network.hpp"
#include "trafficgp/speed_data.hpp"

namespace trafficgp {

// The six model variants: a single global process, factorization-localized
// processes, and grid-localized processes, each with or without road
// attributes in the covariance ("+" suffix).
enum class ModelVariant { gp, gp_side, lgp, lgp_side, lgr, lgr_side };

std::string variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);
bool variant_uses_side(ModelVariant v);
bool variant_is_factor_localized(ModelVariant v);
bool variant_is_grid_localized(ModelVariant v);

struct PredictorConfig {
  ModelVariant variant = ModelVariant::gp;
  int clusters = 5;        // factor rank (lgp) or grid dimension (lgr); unused by gp
  int t_max = 600;           // training-point cap per process
  int min_pool = 5;          // smaller pools fall back to the global pool
  int parallel_workers = 1;  // threads for batch-predict fits; results are identical either way
  std::uint64_t seed = 0;    // master stream seed; per-cell streams derive from it
  NMFConfig nmf;           // lambda/max_iters for the factorization (k and seed derive)
  FitOptions fit;          // kernel form and search budget (use_side_info/seed derive)
};

struct Query {
  std::string segment_id;
  long interval = 0;  // interval of day
};

struct PredictionRecord {
  std::string segment_id;
  long interval = 0;
  double mean_mph = 0.0;
  double variance = 0.0;
  int cluster_i = 1;
  int cluster_j = 1;
  bool fallback = false;
};

// A ready-to-query model family over one training matrix. Local processes are
// trained on demand, one per requested cluster pair, and cached. Pools larger
// than t_max are subsampled without replacement on a per-cell random stream,
// so results are independent of query order and of which other cells get hit.
class TrainedPredictor {
 public:
  static TrainedPredictor learn(SpeedMatrix data, const RoadNetwork& network,
                                const FeatureTable& features, const PredictorConfig& cfg);

  PredictionRecord predict(const Query& q);
  std::vector<PredictionRecord> predict_all(const std::vector<Query>& queries);

  // Cluster pair a query routes to (before any fallback).
  std::pair<int, int> route(const Query& q) const;

  const PredictorConfig& config() const { return cfg_; }
  int fit_count() const { return fit_count_; }
  double nmf_seconds() const { return nmf_seconds_; }
  const Factorization* factorization() const { return fact_ ? &*fact_ : nullptr; }
  const SpatialClustering* spatial() const { return spatial_ ? &*spatial_ : nullptr; }
  const TemporalClustering* temporal() const { return temporal_ ? &*temporal_ : nullptr; }
  const GridClustering* grid() const { return grid_ ? &*grid_ : nullptr; }
  const GPModel* cached_model(int ci, int cj) const;

 private:
  TrainedPredictor() = default;

  const std::vector<Triple>& pool_for(int ci, int cj) const;
  GPModel fit_cell(int ci, int cj) const;
  GPModel& model_for(int ci, int cj);
  void prefit(const std::vector<Query>& queries);
  GPInput make_input(const std::string& segment_id, long interval) const;

  PredictorConfig cfg_;
  SpeedMatrix data_;
  RoadNetwork network_;
  FeatureTable features_;
  long intervals_per_day_ = 0;
  std::vector<Triple> global_pool_;
  std::optional<Factorization> fact_;
  std::optional<SpatialClustering> spatial_;
  std::optional<TemporalClustering> temporal_;
  std::optional<NearestNeighborIndex> nn_;
  std::optional<GridClustering> grid_;
  std::vector<std::vector<Triple>> cell_pools_;
  std::map<std::pair<int, int>, GPModel> models_;
  int fit_count_ = 0;
  double nmf_seconds_ = 0.0;
};

void write_predictions_csv(const std::string& path, const std::vector<PredictionRecord>& records);

}  // namespace trafficgp
