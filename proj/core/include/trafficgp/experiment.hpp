#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trafficgp/features.hpp"
#include "trafficgp/metrics.hpp"
#include "trafficgp/predictor.hpp"
#include "trafficgp/road_network.hpp"
#include "trafficgp/speed_data.hpp"

namespace trafficgp {

struct ExperimentConfig {
  std::vector<ModelVariant> variants = {ModelVariant::gp,  ModelVariant::gp_side,
                                        ModelVariant::lgp, ModelVariant::lgp_side,
                                        ModelVariant::lgr, ModelVariant::lgr_side};
  std::vector<int> trial_hours;  // empty means 0..23
  int steps = 6;                 // predict 1..steps intervals past the trial hour
  int window_days = 0;           // 0 means the day-type default: 5 weekday, 3 weekend
  DayType day_type = DayType::weekday;
  long test_day = -1;            // negative means the latest day of day_type in the store
  double train_fraction = 0.4;   // covered-segment share the models train on
  int clusters = 5;
  int t_max = 600;
  int min_pool = 5;
  std::uint64_t seed = 0;
  NMFConfig nmf;
  FitOptions fit;
  // Wall-clock runtimes are recorded only in timing mode, which also forces
  // fully serial execution; otherwise runtime fields are written as zero and
  // the worker counts below may parallelize.
  bool timing = true;
  int predictor_workers = 1;
  int trial_workers = 1;
};

struct StepScore {
  int step = 1;
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;  // queried cells with no truth on the test day
};

struct VariantTrial {
  ModelVariant variant = ModelVariant::gp;
  int trial_hour = 0;
  std::vector<StepScore> steps;
  double runtime_s = 0.0;  // learn + predict span
  double nmf_s = 0.0;      // factorization share, also inside runtime_s
};

struct SignificanceRow {
  std::string pair;
  std::string metric;
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
  bool valid = false;  // false when too few non-zero differences existed
};

struct ExperimentResult {
  long test_day = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<VariantTrial> trials;  // trial-major, variants in config order
  std::vector<SignificanceRow> significance;
};

ExperimentResult run_experiment(const ObservationStore& store, const RoadNetwork& network,
                                const FeatureTable& features, const ExperimentConfig& cfg);

// One row per variant per trial per step plus an "nmf(<variant>)" timing row
// after each factor-localized variant's steps.
void write_results_csv(const std::string& path, const ExperimentResult& result);
// Per-variant aggregates at both granularities: over step rows and over
// per-trial means.
void write_summary_csv(const std::string& path, const ExperimentResult& result);
void write_significance_csv(const std::string& path, const ExperimentResult& result);

}  // namespace trafficgp
