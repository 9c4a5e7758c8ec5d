#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "trafficgp/experiment.hpp"
#include "trafficgp/synthetic.hpp"

using namespace trafficgp;
using testutil::ScratchDir;
using testutil::slurp;

namespace {

struct World {
  RoadNetwork network;
  ObservationStore store;
  FeatureTable features;
};

// Dense hourly two-regime world: 12 segments, 8 days from Monday 2014-08-04,
// so the latest weekday (2014-08-11) has a full 5-weekday window before it.
World make_world() {
  SynthSpec spec;
  spec.grid_rows = 3;
  spec.grid_cols = 3;
  spec.n_segments = 12;
  spec.interval_minutes = 60;
  spec.spatial_regimes = 2;
  spec.temporal_regimes = 2;
  spec.regime_means = {20.0, 35.0, 45.0, 30.0};
  spec.noise_std = 0.5;
  spec.days = 8;
  spec.seed = 11;
  const SyntheticData data = generate_synthetic(spec);

  RoadNetwork network = RoadNetwork::from_records(data.edges);
  ObservationStore store =
      load_speeds(data.speeds, spec.interval_minutes, {data.segment_ids.begin(),
                                                       data.segment_ids.end()});
  FeatureTable features = FeatureTable::derive(network);
  return World{std::move(network), std::move(store), std::move(features)};
}

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.variants = {ModelVariant::gp, ModelVariant::lgp};
  cfg.trial_hours = {8, 20};
  cfg.steps = 2;
  cfg.clusters = 2;
  cfg.t_max = 100;
  cfg.min_pool = 5;
  cfg.seed = 3;
  cfg.nmf.max_iters = 120;
  cfg.fit.max_evals = 25;
  cfg.timing = false;
  return cfg;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

}  // namespace

TEST_CASE("runs are deterministic and serialize to identical bytes") {
  const World w = make_world();
  const ExperimentConfig cfg = quick_config();
  const ExperimentResult a = run_experiment(w.store, w.network, w.features, cfg);
  const ExperimentResult b = run_experiment(w.store, w.network, w.features, cfg);

  ScratchDir dir;
  write_results_csv(dir.file("a.csv"), a);
  write_results_csv(dir.file("b.csv"), b);
  write_summary_csv(dir.file("as.csv"), a);
  write_summary_csv(dir.file("bs.csv"), b);
  write_significance_csv(dir.file("ag.csv"), a);
  write_significance_csv(dir.file("bg.csv"), b);
  CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));
  CHECK(slurp(dir.file("as.csv")) == slurp(dir.file("bs.csv")));
  CHECK(slurp(dir.file("ag.csv")) == slurp(dir.file("bg.csv")));
}

TEST_CASE("the train/test split partitions the covered segments") {
  const World w = make_world();
  ExperimentConfig cfg = quick_config();
  cfg.trial_hours = {8};
  const ExperimentResult r = run_experiment(w.store, w.network, w.features, cfg);

  // 12 covered segments at fraction 0.4 round to 5 training rows
  CHECK(r.train_ids.size() == 5u);
  CHECK(r.test_ids.size() == 7u);
  CHECK(std::is_sorted(r.train_ids.begin(), r.train_ids.end()));
  CHECK(std::is_sorted(r.test_ids.begin(), r.test_ids.end()));

  std::set<std::string> all(r.train_ids.begin(), r.train_ids.end());
  all.insert(r.test_ids.begin(), r.test_ids.end());
  CHECK(all.size() == 12u);
  const auto segments = w.store.segments();
  CHECK(all == std::set<std::string>(segments.begin(), segments.end()));

  // the split is a function of the seed, not of the variant list
  ExperimentConfig alt = cfg;
  alt.variants = {ModelVariant::lgr};
  const ExperimentResult r2 = run_experiment(w.store, w.network, w.features, alt);
  CHECK(r2.train_ids == r.train_ids);

  ExperimentConfig reseeded = cfg;
  reseeded.seed = 4;
  const ExperimentResult r3 = run_experiment(w.store, w.network, w.features, reseeded);
  CHECK(r3.train_ids != r.train_ids);
}

TEST_CASE("trials arrive trial-major with full step coverage") {
  const World w = make_world();
  const ExperimentConfig cfg = quick_config();
  const ExperimentResult r = run_experiment(w.store, w.network, w.features, cfg);

  REQUIRE(r.trials.size() == 4u);  // 2 hours x 2 variants
  CHECK(r.trials[0].trial_hour == 8);
  CHECK(r.trials[0].variant == ModelVariant::gp);
  CHECK(r.trials[1].variant == ModelVariant::lgp);
  CHECK(r.trials[2].trial_hour == 20);

  for (const VariantTrial& t : r.trials) {
    REQUIRE(t.steps.size() == 2u);
    for (std::size_t s = 0; s < t.steps.size(); ++s) {
      CHECK(t.steps[s].step == static_cast<int>(s) + 1);
      // dense data: every covered segment scores, nothing is skipped
      CHECK(t.steps[s].scored == 12u);
      CHECK(t.steps[s].skipped == 0u);
      CHECK(t.steps[s].rmse > 0.0);
      CHECK(t.steps[s].mae > 0.0);
      CHECK(t.steps[s].mape > 0.0);
    }
    CHECK(t.runtime_s == 0.0);  // timing disabled
    CHECK(t.nmf_s == 0.0);
  }
}

TEST_CASE("timing mode records wall-clock spans") {
  const World w = make_world();
  ExperimentConfig cfg = quick_config();
  cfg.trial_hours = {8};
  cfg.timing = true;
  const ExperimentResult r = run_experiment(w.store, w.network, w.features, cfg);
  REQUIRE(r.trials.size() == 2u);
  for (const VariantTrial& t : r.trials) CHECK(t.runtime_s > 0.0);
  CHECK(r.trials[0].nmf_s == 0.0);  // the global variant never factorizes
  CHECK(r.trials[1].nmf_s > 0.0);
  CHECK(r.trials[1].nmf_s <= r.trials[1].runtime_s);
}

TEST_CASE("parallel trial execution reproduces the serial bytes") {
  const World w = make_world();
  ExperimentConfig serial = quick_config();
  ExperimentConfig parallel = serial;
  parallel.trial_workers = 4;
  parallel.predictor_workers = 2;

  const ExperimentResult a = run_experiment(w.store, w.network, w.features, serial);
  const ExperimentResult b = run_experiment(w.store, w.network, w.features, parallel);

  ScratchDir dir;
  write_results_csv(dir.file("serial.csv"), a);
  write_results_csv(dir.file("parallel.csv"), b);
  CHECK(slurp(dir.file("serial.csv")) == slurp(dir.file("parallel.csv")));
}

TEST_CASE("a single-hour run reproduces that hour of a longer run") {
  const World w = make_world();
  ExperimentConfig full = quick_config();
  full.trial_hours = {8, 20};
  ExperimentConfig single = full;
  single.trial_hours = {20};

  const ExperimentResult rf = run_experiment(w.store, w.network, w.features, full);
  const ExperimentResult rs = run_experiment(w.store, w.network, w.features, single);
  REQUIRE(rs.trials.size() == 2u);
  // hour-20 trials sit at indices 2,3 of the full run and match exactly
  for (std::size_t k = 0; k < 2; ++k) {
    const VariantTrial& a = rf.trials[2 + k];
    const VariantTrial& b = rs.trials[k];
    REQUIRE(a.trial_hour == 20);
    for (std::size_t s = 0; s < a.steps.size(); ++s) {
      CHECK(a.steps[s].rmse == b.steps[s].rmse);
      CHECK(a.steps[s].mae == b.steps[s].mae);
      CHECK(a.steps[s].mape == b.steps[s].mape);
    }
  }
}

TEST_CASE("significance rows cover the configured pairings") {
  const World w = make_world();
  ExperimentConfig cfg = quick_config();
  // the factor and grid processes never coincide, so five trials give five
  // non-zero differences and a valid signed-rank test
  cfg.variants = {ModelVariant::lgp, ModelVariant::lgr};
  cfg.trial_hours = {8, 9, 10, 11, 12};
  const ExperimentResult r = run_experiment(w.store, w.network, w.features, cfg);

  REQUIRE(r.significance.size() == 3u);  // one pair, three metrics
  const std::vector<std::string> metrics = {"rmse", "mae", "mape"};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.significance[i].pair == "lgp_vs_lgr");
    CHECK(r.significance[i].metric == metrics[i]);
    CHECK(r.significance[i].valid);
    CHECK(r.significance[i].p_value >= 0.0);
    CHECK(r.significance[i].p_value <= 1.0);
    CHECK(r.significance[i].significant == (r.significance[i].p_value < 0.05));
  }

  // a lone variant yields no pairings; too few trials yield invalid rows
  ExperimentConfig lone = quick_config();
  lone.variants = {ModelVariant::gp};
  lone.trial_hours = {8};
  CHECK(run_experiment(w.store, w.network, w.features, lone).significance.empty());

  ExperimentConfig two = quick_config();
  two.trial_hours = {8, 20};
  const ExperimentResult r2 = run_experiment(w.store, w.network, w.features, two);
  REQUIRE(r2.significance.size() == 3u);
  for (const SignificanceRow& row : r2.significance) CHECK_FALSE(row.valid);
}

TEST_CASE("result files carry the documented shapes") {
  const World w = make_world();
  const ExperimentConfig cfg = quick_config();
  const ExperimentResult r = run_experiment(w.store, w.network, w.features, cfg);

  ScratchDir dir;
  write_results_csv(dir.file("results.csv"), r);
  write_summary_csv(dir.file("summary.csv"), r);
  write_significance_csv(dir.file("sig.csv"), r);

  const std::string results = slurp(dir.file("results.csv"));
  CHECK(results.rfind("variant,trial_hour,step,rmse,mae,mape,runtime_s\n", 0) == 0);
  // 4 trials x 2 steps + 2 factorization timing rows + header
  CHECK(count_lines(results) == 4u * 2u + 2u + 1u);
  CHECK(results.find("nmf(lgp),8,0,") != std::string::npos);
  CHECK(results.find("nmf(lgp),20,0,") != std::string::npos);

  const std::string summary = slurp(dir.file("summary.csv"));
  CHECK(summary.rfind("variant,rmse_by_step,rmse_by_trial,mae_by_step,mae_by_trial,"
                      "mape_by_step,mape_by_trial,total_runtime_s,total_nmf_s\n",
                      0) == 0);
  CHECK(count_lines(summary) == 1u + 2u);  // header + one row per variant
  CHECK(summary.find("\ngp,") != std::string::npos);
  CHECK(summary.find("\nlgp,") != std::string::npos);

  const std::string sig = slurp(dir.file("sig.csv"));
  CHECK(sig.rfind("pair,metric,statistic,p_value,significant_at_0.05\n", 0) == 0);
  CHECK(count_lines(sig) == 1u + 3u);
}

TEST_CASE("test day resolution") {
  const World w = make_world();
  ExperimentConfig cfg = quick_config();
  cfg.trial_hours = {8};
  cfg.variants = {ModelVariant::gp};

  // default: the latest weekday in the store (Monday 2014-08-11)
  const ExperimentResult latest = run_experiment(w.store, w.network, w.features, cfg);
  CHECK(latest.test_day == days_from_civil({2014, 8, 11}));
  CHECK(day_type_from_days(latest.test_day) == DayType::weekday);

  // an explicit observed weekday is honored
  cfg.test_day = days_from_civil({2014, 8, 11});
  CHECK(run_experiment(w.store, w.network, w.features, cfg).test_day == cfg.test_day);

  // a day absent from the store (or of the wrong type) is refused
  cfg.test_day = days_from_civil({2014, 8, 9});  // Saturday
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), DataError);
  cfg.test_day = days_from_civil({2015, 1, 1});
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), DataError);
}

TEST_CASE("configuration validation") {
  const World w = make_world();
  ExperimentConfig cfg = quick_config();
  cfg.steps = 0;
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);

  cfg = quick_config();
  cfg.train_fraction = 0.0;
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);
  cfg.train_fraction = 1.5;
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);

  cfg = quick_config();
  cfg.variants = {};
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);

  cfg = quick_config();
  cfg.trial_hours = {24};
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);
  cfg.trial_hours = {-1};
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);

  // the last trial hour must leave room for every step in the day
  cfg = quick_config();
  cfg.trial_hours = {23};
  cfg.steps = 2;
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);

  cfg = quick_config();
  cfg.trial_workers = 0;
  CHECK_THROWS_AS(run_experiment(w.store, w.network, w.features, cfg), ValidationError);

  // interval lengths that do not divide an hour cannot host hourly trials
  const ObservationStore odd(45);
  CHECK_THROWS_AS(run_experiment(odd, w.network, w.features, quick_config()), ValidationError);
}
