#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trafficgp/csv.hpp"
#include "trafficgp/experiment.hpp"
#include "trafficgp/features.hpp"
#include "trafficgp/localization.hpp"
#include "trafficgp/metrics.hpp"
#include "trafficgp/nmf.hpp"
#include "trafficgp/predictor.hpp"
#include "trafficgp/road_network.hpp"
#include "trafficgp/speed_data.hpp"
#include "trafficgp/synthetic.hpp"

using namespace trafficgp;

namespace {

struct DataArgs {
  std::string network;
  std::string speeds;
  int interval_minutes = 5;
};

void add_data_args(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--network", a.network, "Road network CSV")->required();
  cmd->add_option("--speeds", a.speeds, "Speed records CSV")->required();
  cmd->add_option("--interval-minutes", a.interval_minutes, "Interval length in minutes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

struct WindowArgs {
  std::string day_type = "weekday";
  int window_days = 0;  // 0 means the day-type default (5 weekday, 3 weekend)
  std::string test_day;  // empty means the latest day of the chosen type
};

void add_window_args(CLI::App* cmd, WindowArgs& w) {
  cmd->add_option("--day-type", w.day_type, "weekday or weekend")
      ->check(CLI::IsMember({"weekday", "weekend"}))
      ->capture_default_str();
  cmd->add_option("--window", w.window_days,
                  "Days in the sliding window (0 = 5 weekday / 3 weekend)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--test-day", w.test_day, "Test day YYYY-MM-DD (default: latest matching day)");
}

struct Loaded {
  RoadNetwork network;
  ObservationStore store;
  FeatureTable features;
};

Loaded load_inputs(const DataArgs& a) {
  RoadNetwork network = RoadNetwork::load_csv(a.network);
  std::size_t skipped = 0;
  ObservationStore store = load_speeds_csv(a.speeds, a.interval_minutes, network, &skipped);
  if (skipped > 0) {
    std::fprintf(stderr, "note: skipped %zu records for segments absent from the network\n",
                 skipped);
  }
  FeatureTable features = FeatureTable::derive(network);
  return Loaded{std::move(network), std::move(store), std::move(features)};
}

long resolve_day(const ObservationStore& store, const std::string& text, DayType type) {
  const std::vector<long> days = store.days(type);
  if (days.empty()) throw DataError("no observed " + to_string(type) + " days");
  if (text.empty()) return days.back();
  const long day = parse_timestamp(text + "T00:00").day;
  if (!std::binary_search(days.begin(), days.end(), day)) {
    throw DataError("test day " + text + " is not an observed " + to_string(type));
  }
  return day;
}

int resolve_window(const WindowArgs& w, DayType type) {
  if (w.window_days > 0) return w.window_days;
  return type == DayType::weekday ? 5 : 3;
}

SpeedMatrix build_matrix(const Loaded& in, const WindowArgs& w, int trial_hour) {
  const DayType type = day_type_from_string(w.day_type);
  const long day = resolve_day(in.store, w.test_day, type);
  return build_window_matrix(in.store, day, trial_hour, resolve_window(w, type), type);
}

// "results.csv" + "_summary" -> "results_summary.csv"
std::string sibling_path(const std::string& path, const std::string& suffix) {
  const std::size_t slash = path.find_last_of("/\\");
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + suffix;
  }
  return path.substr(0, dot) + suffix + path.substr(dot);
}

void setup_synth(CLI::App& app) {
  auto* cmd = app.add_subcommand("synth", "Generate a planted-structure synthetic data set");
  cmd->set_config("--config");
  auto spec = std::make_shared<SynthSpec>();
  auto network_path = std::make_shared<std::string>("network.csv");
  auto speeds_path = std::make_shared<std::string>("speeds.csv");
  auto start_date = std::make_shared<std::string>("2014-08-04");
  auto random_attrs = std::make_shared<bool>(false);

  cmd->add_option("--network", *network_path, "Output network CSV")->capture_default_str();
  cmd->add_option("--speeds", *speeds_path, "Output speeds CSV")->capture_default_str();
  cmd->add_option("--grid-rows", spec->grid_rows, "Lattice rows")->capture_default_str();
  cmd->add_option("--grid-cols", spec->grid_cols, "Lattice columns")->capture_default_str();
  cmd->add_option("--segments", spec->n_segments, "Directed segment count")
      ->capture_default_str();
  cmd->add_option("--interval-minutes", spec->interval_minutes, "Interval length in minutes")
      ->capture_default_str();
  cmd->add_option("--spatial-regimes", spec->spatial_regimes, "Planted spatial regimes")
      ->capture_default_str();
  cmd->add_option("--temporal-regimes", spec->temporal_regimes, "Planted temporal regimes")
      ->capture_default_str();
  cmd->add_option("--regime-means", spec->regime_means,
                  "Mean mph per (spatial, temporal) regime, spatial-major "
                  "(default: 20 + 12*index)")
      ->delimiter(',');
  cmd->add_option("--noise-std", spec->noise_std, "Gaussian noise std (mph)")
      ->capture_default_str();
  cmd->add_option("--diurnal-amplitude", spec->diurnal_amplitude, "Daily sine amplitude (mph)")
      ->capture_default_str();
  cmd->add_option("--missing-rate", spec->missing_rate, "Independent drop probability")
      ->capture_default_str();
  cmd->add_option("--regime-missing-rates", spec->regime_missing_rates,
                  "Per-temporal-regime drop probabilities overriding --missing-rate")
      ->delimiter(',');
  cmd->add_option("--temporal-layout", spec->temporal_regime_of,
                  "Explicit temporal regime per interval (default: contiguous blocks)")
      ->delimiter(',');
  cmd->add_option("--days", spec->days, "Calendar days to generate")->capture_default_str();
  cmd->add_option("--start-date", *start_date, "First day YYYY-MM-DD")->capture_default_str();
  cmd->add_flag("--random-attributes", *random_attrs,
                "Draw edge attributes at random instead of tying them to the spatial regime");
  cmd->add_option("--seed", spec->seed, "Master seed")->capture_default_str();

  cmd->callback([spec, network_path, speeds_path, start_date, random_attrs] {
    spec->start_date = civil_from_days(parse_timestamp(*start_date + "T00:00").day);
    spec->regime_attributes = !*random_attrs;
    if (spec->regime_means.empty()) {
      const int n = spec->spatial_regimes * spec->temporal_regimes;
      for (int i = 0; i < n; ++i) spec->regime_means.push_back(20.0 + 12.0 * i);
    }
    const SyntheticData data = generate_synthetic(*spec);
    write_synthetic(data, *network_path, *speeds_path);
    std::printf("wrote %zu segments to %s and %zu records to %s\n", data.segment_ids.size(),
                network_path->c_str(), data.speeds.size(), speeds_path->c_str());
  });
}

void setup_select_k(CLI::App& app) {
  auto* cmd = app.add_subcommand("select-k", "Cross-validated choice of the cluster count");
  cmd->set_config("--config");
  auto data = std::make_shared<DataArgs>();
  auto window = std::make_shared<WindowArgs>();
  auto k_min = std::make_shared<int>(1);
  auto k_max = std::make_shared<int>(10);
  auto folds = std::make_shared<int>(10);
  auto trial_hour = std::make_shared<int>(23);
  auto lambda = std::make_shared<double>(100.0);
  auto iters = std::make_shared<int>(200);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto out = std::make_shared<std::string>("k_selection.csv");
  auto folds_out = std::make_shared<std::string>();

  add_data_args(cmd, *data);
  add_window_args(cmd, *window);
  cmd->add_option("--trial-hour", *trial_hour, "Test-day cutoff hour for the matrix")
      ->check(CLI::Range(0, 23))
      ->capture_default_str();
  cmd->add_option("--k-min", *k_min, "Smallest K")->capture_default_str();
  cmd->add_option("--k-max", *k_max, "Largest K")->capture_default_str();
  cmd->add_option("--folds", *folds, "Cross-validation folds")->capture_default_str();
  cmd->add_option("--lambda", *lambda, "Sparsity weight")->capture_default_str();
  cmd->add_option("--iters", *iters, "Coordinate-descent cycles")->capture_default_str();
  cmd->add_option("--seed", *seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", *out, "Summary CSV path")->capture_default_str();
  cmd->add_option("--folds-out", *folds_out, "Per-fold CSV path (default: <out>_folds)");

  cmd->callback([data, window, k_min, k_max, folds, trial_hour, lambda, iters, seed, out,
                 folds_out] {
    const Loaded in = load_inputs(*data);
    const SpeedMatrix m = build_matrix(in, *window, *trial_hour);
    NMFConfig base;
    base.lambda = *lambda;
    base.max_iters = *iters;
    const KSelectionReport report =
        select_k(m.values, m.mask, *k_min, *k_max, *folds, *seed, base);
    const std::string folds_path =
        folds_out->empty() ? sibling_path(*out, "_folds") : *folds_out;
    write_k_selection_csv(*out, folds_path, report);
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
      std::printf("K=%d mean_r2=%s std_r2=%s%s\n", report.ks[i],
                  format_double(report.mean_r2[i]).c_str(),
                  format_double(report.std_r2[i]).c_str(),
                  report.ks[i] == report.chosen_k ? "  <- chosen" : "");
    }
  });
}

void setup_factorize(CLI::App& app) {
  auto* cmd = app.add_subcommand("factorize", "Factorize the training matrix");
  cmd->set_config("--config");
  auto data = std::make_shared<DataArgs>();
  auto window = std::make_shared<WindowArgs>();
  auto cfg = std::make_shared<NMFConfig>();
  cfg->k = 5;
  auto trial_hour = std::make_shared<int>(23);
  auto out = std::make_shared<std::string>("factorization");

  add_data_args(cmd, *data);
  add_window_args(cmd, *window);
  cmd->add_option("--trial-hour", *trial_hour, "Test-day cutoff hour for the matrix")
      ->check(CLI::Range(0, 23))
      ->capture_default_str();
  cmd->add_option("--k", cfg->k, "Factor rank")->capture_default_str();
  cmd->add_option("--lambda", cfg->lambda, "Sparsity weight")->capture_default_str();
  cmd->add_option("--iters", cfg->max_iters, "Coordinate-descent cycles")->capture_default_str();
  cmd->add_option("--rel-tol", cfg->rel_tol, "Early-stop tolerance on relative residual change")
      ->capture_default_str();
  cmd->add_option("--seed", cfg->seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", *out, "Output directory")->capture_default_str();

  cmd->callback([data, window, cfg, trial_hour, out] {
    const Loaded in = load_inputs(*data);
    const SpeedMatrix m = build_matrix(in, *window, *trial_hour);
    const Factorization f = factorize(m, *cfg);
    save_factorization(*out, f);
    std::printf("factorized %ldx%ld (%zu observed) at K=%d in %d cycles; residual %s\n",
                static_cast<long>(m.rows()), static_cast<long>(m.cols()), m.observed_count(),
                cfg->k, f.iterations, format_double(f.residual_trace.back()).c_str());
  });
}

struct PredictorArgs {
  std::string model = "lgp";
  int clusters = 5;
  int t_max = 600;
  int min_pool = 5;
  double nmf_lambda = 100.0;
  int nmf_iters = 200;
  std::uint64_t seed = 0;
  int workers = 1;
};

void add_predictor_args(CLI::App* cmd, PredictorArgs& p) {
  cmd->add_option("--model", p.model, "Variant: gp, gp+, lgp, lgp+, lgr, lgr+")
      ->check(CLI::IsMember({"gp", "gp+", "lgp", "lgp+", "lgr", "lgr+"}))
      ->capture_default_str();
  cmd->add_option("--clusters", p.clusters, "Cluster count K")->capture_default_str();
  cmd->add_option("--t-max", p.t_max, "Training-set size cap per process")
      ->capture_default_str();
  cmd->add_option("--min-pool", p.min_pool, "Smallest local pool before global fallback")
      ->capture_default_str();
  cmd->add_option("--nmf-lambda", p.nmf_lambda, "Factorization sparsity weight")
      ->capture_default_str();
  cmd->add_option("--nmf-iters", p.nmf_iters, "Factorization cycles")->capture_default_str();
  cmd->add_option("--seed", p.seed, "Master seed")->capture_default_str();
  cmd->add_option("--workers", p.workers, "Concurrent local fits")->capture_default_str();
}

PredictorConfig predictor_config(const PredictorArgs& p) {
  PredictorConfig cfg;
  cfg.variant = variant_from_name(p.model);
  cfg.clusters = p.clusters;
  cfg.t_max = p.t_max;
  cfg.min_pool = p.min_pool;
  cfg.parallel_workers = p.workers;
  cfg.seed = p.seed;
  cfg.nmf.lambda = p.nmf_lambda;
  cfg.nmf.max_iters = p.nmf_iters;
  return cfg;
}

void setup_train(CLI::App& app) {
  auto* cmd = app.add_subcommand("train", "Train one variant and export its structure");
  cmd->set_config("--config");
  auto data = std::make_shared<DataArgs>();
  auto window = std::make_shared<WindowArgs>();
  auto pred = std::make_shared<PredictorArgs>();
  auto trial_hour = std::make_shared<int>(23);
  auto out = std::make_shared<std::string>("model");

  add_data_args(cmd, *data);
  add_window_args(cmd, *window);
  add_predictor_args(cmd, *pred);
  cmd->add_option("--trial-hour", *trial_hour, "Test-day cutoff hour for the matrix")
      ->check(CLI::Range(0, 23))
      ->capture_default_str();
  cmd->add_option("--out", *out, "Output directory")->capture_default_str();

  cmd->callback([data, window, pred, trial_hour, out] {
    const Loaded in = load_inputs(*data);
    const SpeedMatrix m = build_matrix(in, *window, *trial_hour);
    const PredictorConfig cfg = predictor_config(*pred);
    const TrainedPredictor model = TrainedPredictor::learn(m, in.network, in.features, cfg);

    std::filesystem::create_directories(*out);
    if (const Factorization* f = model.factorization()) {
      save_factorization(*out + "/factorization", *f);
    }
    if (const SpatialClustering* sc = model.spatial()) {
      CsvWriter w(*out + "/spatial_labels.csv", {"segment_id", "cluster"});
      for (std::size_t i = 0; i < m.segment_index.size(); ++i) {
        w.row({m.segment_index[i], std::to_string(sc->labels[i])});
      }
    }
    if (const TemporalClustering* tc = model.temporal()) {
      CsvWriter w(*out + "/temporal_labels.csv", {"interval", "cluster"});
      for (std::size_t j = 0; j < tc->labels.size(); ++j) {
        w.row({std::to_string(j), std::to_string(tc->labels[j])});
      }
    }
    if (const GridClustering* gc = model.grid()) {
      CsvWriter w(*out + "/grid_labels.csv", {"segment_id", "cell"});
      for (const auto& [id, cell] : gc->cell_of) {
        w.row({id, std::to_string(cell)});
      }
    }
    std::printf("trained %s on %ldx%ld (%zu observed); fits so far %d, factorization %ss\n",
                pred->model.c_str(), static_cast<long>(m.rows()), static_cast<long>(m.cols()),
                m.observed_count(), model.fit_count(),
                format_double(model.nmf_seconds()).c_str());
  });
}

void setup_predict(CLI::App& app) {
  auto* cmd = app.add_subcommand("predict", "Train a variant and answer step-ahead queries");
  cmd->set_config("--config");
  auto data = std::make_shared<DataArgs>();
  auto window = std::make_shared<WindowArgs>();
  auto pred = std::make_shared<PredictorArgs>();
  auto trial_hour = std::make_shared<int>(8);
  auto steps = std::make_shared<int>(6);
  auto out = std::make_shared<std::string>("predictions.csv");

  add_data_args(cmd, *data);
  add_window_args(cmd, *window);
  add_predictor_args(cmd, *pred);
  cmd->add_option("--t", *trial_hour, "Trial hour: data up to t, queries at t+1..t+steps")
      ->check(CLI::Range(0, 23))
      ->capture_default_str();
  cmd->add_option("--steps", *steps, "Intervals ahead to predict")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", *out, "Predictions CSV path")->capture_default_str();

  cmd->callback([data, window, pred, trial_hour, steps, out] {
    const Loaded in = load_inputs(*data);
    if (60 % in.store.interval_minutes() != 0) {
      throw ValidationError("trial hours need an interval length dividing 60 minutes");
    }
    const int per_hour = 60 / in.store.interval_minutes();
    if (*trial_hour * per_hour + *steps >= in.store.intervals_per_day()) {
      throw ValidationError("hour " + std::to_string(*trial_hour) + " with " +
                            std::to_string(*steps) + " steps runs past the end of the day");
    }
    const SpeedMatrix m = build_matrix(in, *window, *trial_hour);
    const PredictorConfig cfg = predictor_config(*pred);
    TrainedPredictor model = TrainedPredictor::learn(m, in.network, in.features, cfg);

    std::vector<Query> queries;
    for (int i = 1; i <= *steps; ++i) {
      const long interval = static_cast<long>(*trial_hour) * per_hour + i;
      for (const std::string& seg : m.segment_index) queries.push_back({seg, interval});
    }
    const std::vector<PredictionRecord> records = model.predict_all(queries);
    write_predictions_csv(*out, records);
    std::printf("wrote %zu predictions to %s (%d local fits)\n", records.size(), out->c_str(),
                model.fit_count());
  });
}

void setup_evaluate(CLI::App& app) {
  auto* cmd = app.add_subcommand("evaluate", "Run the full benchmark over trial hours");
  cmd->set_config("--config");
  auto data = std::make_shared<DataArgs>();
  auto cfg = std::make_shared<ExperimentConfig>();
  auto variants = std::make_shared<std::vector<std::string>>(
      std::vector<std::string>{"gp", "gp+", "lgp", "lgp+", "lgr", "lgr+"});
  auto day_type = std::make_shared<std::string>("weekday");
  auto test_day = std::make_shared<std::string>();
  auto no_timing = std::make_shared<bool>(false);
  auto out = std::make_shared<std::string>("results.csv");
  auto summary_out = std::make_shared<std::string>();
  auto significance_out = std::make_shared<std::string>();

  add_data_args(cmd, *data);
  cmd->add_option("--variants", *variants, "Variants to benchmark")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--trial-hours", cfg->trial_hours, "Trial hours (default: 0..23)")
      ->delimiter(',');
  cmd->add_option("--steps", cfg->steps, "Intervals ahead per trial")->capture_default_str();
  cmd->add_option("--day-type", *day_type, "weekday or weekend")
      ->check(CLI::IsMember({"weekday", "weekend"}))
      ->capture_default_str();
  cmd->add_option("--window", cfg->window_days,
                  "Days in the sliding window (0 = 5 weekday / 3 weekend)")
      ->capture_default_str();
  cmd->add_option("--test-day", *test_day, "Test day YYYY-MM-DD (default: latest matching day)");
  cmd->add_option("--train-fraction", cfg->train_fraction, "Covered-segment share to train on")
      ->capture_default_str();
  cmd->add_option("--clusters", cfg->clusters, "Cluster count K")->capture_default_str();
  cmd->add_option("--t-max", cfg->t_max, "Training-set size cap per process")
      ->capture_default_str();
  cmd->add_option("--min-pool", cfg->min_pool, "Smallest local pool before global fallback")
      ->capture_default_str();
  cmd->add_option("--nmf-lambda", cfg->nmf.lambda, "Factorization sparsity weight")
      ->capture_default_str();
  cmd->add_option("--nmf-iters", cfg->nmf.max_iters, "Factorization cycles")
      ->capture_default_str();
  cmd->add_option("--seed", cfg->seed, "Master seed")->capture_default_str();
  cmd->add_flag("--no-timing", *no_timing,
                "Skip wall-clock measurement (zeroed runtimes) and allow parallelism");
  cmd->add_option("--predictor-workers", cfg->predictor_workers,
                  "Concurrent local fits per trial (no-timing runs only)")
      ->capture_default_str();
  cmd->add_option("--trial-workers", cfg->trial_workers,
                  "Concurrent trials (no-timing runs only)")
      ->capture_default_str();
  cmd->add_option("--out", *out, "Results CSV path")->capture_default_str();
  cmd->add_option("--summary-out", *summary_out, "Summary CSV path (default: <out>_summary)");
  cmd->add_option("--significance-out", *significance_out,
                  "Significance CSV path (default: <out>_significance)");

  cmd->callback([data, cfg, variants, day_type, test_day, no_timing, out, summary_out,
                 significance_out] {
    const Loaded in = load_inputs(*data);
    cfg->variants.clear();
    for (const std::string& name : *variants) cfg->variants.push_back(variant_from_name(name));
    cfg->day_type = day_type_from_string(*day_type);
    cfg->test_day = test_day->empty() ? -1 : parse_timestamp(*test_day + "T00:00").day;
    cfg->timing = !*no_timing;

    const ExperimentResult result = run_experiment(in.store, in.network, in.features, *cfg);

    write_results_csv(*out, result);
    const std::string summary_path =
        summary_out->empty() ? sibling_path(*out, "_summary") : *summary_out;
    const std::string significance_path =
        significance_out->empty() ? sibling_path(*out, "_significance") : *significance_out;
    write_summary_csv(summary_path, result);
    write_significance_csv(significance_path, result);

    std::printf("test day %s; %zu train / %zu test segments; %zu variant-trials\n",
                format_date(result.test_day).c_str(), result.train_ids.size(),
                result.test_ids.size(), result.trials.size());
    for (const SignificanceRow& row : result.significance) {
      if (!row.valid) {
        std::printf("%s %s: not enough non-zero differences\n", row.pair.c_str(),
                    row.metric.c_str());
        continue;
      }
      std::printf("%s %s: statistic=%s p=%s%s\n", row.pair.c_str(), row.metric.c_str(),
                  format_double(row.statistic).c_str(), format_double(row.p_value).c_str(),
                  row.significant ? "  (significant at 0.05)" : "");
    }
    std::printf("wrote %s, %s, %s\n", out->c_str(), summary_path.c_str(),
                significance_path.c_str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic speed prediction with factorization-localized Gaussian processes"};
  app.require_subcommand(1);
  setup_synth(app);
  setup_select_k(app);
  setup_factorize(app);
  setup_train(app);
  setup_predict(app);
  setup_evaluate(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
