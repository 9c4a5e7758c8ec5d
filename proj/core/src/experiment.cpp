#include "trafficgp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

#include "trafficgp/csv.hpp"
#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;
constexpr std::uint64_t kTrialTag = 0x747269616cULL;

std::vector<int> resolve_hours(const ExperimentConfig& cfg) {
  if (!cfg.trial_hours.empty()) return cfg.trial_hours;
  std::vector<int> hours(24);
  for (int h = 0; h < 24; ++h) hours[static_cast<std::size_t>(h)] = h;
  return hours;
}

int resolve_window(const ExperimentConfig& cfg) {
  if (cfg.window_days > 0) return cfg.window_days;
  return cfg.day_type == DayType::weekday ? 5 : 3;
}

void validate_config(const ExperimentConfig& cfg, const std::vector<int>& hours, int per_hour,
                     int intervals_per_day) {
  if (cfg.variants.empty()) throw ValidationError("no variants requested");
  if (cfg.steps < 1) throw ValidationError("steps must be at least 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1]");
  }
  if (cfg.window_days < 0) throw ValidationError("window days must be non-negative");
  if (cfg.predictor_workers < 1 || cfg.trial_workers < 1) {
    throw ValidationError("worker counts must be at least 1");
  }
  for (int h : hours) {
    if (h < 0 || h > 23) {
      throw ValidationError("trial hour must be in [0, 23], got " + std::to_string(h));
    }
    if (h * per_hour + cfg.steps >= intervals_per_day) {
      throw ValidationError("trial hour " + std::to_string(h) + " with " +
                            std::to_string(cfg.steps) + " steps runs past the end of the day");
    }
  }
}

long resolve_test_day(const ObservationStore& store, const ExperimentConfig& cfg) {
  const std::vector<long> days = store.days(cfg.day_type);
  if (cfg.test_day >= 0) {
    if (!std::binary_search(days.begin(), days.end(), cfg.test_day)) {
      throw DataError("test day " + format_date(cfg.test_day) + " is not an observed " +
                      to_string(cfg.day_type));
    }
    return cfg.test_day;
  }
  if (days.empty()) throw DataError("store holds no " + to_string(cfg.day_type) + " days");
  return days.back();
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0,
                       std::chrono::steady_clock::time_point t1) {
  return std::chrono::duration<double>(t1 - t0).count();
}

// Runs one variant at one trial hour: learn on the window matrix, answer every
// step query in a single batch, then score each step against the test day.
VariantTrial run_variant_trial(const ObservationStore& store, const RoadNetwork& network,
                               const FeatureTable& features, const ExperimentConfig& cfg,
                               ModelVariant variant, int hour, long test_day,
                               const SpeedMatrix& window, const std::vector<std::string>& covered,
                               int per_hour) {
  PredictorConfig pc;
  pc.variant = variant;
  pc.clusters = cfg.clusters;
  pc.t_max = cfg.t_max;
  pc.min_pool = cfg.min_pool;
  pc.parallel_workers = cfg.timing ? 1 : cfg.predictor_workers;
  pc.seed = mix_seed({cfg.seed, kTrialTag, static_cast<std::uint64_t>(hour)});
  pc.nmf = cfg.nmf;
  pc.fit = cfg.fit;

  std::vector<Query> queries;
  queries.reserve(static_cast<std::size_t>(cfg.steps) * covered.size());
  for (int i = 1; i <= cfg.steps; ++i) {
    const long interval = static_cast<long>(hour) * per_hour + i;
    for (const std::string& seg : covered) queries.push_back({seg, interval});
  }

  const auto t0 = std::chrono::steady_clock::now();
  TrainedPredictor predictor = TrainedPredictor::learn(window, network, features, pc);
  const std::vector<PredictionRecord> records = predictor.predict_all(queries);
  const auto t1 = std::chrono::steady_clock::now();

  VariantTrial trial;
  trial.variant = variant;
  trial.trial_hour = hour;
  trial.runtime_s = cfg.timing ? elapsed_seconds(t0, t1) : 0.0;
  trial.nmf_s = cfg.timing ? predictor.nmf_seconds() : 0.0;
  trial.steps.reserve(static_cast<std::size_t>(cfg.steps));

  for (int i = 1; i <= cfg.steps; ++i) {
    const long interval = static_cast<long>(hour) * per_hour + i;
    const std::size_t base = static_cast<std::size_t>(i - 1) * covered.size();
    std::vector<double> y, yhat;
    std::size_t skipped = 0;
    for (std::size_t s = 0; s < covered.size(); ++s) {
      const auto truth = store.value(covered[s], test_day, static_cast<int>(interval));
      if (!truth) {
        ++skipped;
        continue;
      }
      y.push_back(*truth);
      yhat.push_back(records[base + s].mean_mph);
    }
    if (y.empty()) {
      throw DataError("no truth on " + format_date(test_day) + " at interval " +
                      std::to_string(interval) + " for any queried segment");
    }
    const ErrorMetrics m = compute_metrics(y, yhat);
    StepScore score;
    score.step = i;
    score.rmse = m.rmse;
    score.mae = m.mae;
    score.mape = m.mape;
    score.scored = y.size();
    score.skipped = skipped;
    trial.steps.push_back(score);
  }
  return trial;
}

std::vector<double> per_trial_means(const ExperimentResult& result, ModelVariant variant,
                                    double StepScore::* metric) {
  std::vector<double> out;
  for (const VariantTrial& trial : result.trials) {
    if (trial.variant != variant) continue;
    double sum = 0.0;
    for (const StepScore& s : trial.steps) sum += s.*metric;
    out.push_back(sum / static_cast<double>(trial.steps.size()));
  }
  return out;
}

void append_significance(ExperimentResult& result, const ExperimentConfig& cfg, ModelVariant a,
                         ModelVariant b) {
  const bool have_a = std::find(cfg.variants.begin(), cfg.variants.end(), a) != cfg.variants.end();
  const bool have_b = std::find(cfg.variants.begin(), cfg.variants.end(), b) != cfg.variants.end();
  if (!have_a || !have_b) return;
  const std::string pair = std::string(variant_name(a)) + "_vs_" + variant_name(b);

  const std::pair<std::string, double StepScore::*> metrics[] = {
      {"rmse", &StepScore::rmse}, {"mae", &StepScore::mae}, {"mape", &StepScore::mape}};
  for (const auto& [name, member] : metrics) {
    SignificanceRow row;
    row.pair = pair;
    row.metric = name;
    const std::vector<double> va = per_trial_means(result, a, member);
    const std::vector<double> vb = per_trial_means(result, b, member);
    try {
      const WilcoxonResult w = wilcoxon_signed_rank(va, vb);
      row.statistic = w.statistic;
      row.p_value = w.p_value;
      row.significant = w.p_value < 0.05;
      row.valid = true;
    } catch (const DataError&) {
      row.statistic = std::numeric_limits<double>::quiet_NaN();
      row.p_value = std::numeric_limits<double>::quiet_NaN();
      row.significant = false;
      row.valid = false;
    }
    result.significance.push_back(std::move(row));
  }
}

}  // namespace

ExperimentResult run_experiment(const ObservationStore& store, const RoadNetwork& network,
                                const FeatureTable& features, const ExperimentConfig& cfg) {
  if (60 % store.interval_minutes() != 0) {
    throw ValidationError("trial hours need an interval length dividing 60 minutes");
  }
  const int per_hour = 60 / store.interval_minutes();
  const std::vector<int> hours = resolve_hours(cfg);
  validate_config(cfg, hours, per_hour, store.intervals_per_day());

  ExperimentResult result;
  result.test_day = resolve_test_day(store, cfg);

  const std::vector<std::string> covered = store.segments();
  if (covered.empty()) throw DataError("store holds no observed segments");
  for (const std::string& id : covered) {
    if (!network.has_segment(id)) {
      throw DataError("observed segment '" + id + "' missing from network");
    }
    if (!features.has(id)) {
      throw DataError("observed segment '" + id + "' missing from feature table");
    }
  }

  std::vector<std::string> shuffled = covered;
  Rng split_rng(mix_seed({cfg.seed, kSplitTag}));
  shuffle_inplace(shuffled, split_rng);
  const auto n_train = static_cast<std::size_t>(std::clamp<long long>(
      std::llround(cfg.train_fraction * static_cast<double>(shuffled.size())), 1,
      static_cast<long long>(shuffled.size())));
  result.train_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(n_train));
  result.test_ids.assign(shuffled.begin() + static_cast<long>(n_train), shuffled.end());
  std::sort(result.train_ids.begin(), result.train_ids.end());
  std::sort(result.test_ids.begin(), result.test_ids.end());

  const int window_days = resolve_window(cfg);
  const auto run_trial = [&](int hour) {
    const SpeedMatrix window = build_window_matrix(store, result.test_day, hour, window_days,
                                                   cfg.day_type, result.train_ids);
    std::vector<VariantTrial> trials;
    trials.reserve(cfg.variants.size());
    for (ModelVariant v : cfg.variants) {
      trials.push_back(run_variant_trial(store, network, features, cfg, v, hour, result.test_day,
                                         window, covered, per_hour));
    }
    return trials;
  };

  const int workers =
      cfg.timing ? 1 : std::min<int>(cfg.trial_workers, static_cast<int>(hours.size()));
  if (workers <= 1) {
    for (int hour : hours) {
      std::vector<VariantTrial> trials = run_trial(hour);
      for (VariantTrial& t : trials) result.trials.push_back(std::move(t));
    }
  } else {
    std::vector<std::vector<VariantTrial>> slots(hours.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    const auto worker = [&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= hours.size()) return;
        try {
          slots[i] = run_trial(hours[i]);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers - 1));
    for (int i = 1; i < workers; ++i) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    for (std::vector<VariantTrial>& trials : slots) {
      for (VariantTrial& t : trials) result.trials.push_back(std::move(t));
    }
  }

  append_significance(result, cfg, ModelVariant::gp, ModelVariant::lgp);
  append_significance(result, cfg, ModelVariant::gp_side, ModelVariant::lgp_side);
  append_significance(result, cfg, ModelVariant::lgp, ModelVariant::lgr);
  append_significance(result, cfg, ModelVariant::lgp_side, ModelVariant::lgr_side);
  return result;
}

void write_results_csv(const std::string& path, const ExperimentResult& result) {
  CsvWriter w(path, {"variant", "trial_hour", "step", "rmse", "mae", "mape", "runtime_s"});
  for (const VariantTrial& trial : result.trials) {
    const std::string name = variant_name(trial.variant);
    for (const StepScore& s : trial.steps) {
      w.row({name, std::to_string(trial.trial_hour), std::to_string(s.step),
             format_double(s.rmse), format_double(s.mae), format_double(s.mape),
             format_double(trial.runtime_s)});
    }
    if (variant_is_factor_localized(trial.variant)) {
      w.row({"nmf(" + name + ")", std::to_string(trial.trial_hour), "0", format_double(0.0),
             format_double(0.0), format_double(0.0), format_double(trial.nmf_s)});
    }
  }
}

void write_summary_csv(const std::string& path, const ExperimentResult& result) {
  CsvWriter w(path, {"variant", "rmse_by_step", "rmse_by_trial", "mae_by_step", "mae_by_trial",
                     "mape_by_step", "mape_by_trial", "total_runtime_s", "total_nmf_s"});
  std::vector<ModelVariant> seen;
  for (const VariantTrial& trial : result.trials) {
    if (std::find(seen.begin(), seen.end(), trial.variant) == seen.end()) {
      seen.push_back(trial.variant);
    }
  }
  for (ModelVariant v : seen) {
    double step_sums[3] = {0.0, 0.0, 0.0};
    double trial_sums[3] = {0.0, 0.0, 0.0};
    std::size_t n_steps = 0, n_trials = 0;
    double runtime = 0.0, nmf = 0.0;
    for (const VariantTrial& trial : result.trials) {
      if (trial.variant != v) continue;
      double local[3] = {0.0, 0.0, 0.0};
      for (const StepScore& s : trial.steps) {
        local[0] += s.rmse;
        local[1] += s.mae;
        local[2] += s.mape;
      }
      for (int i = 0; i < 3; ++i) {
        step_sums[i] += local[i];
        trial_sums[i] += local[i] / static_cast<double>(trial.steps.size());
      }
      n_steps += trial.steps.size();
      ++n_trials;
      runtime += trial.runtime_s;
      nmf += trial.nmf_s;
    }
    w.row({variant_name(v), format_double(step_sums[0] / static_cast<double>(n_steps)),
           format_double(trial_sums[0] / static_cast<double>(n_trials)),
           format_double(step_sums[1] / static_cast<double>(n_steps)),
           format_double(trial_sums[1] / static_cast<double>(n_trials)),
           format_double(step_sums[2] / static_cast<double>(n_steps)),
           format_double(trial_sums[2] / static_cast<double>(n_trials)), format_double(runtime),
           format_double(nmf)});
  }
}

void write_significance_csv(const std::string& path, const ExperimentResult& result) {
  CsvWriter w(path, {"pair", "metric", "statistic", "p_value", "significant_at_0.05"});
  for (const SignificanceRow& row : result.significance) {
    w.row({row.pair, row.metric, format_double(row.statistic), format_double(row.p_value),
           row.significant ? "1" : "0"});
  }
}

}  // namespace trafficgp
