#include "trafficgp/predictor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <utility>

#include "trafficgp/csv.hpp"
#include "trafficgp/rng.hpp"

namespace trafficgp {

namespace {

constexpr std::uint64_t kSampleTag = 0x73616d706c65ULL;
constexpr std::uint64_t kFitTag = 0x666974ULL;

}  // namespace

std::string variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::gp: return "gp";
    case ModelVariant::gp_side: return "gp+";
    case ModelVariant::lgp: return "lgp";
    case ModelVariant::lgp_side: return "lgp+";
    case ModelVariant::lgr: return "lgr";
    case ModelVariant::lgr_side: return "lgr+";
  }
  throw ValidationError("unknown model variant");
}

ModelVariant variant_from_name(const std::string& name) {
  if (name == "gp") return ModelVariant::gp;
  if (name == "gp+") return ModelVariant::gp_side;
  if (name == "lgp") return ModelVariant::lgp;
  if (name == "lgp+") return ModelVariant::lgp_side;
  if (name == "lgr") return ModelVariant::lgr;
  if (name == "lgr+") return ModelVariant::lgr_side;
  throw ValidationError("unknown model variant '" + name + "'");
}

bool variant_uses_side(ModelVariant v) {
  return v == ModelVariant::gp_side || v == ModelVariant::lgp_side || v == ModelVariant::lgr_side;
}

bool variant_is_factor_localized(ModelVariant v) {
  return v == ModelVariant::lgp || v == ModelVariant::lgp_side;
}

bool variant_is_grid_localized(ModelVariant v) {
  return v == ModelVariant::lgr || v == ModelVariant::lgr_side;
}

TrainedPredictor TrainedPredictor::learn(SpeedMatrix data, const RoadNetwork& network,
                                         const FeatureTable& features,
                                         const PredictorConfig& cfg) {
  if (cfg.clusters < 1) throw ValidationError("cluster count must be at least 1");
  if (cfg.t_max < 2) throw ValidationError("t_max must be at least 2");
  if (cfg.min_pool < 2) throw ValidationError("min_pool must be at least 2");
  if (cfg.parallel_workers < 1) throw ValidationError("parallel_workers must be at least 1");
  if (data.rows() == 0 || data.cols() == 0) throw DataError("training matrix is empty");
  if (data.observed_count() < static_cast<std::size_t>(cfg.min_pool)) {
    throw DataError("training matrix holds fewer observations than min_pool");
  }
  for (const std::string& id : data.segment_index) {
    if (!network.has_segment(id)) throw DataError("segment '" + id + "' missing from network");
    if (!features.has(id)) throw DataError("segment '" + id + "' missing from feature table");
  }

  TrainedPredictor p;
  p.cfg_ = cfg;
  p.data_ = std::move(data);
  p.network_ = network;
  p.features_ = features;
  p.intervals_per_day_ = 1440 / p.data_.interval_minutes;

  p.global_pool_.reserve(p.data_.observed_count());
  for (Eigen::Index i = 0; i < p.data_.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.data_.cols(); ++j) {
      if (p.data_.mask(i, j)) {
        p.global_pool_.push_back(
            Triple{static_cast<int>(i), static_cast<int>(j), p.data_.values(i, j)});
      }
    }
  }

  if (variant_is_factor_localized(cfg.variant)) {
    NMFConfig nmf = cfg.nmf;
    nmf.k = cfg.clusters;
    nmf.seed = mix_seed({cfg.seed, 0x6e6d66ULL});
    const auto t0 = std::chrono::steady_clock::now();
    p.fact_ = factorize(p.data_, nmf);
    p.nmf_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto [sc, tc] = normalize_membership(*p.fact_, p.data_.segment_index);
    p.cell_pools_ = localize(p.data_, sc, tc);
    p.nn_.emplace(p.features_.restricted_to(p.data_.segment_index), sc);
    p.spatial_ = std::move(sc);
    p.temporal_ = std::move(tc);
  } else if (variant_is_grid_localized(cfg.variant)) {
    p.grid_ = grid_partition(p.network_, p.data_.segment_index, cfg.clusters);
    p.cell_pools_.assign(static_cast<std::size_t>(p.grid_->n_cells()), {});
    for (const Triple& t : p.global_pool_) {
      const int cell = p.grid_->cell_of.at(p.data_.segment_index[static_cast<std::size_t>(t.row)]);
      p.cell_pools_[static_cast<std::size_t>(cell - 1)].push_back(t);
    }
  } else {
    p.model_for(1, 1);  // the single global process is trained up front
  }
  return p;
}

std::pair<int, int> TrainedPredictor::route(const Query& q) const {
  if (variant_is_factor_localized(cfg_.variant)) {
    // Every query goes through the feature-space nearest-neighbor map, training
    // segments included (a segment with a unique feature row maps to itself).
    const int ci = nn_->map(features_.raw(q.segment_id));
    return {ci, temporal_lookup(q.interval, *temporal_)};
  }
  if (variant_is_grid_localized(cfg_.variant)) {
    return {grid_->cell_for(network_.midpoint(q.segment_id)), 1};
  }
  return {1, 1};
}

const std::vector<Triple>& TrainedPredictor::pool_for(int ci, int cj) const {
  if (ci == 0 && cj == 0) return global_pool_;  // the fallback stream
  if (variant_is_factor_localized(cfg_.variant)) {
    return cell_pools_[static_cast<std::size_t>((ci - 1) * cfg_.clusters + (cj - 1))];
  }
  if (variant_is_grid_localized(cfg_.variant)) {
    return cell_pools_[static_cast<std::size_t>(ci - 1)];
  }
  return global_pool_;
}

GPInput TrainedPredictor::make_input(const std::string& segment_id, long interval) const {
  const Edge& e = network_.edge(segment_id);
  GPInput in;
  in.u = network_.node(e.from);
  in.v = network_.node(e.to);
  const long m = intervals_per_day_;
  in.t = static_cast<double>(((interval % m) + m) % m) / static_cast<double>(m);
  if (variant_uses_side(cfg_.variant)) in.side = features_.side_info(segment_id);
  return in;
}

GPModel TrainedPredictor::fit_cell(int ci, int cj) const {
  const std::vector<Triple>& pool = pool_for(ci, cj);
  const std::uint64_t cell_seed =
      mix_seed({cfg_.seed, static_cast<std::uint64_t>(ci), static_cast<std::uint64_t>(cj)});

  std::vector<const Triple*> chosen;
  chosen.reserve(pool.size());
  if (static_cast<int>(pool.size()) > cfg_.t_max) {
    Rng rng(mix_seed({cell_seed, kSampleTag}));
    for (std::size_t idx : sample_indices(pool.size(), static_cast<std::size_t>(cfg_.t_max), rng)) {
      chosen.push_back(&pool[idx]);
    }
  } else {
    for (const Triple& t : pool) chosen.push_back(&t);
  }

  std::vector<GPInput> inputs;
  inputs.reserve(chosen.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(chosen.size()));
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    inputs.push_back(
        make_input(data_.segment_index[static_cast<std::size_t>(chosen[i]->row)],
                   chosen[i]->interval));
    y[static_cast<Eigen::Index>(i)] = chosen[i]->speed;
  }

  FitOptions opts = cfg_.fit;
  opts.use_side_info = variant_uses_side(cfg_.variant);
  opts.seed = mix_seed({cell_seed, kFitTag});
  return GPModel::fit(std::move(inputs), y, opts);
}

GPModel& TrainedPredictor::model_for(int ci, int cj) {
  const auto key = std::make_pair(ci, cj);
  const auto it = models_.find(key);
  if (it != models_.end()) return it->second;
  auto [pos, inserted] = models_.emplace(key, fit_cell(ci, cj));
  (void)inserted;
  ++fit_count_;
  return pos->second;
}

// Fits every cell the batch will need, spreading the work over
// cfg_.parallel_workers threads. Each cell's computation is self-contained and
// seeded by its own stream, so the models are identical to serial fitting.
void TrainedPredictor::prefit(const std::vector<Query>& queries) {
  std::set<std::pair<int, int>> needed;
  for (const Query& q : queries) {
    if (!network_.has_segment(q.segment_id)) continue;  // predict() raises the error
    if (variant_is_factor_localized(cfg_.variant) && !features_.has(q.segment_id)) continue;
    const auto [ci, cj] = route(q);
    const bool fallback = static_cast<int>(pool_for(ci, cj).size()) < cfg_.min_pool;
    needed.insert(fallback ? std::make_pair(0, 0) : std::make_pair(ci, cj));
  }
  std::vector<std::pair<int, int>> missing;
  for (const auto& key : needed) {
    if (models_.find(key) == models_.end()) missing.push_back(key);
  }
  if (missing.empty()) return;

  std::vector<std::optional<GPModel>> slots(missing.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto work = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= missing.size()) break;
      try {
        slots[i] = fit_cell(missing[i].first, missing[i].second);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(1, cfg_.parallel_workers)), missing.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i + 1 < n_threads; ++i) threads.emplace_back(work);
  work();
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t i = 0; i < missing.size(); ++i) {
    models_.emplace(missing[i], std::move(*slots[i]));
    ++fit_count_;
  }
}

PredictionRecord TrainedPredictor::predict(const Query& q) {
  if (!network_.has_segment(q.segment_id)) {
    throw DataError("segment '" + q.segment_id + "' missing from network");
  }
  if (variant_is_factor_localized(cfg_.variant) && !features_.has(q.segment_id)) {
    throw DataError("segment '" + q.segment_id + "' missing from feature table");
  }
  const auto [ci, cj] = route(q);
  const bool fallback = static_cast<int>(pool_for(ci, cj).size()) < cfg_.min_pool;
  GPModel& model = fallback ? model_for(0, 0) : model_for(ci, cj);

  const Prediction pred = model.predict(make_input(q.segment_id, q.interval));
  PredictionRecord r;
  r.segment_id = q.segment_id;
  r.interval = q.interval;
  r.mean_mph = pred.mean;
  r.variance = pred.variance;
  r.cluster_i = ci;
  r.cluster_j = cj;
  r.fallback = fallback;
  return r;
}

std::vector<PredictionRecord> TrainedPredictor::predict_all(const std::vector<Query>& queries) {
  if (cfg_.parallel_workers > 1) prefit(queries);
  std::vector<PredictionRecord> out;
  out.reserve(queries.size());
  for (const Query& q : queries) out.push_back(predict(q));
  return out;
}

const GPModel* TrainedPredictor::cached_model(int ci, int cj) const {
  const auto it = models_.find(std::make_pair(ci, cj));
  return it == models_.end() ? nullptr : &it->second;
}

void write_predictions_csv(const std::string& path, const std::vector<PredictionRecord>& records) {
  CsvWriter w(path, {"segment_id", "t", "mean_mph", "variance", "cluster_i", "cluster_j",
                     "fallback_flag"});
  for (const PredictionRecord& r : records) {
    w.row({r.segment_id, std::to_string(r.interval), format_double(r.mean_mph),
           format_double(r.variance), std::to_string(r.cluster_i), std::to_string(r.cluster_j),
           r.fallback ? "1" : "0"});
  }
  w.close();
}

}  // namespace trafficgp
