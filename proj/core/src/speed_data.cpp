#include "trafficgp/speed_data.hpp"

#include <algorithm>

#include "trafficgp/csv.hpp"

namespace trafficgp {

ObservationStore::ObservationStore(int interval_minutes) : interval_minutes_(interval_minutes) {
  if (interval_minutes <= 0 || 1440 % interval_minutes != 0) {
    throw ValidationError("interval minutes must divide 1440, got " +
                          std::to_string(interval_minutes));
  }
}

void ObservationStore::add(const std::string& segment_id, long day, int interval,
                           double speed_mph) {
  if (speed_mph < 0.0) {
    throw DataError("negative speed for segment '" + segment_id + "'");
  }
  const int m = intervals_per_day();
  if (interval < 0 || interval >= m) {
    throw DataError("interval out of range for segment '" + segment_id + "'");
  }
  DayRow& row = data_[segment_id][day];
  if (row.sum.empty()) {
    row.sum.assign(static_cast<std::size_t>(m), 0.0);
    row.count.assign(static_cast<std::size_t>(m), 0);
  }
  row.sum[static_cast<std::size_t>(interval)] += speed_mph;
  row.count[static_cast<std::size_t>(interval)] += 1;
  days_.insert(day);
}

void ObservationStore::add_record(const SpeedRecord& r) {
  add(r.segment_id, r.when.day, r.when.minute / interval_minutes_, r.speed_mph);
}

std::vector<std::string> ObservationStore::segments() const {
  std::vector<std::string> out;
  out.reserve(data_.size());
  for (const auto& [id, rows] : data_) out.push_back(id);
  return out;
}

std::vector<long> ObservationStore::days() const {
  return std::vector<long>(days_.begin(), days_.end());
}

std::vector<long> ObservationStore::days(DayType t) const {
  std::vector<long> out;
  for (long d : days_) {
    if (day_type_from_days(d) == t) out.push_back(d);
  }
  return out;
}

std::optional<long> ObservationStore::latest_day(DayType t) const {
  const auto d = days(t);
  if (d.empty()) return std::nullopt;
  return d.back();
}

std::optional<double> ObservationStore::value(const std::string& segment_id, long day,
                                              int interval) const {
  const auto it = data_.find(segment_id);
  if (it == data_.end()) return std::nullopt;
  const auto dit = it->second.find(day);
  if (dit == it->second.end()) return std::nullopt;
  const auto& row = dit->second;
  const auto i = static_cast<std::size_t>(interval);
  if (i >= row.count.size() || row.count[i] == 0) return std::nullopt;
  return row.sum[i] / row.count[i];
}

std::size_t ObservationStore::total_buckets() const {
  std::size_t n = 0;
  for (const auto& [id, rows] : data_) {
    for (const auto& [day, row] : rows) {
      for (int c : row.count) n += (c > 0);
    }
  }
  return n;
}

ObservationStore load_speeds(const std::vector<SpeedRecord>& records, int interval_minutes,
                             const std::set<std::string>& known_segments,
                             std::size_t* skipped_unknown) {
  ObservationStore store(interval_minutes);
  std::size_t skipped = 0;
  for (const auto& r : records) {
    if (!known_segments.count(r.segment_id)) {
      ++skipped;
      continue;
    }
    store.add_record(r);
  }
  if (skipped_unknown) *skipped_unknown = skipped;
  return store;
}

ObservationStore load_speeds_csv(const std::string& path, int interval_minutes,
                                 const RoadNetwork& network, std::size_t* skipped_unknown) {
  CsvReader reader(path, {"segment_id", "timestamp", "speed_mph"});
  ObservationStore store(interval_minutes);
  std::size_t skipped = 0;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (!network.has_segment(f[0])) {
      ++skipped;
      continue;
    }
    const LocalTime when = parse_timestamp(f[1]);
    const double speed = parse_double_field(f[2], "speed_mph");
    if (speed < 0.0) {
      throw DataError(path + ":" + std::to_string(reader.line_number()) + ": negative speed");
    }
    store.add(f[0], when.day, when.minute / interval_minutes, speed);
  }
  if (skipped_unknown) *skipped_unknown = skipped;
  return store;
}

void write_speeds_csv(const std::string& path, const std::vector<SpeedRecord>& records) {
  CsvWriter w(path, {"segment_id", "timestamp", "speed_mph"});
  for (const auto& r : records) {
    w.row({r.segment_id, format_timestamp(r.when), format_double(r.speed_mph)});
  }
  w.close();
}

std::size_t SpeedMatrix::observed_count() const {
  return static_cast<std::size_t>(mask.count());
}

SpeedMatrix SpeedMatrix::subset_rows(const std::vector<std::string>& ids) const {
  std::map<std::string, Eigen::Index> pos;
  for (Eigen::Index i = 0; i < rows(); ++i) pos[segment_index[static_cast<std::size_t>(i)]] = i;
  SpeedMatrix out;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), cols());
  out.mask.resize(static_cast<Eigen::Index>(ids.size()), cols());
  out.segment_index = ids;
  out.interval_minutes = interval_minutes;
  out.day_type = day_type;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = pos.find(ids[i]);
    if (it == pos.end()) throw ValidationError("segment '" + ids[i] + "' not in matrix");
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(it->second);
    out.mask.row(static_cast<Eigen::Index>(i)) = mask.row(it->second);
  }
  return out;
}

SpeedMatrix build_window_matrix(const ObservationStore& store, long test_day, int trial_hour,
                                int window_days, DayType day_type,
                                const std::vector<std::string>& segments) {
  if (trial_hour < 0 || trial_hour > 23) {
    throw ValidationError("trial hour must be in [0, 23], got " + std::to_string(trial_hour));
  }
  if (window_days < 1) throw ValidationError("window must cover at least one day");

  std::vector<long> candidates;
  for (long d : store.days(day_type)) {
    if (d < test_day) candidates.push_back(d);
  }
  if (candidates.size() < static_cast<std::size_t>(window_days)) {
    throw DataError("window needs " + std::to_string(window_days) + " " + to_string(day_type) +
                    " days before " + format_date(test_day) + ", found " +
                    std::to_string(candidates.size()));
  }
  std::vector<long> window(candidates.end() - window_days, candidates.end());

  std::vector<std::string> segs = segments.empty() ? store.segments() : segments;
  if (segs.empty()) throw DataError("no observed segments");

  const int m = store.intervals_per_day();
  const int per_hour = 60 / store.interval_minutes();
  const int cutoff = trial_hour * per_hour;  // last test-day interval included

  SpeedMatrix out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(segs.size()), m);
  out.mask = BoolGrid::Constant(static_cast<Eigen::Index>(segs.size()), m, false);
  out.segment_index = segs;
  out.interval_minutes = store.interval_minutes();
  out.day_type = day_type;

  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (int j = 0; j < m; ++j) {
      double sum = 0.0;
      int n = 0;
      for (long d : window) {
        if (const auto v = store.value(segs[i], d, j)) {
          sum += *v;
          ++n;
        }
      }
      if (j <= cutoff) {
        if (const auto v = store.value(segs[i], test_day, j)) {
          sum += *v;
          ++n;
        }
      }
      if (n > 0) {
        out.values(static_cast<Eigen::Index>(i), j) = sum / n;
        out.mask(static_cast<Eigen::Index>(i), j) = true;
      }
    }
  }

  std::string empty_rows, empty_cols;
  for (Eigen::Index i = 0; i < out.mask.rows(); ++i) {
    if (!out.mask.row(i).any()) {
      if (!empty_rows.empty()) empty_rows += ", ";
      empty_rows += out.segment_index[static_cast<std::size_t>(i)];
    }
  }
  for (Eigen::Index j = 0; j < out.mask.cols(); ++j) {
    if (!out.mask.col(j).any()) {
      if (!empty_cols.empty()) empty_cols += ", ";
      empty_cols += std::to_string(j);
    }
  }
  if (!empty_rows.empty()) {
    throw DataError("cold start: segments with no observations in window: " + empty_rows);
  }
  if (!empty_cols.empty()) {
    throw DataError("cold start: intervals with no observations in window: " + empty_cols);
  }
  return out;
}

}  // namespace trafficgp
