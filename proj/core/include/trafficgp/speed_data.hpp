#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"
#include "trafficgp/road_network.hpp"

namespace trafficgp {

struct SpeedRecord {
  std::string segment_id;
  LocalTime when;
  double speed_mph = 0.0;
};

// Speed observations bucketed by (segment, calendar day, interval-of-day).
// Multiple readings falling into one bucket are averaged.
class ObservationStore {
 public:
  explicit ObservationStore(int interval_minutes);

  int interval_minutes() const { return interval_minutes_; }
  int intervals_per_day() const { return 1440 / interval_minutes_; }

  void add(const std::string& segment_id, long day, int interval, double speed_mph);
  void add_record(const SpeedRecord& r);

  // Sorted ids of segments with at least one observation.
  std::vector<std::string> segments() const;
  // Sorted days present (any segment), optionally restricted by day type.
  std::vector<long> days() const;
  std::vector<long> days(DayType t) const;
  std::optional<long> latest_day(DayType t) const;

  std::optional<double> value(const std::string& segment_id, long day, int interval) const;
  std::size_t total_buckets() const;

 private:
  struct DayRow {
    std::vector<double> sum;
    std::vector<int> count;
  };
  int interval_minutes_;
  std::map<std::string, std::map<long, DayRow>> data_;
  std::set<long> days_;
};

// Parse + bucket speed records. Records for ids absent from `known_segments`
// are skipped and counted in `skipped_unknown`. Negative speeds and malformed
// timestamps raise DataError.
ObservationStore load_speeds(const std::vector<SpeedRecord>& records, int interval_minutes,
                             const std::set<std::string>& known_segments,
                             std::size_t* skipped_unknown = nullptr);

// CSV columns: segment_id,timestamp,speed_mph (timestamp YYYY-MM-DDTHH:MM).
ObservationStore load_speeds_csv(const std::string& path, int interval_minutes,
                                 const RoadNetwork& network,
                                 std::size_t* skipped_unknown = nullptr);
void write_speeds_csv(const std::string& path, const std::vector<SpeedRecord>& records);

// Segment-by-interval matrix of mean observed speeds over a sliding window.
struct SpeedMatrix {
  Eigen::MatrixXd values;                    // N x M
  BoolGrid mask;                             // true where observed
  std::vector<std::string> segment_index;    // row -> segment id
  int interval_minutes = 5;
  DayType day_type = DayType::weekday;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  std::size_t observed_count() const;
  SpeedMatrix subset_rows(const std::vector<std::string>& ids) const;
};

// Builds the matrix a model trains on at trial hour `trial_hour` of `test_day`:
// the last `window_days` days of matching type strictly before the test day,
// plus the test day's observations up to and including interval
// trial_hour*60/interval_minutes. Cell (i,j) is the mean of the contributing
// per-day bucket means; the mask records which cells ever got a contribution.
// Throws DataError if fewer than `window_days` matching days exist or if any
// row or column ends up with no observations (cold start).
SpeedMatrix build_window_matrix(const ObservationStore& store, long test_day, int trial_hour,
                                int window_days, DayType day_type,
                                const std::vector<std::string>& segments = {});

}  // namespace trafficgp
