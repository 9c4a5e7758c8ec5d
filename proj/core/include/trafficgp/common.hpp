#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace trafficgp {

// Error taxonomy; the CLI maps these onto distinct exit codes.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class DayType { weekday, weekend };

std::string to_string(DayType t);
DayType day_type_from_string(const std::string& s);

// Proleptic-Gregorian day arithmetic (days since 1970-01-01).
struct CivilDate {
  int year = 1970;
  int month = 1;
  int day = 1;
};

long days_from_civil(const CivilDate& d);
CivilDate civil_from_days(long z);
// 0 = Sunday ... 6 = Saturday.
int weekday_from_days(long z);
DayType day_type_from_days(long z);

// Minute-resolution local timestamp "YYYY-MM-DDTHH:MM".
struct LocalTime {
  long day = 0;      // days since epoch
  int minute = 0;    // minute of day, [0, 1440)
};

LocalTime parse_timestamp(const std::string& s);
std::string format_timestamp(const LocalTime& t);
std::string format_date(long day);

// Shortest-round-trip-safe decimal rendering (17 significant digits).
std::string format_double(double v);

}  // namespace trafficgp
