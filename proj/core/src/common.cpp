#include "trafficgp/common.hpp"

#include <cstdio>
#include <cstring>

namespace trafficgp {

std::string to_string(DayType t) {
  return t == DayType::weekday ? "weekday" : "weekend";
}

DayType day_type_from_string(const std::string& s) {
  if (s == "weekday") return DayType::weekday;
  if (s == "weekend") return DayType::weekend;
  throw ValidationError("unknown day type: '" + s + "' (expected weekday or weekend)");
}

long days_from_civil(const CivilDate& d) {
  long y = d.year;
  const unsigned m = static_cast<unsigned>(d.month);
  const unsigned dd = static_cast<unsigned>(d.day);
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

CivilDate civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int weekday_from_days(long z) {
  // 1970-01-01 was a Thursday.
  return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

DayType day_type_from_days(long z) {
  const int w = weekday_from_days(z);
  return (w == 0 || w == 6) ? DayType::weekend : DayType::weekday;
}

LocalTime parse_timestamp(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  char sep = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d", &y, &mo, &d, &sep, &h, &mi) != 6 ||
      (sep != 'T' && sep != 't')) {
    throw DataError("unparseable timestamp: '" + s + "' (expected YYYY-MM-DDTHH:MM)");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) {
    throw DataError("timestamp out of range: '" + s + "'");
  }
  return LocalTime{days_from_civil(CivilDate{y, mo, d}), h * 60 + mi};
}

std::string format_timestamp(const LocalTime& t) {
  const CivilDate c = civil_from_days(t.day);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d", c.year, c.month, c.day,
                t.minute / 60, t.minute % 60);
  return buf;
}

std::string format_date(long day) {
  const CivilDate c = civil_from_days(day);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace trafficgp
