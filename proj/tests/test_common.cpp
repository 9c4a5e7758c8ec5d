#include <algorithm>
#include <array>
#include <cstdlib>

#include "doctest.h"
#include "trafficgp/common.hpp"
#include "trafficgp/rng.hpp"

using namespace trafficgp;

TEST_CASE("civil date round trip") {
  CHECK(days_from_civil({1970, 1, 1}) == 0);
  CHECK(days_from_civil({1970, 1, 2}) == 1);
  CHECK(days_from_civil({1969, 12, 31}) == -1);
  for (long z : {-1000L, 0L, 1L, 59L, 60L, 16285L, 20000L, 738000L}) {
    const CivilDate c = civil_from_days(z);
    CHECK(days_from_civil(c) == z);
  }
  // Leap-year boundary: 2000-02-29 exists, 2001 shifts by 366.
  CHECK(days_from_civil({2000, 3, 1}) - days_from_civil({2000, 2, 29}) == 1);
  CHECK(days_from_civil({2001, 1, 1}) - days_from_civil({2000, 1, 1}) == 366);
}

TEST_CASE("weekday anchor and day types") {
  // 1970-01-01 was a Thursday.
  CHECK(weekday_from_days(0) == 4);
  // 2014-08-04 was a Monday; 2014-08-09 a Saturday, 2014-08-10 a Sunday.
  const long monday = days_from_civil({2014, 8, 4});
  CHECK(weekday_from_days(monday) == 1);
  CHECK(day_type_from_days(monday) == DayType::weekday);
  CHECK(day_type_from_days(monday + 4) == DayType::weekday);
  CHECK(day_type_from_days(monday + 5) == DayType::weekend);
  CHECK(day_type_from_days(monday + 6) == DayType::weekend);
  CHECK(to_string(DayType::weekday) == "weekday");
  CHECK(day_type_from_string("weekend") == DayType::weekend);
  CHECK_THROWS_AS(day_type_from_string("holiday"), ValidationError);
}

TEST_CASE("timestamp parse and format") {
  const LocalTime t = parse_timestamp("2014-08-04T08:03");
  CHECK(t.day == days_from_civil({2014, 8, 4}));
  CHECK(t.minute == 8 * 60 + 3);
  CHECK(format_timestamp(t) == "2014-08-04T08:03");
  CHECK(format_date(t.day) == "2014-08-04");
  CHECK(parse_timestamp("1970-01-01T00:00").day == 0);
  CHECK_THROWS_AS(parse_timestamp("2014-08-04 08:03"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2014-13-04T08:03"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2014-08-04T24:00"), DataError);
  CHECK_THROWS_AS(parse_timestamp("garbage"), DataError);
}

TEST_CASE("double formatting round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-7, 1e300, 12345.6789, 0.0}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("seed mixing separates streams") {
  const std::uint64_t a = mix_seed({7, 1});
  const std::uint64_t b = mix_seed({7, 2});
  const std::uint64_t c = mix_seed({8, 1});
  CHECK(a != b);
  CHECK(a != c);
  CHECK(mix_seed({7, 1}) == a);
}

TEST_CASE("uniform double stays in the unit interval") {
  Rng g(123);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform_double(g);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform below respects its bound") {
  Rng g(5);
  for (int i = 0; i < 1000; ++i) {
    CHECK(uniform_below(g, 7) < 7);
  }
}

TEST_CASE("sampling without replacement is uniform") {
  // 10 000 single-element draws from a 5-element pool: each index lands
  // within 2000 +- 200 (chi-square bound at the 1% level).
  std::array<int, 5> counts{};
  for (int rep = 0; rep < 10000; ++rep) {
    Rng g(mix_seed({42, static_cast<std::uint64_t>(rep)}));
    const std::vector<std::size_t> picked = sample_indices(5, 1, g);
    REQUIRE(picked.size() == 1);
    ++counts[picked[0]];
  }
  for (int c : counts) {
    CHECK(c >= 1800);
    CHECK(c <= 2200);
  }
}

TEST_CASE("sampling caps at the pool size and keeps elements distinct") {
  Rng g(9);
  const std::vector<std::size_t> all = sample_indices(100, 600, g);
  CHECK(all.size() == 100);
  const std::vector<std::size_t> some = sample_indices(1000, 600, g);
  CHECK(some.size() == 600);
  std::vector<std::size_t> sorted = some;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(sorted.back() < 1000);
}

TEST_CASE("shuffle is deterministic per seed") {
  std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> b = a;
  Rng g1(77), g2(77);
  shuffle_inplace(a, g1);
  shuffle_inplace(b, g2);
  CHECK(a == b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}
