#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>

#include "solarqm/calendar.hpp"

using namespace solarqm;

namespace {

// Independent calendar walk used as the oracle for label sequences: advances
// (year, month, day) one day at a time from its own month-length table.
struct OracleDate {
  int y, m, d;
};

int oracle_month_len(CalendarKind cal, int y, int m) {
  const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (cal == CalendarKind::fixed_360) return 30;
  bool leap = cal == CalendarKind::gregorian && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0));
  if (m == 2 && leap) return 29;
  return table[m - 1];
}

std::vector<OracleDate> oracle_walk(CalendarKind cal, OracleDate start, std::size_t n) {
  std::vector<OracleDate> out;
  OracleDate cur = start;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(cur);
    if (++cur.d > oracle_month_len(cal, cur.y, cur.m)) {
      cur.d = 1;
      if (++cur.m > 12) {
        cur.m = 1;
        ++cur.y;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("fixed_360 year has every month exactly 30 times") {
  TimeIndex t = build_time_index(CalendarKind::fixed_360, {2006, 1, 1}, 360);
  std::map<int, int> month_counts;
  for (std::size_t d = 0; d < t.n_days(); ++d) ++month_counts[t.label(d).month];
  REQUIRE(month_counts.size() == 12);
  for (const auto& [m, n] : month_counts) REQUIRE(n == 30);
}

TEST_CASE("gregorian leap year has 29 February days") {
  TimeIndex t = build_time_index(CalendarKind::gregorian, {2012, 1, 1}, 366);
  int feb = 0;
  for (std::size_t d = 0; d < t.n_days(); ++d)
    if (t.label(d).month == 2) ++feb;
  REQUIRE(feb == 29);
  REQUIRE(t.label(365).month == 12);
  REQUIRE(t.label(365).day == 31);
}

TEST_CASE("noleap labels match the calendar oracle") {
  TimeIndex t = build_time_index(CalendarKind::noleap_365, {2012, 1, 1}, 365);
  const auto oracle = oracle_walk(CalendarKind::noleap_365, {2012, 1, 1}, 365);
  int feb = 0;
  for (std::size_t d = 0; d < t.n_days(); ++d) {
    REQUIRE(t.label(d).year == oracle[d].y);
    REQUIRE(t.label(d).month == oracle[d].m);
    REQUIRE(t.label(d).day == oracle[d].d);
    if (t.label(d).month == 2) ++feb;
  }
  REQUIRE(feb == 28);
}

TEST_CASE("labels match the calendar oracle for random spans") {
  std::mt19937 rng(12345);
  for (int trial = 0; trial < 40; ++trial) {
    const CalendarKind cal =
        std::array{CalendarKind::gregorian, CalendarKind::noleap_365,
                   CalendarKind::fixed_360}[rng() % 3];
    const int y = 1990 + static_cast<int>(rng() % 30);
    const int m = 1 + static_cast<int>(rng() % 12);
    const int d = 1 + static_cast<int>(rng() % oracle_month_len(cal, y, m));
    const std::size_t n = 1 + rng() % 1200;
    TimeIndex t = build_time_index(cal, {y, m, d}, n);
    const auto oracle = oracle_walk(cal, {y, m, d}, n);
    REQUIRE(t.n_days() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CAPTURE(trial, i);
      REQUIRE(t.label(i).year == oracle[i].y);
      REQUIRE(t.label(i).month == oracle[i].m);
      REQUIRE(t.label(i).day == oracle[i].d);
    }
    // day-of-year restarts at 1 each January 1 and never skips
    for (std::size_t i = 0; i < n; ++i) {
      if (t.label(i).month == 1 && t.label(i).day == 1)
        REQUIRE(t.label(i).day_of_year == 1);
      if (i > 0 && t.label(i).year == t.label(i - 1).year)
        REQUIRE(t.label(i).day_of_year == t.label(i - 1).day_of_year + 1);
    }
  }
}

TEST_CASE("invalid start dates are rejected") {
  REQUIRE_THROWS_AS(build_time_index(CalendarKind::gregorian, {2011, 2, 30}, 10), InvalidInput);
  REQUIRE_THROWS_AS(build_time_index(CalendarKind::gregorian, {2011, 2, 29}, 10), InvalidInput);
  REQUIRE_THROWS_AS(build_time_index(CalendarKind::noleap_365, {2012, 2, 29}, 10), InvalidInput);
  REQUIRE_THROWS_AS(build_time_index(CalendarKind::gregorian, {2011, 13, 1}, 10), InvalidInput);
  REQUIRE_THROWS_AS(build_time_index(CalendarKind::gregorian, {2011, 1, 0}, 10), InvalidInput);
  REQUIRE_THROWS_AS(build_time_index(CalendarKind::gregorian, {2011, 1, 1}, 0), InvalidInput);
  // Feb 29/30 exist under fixed_360
  REQUIRE_NOTHROW(build_time_index(CalendarKind::fixed_360, {2011, 2, 30}, 10));
  REQUIRE_NOTHROW(build_time_index(CalendarKind::gregorian, {2012, 2, 29}, 10));
}

TEST_CASE("month_mask selects January of a single gregorian year") {
  TimeIndex t = build_time_index(CalendarKind::gregorian, {2011, 1, 1}, 365);
  const auto mask = month_mask(t, 1);
  REQUIRE(mask.size() == 31);
  for (std::size_t i = 0; i < mask.size(); ++i) REQUIRE(mask[i] == i);
}

TEST_CASE("month_mask pools across years on a fixed_360 index") {
  TimeIndex t = build_time_index(CalendarKind::fixed_360, {2006, 1, 1}, 720);
  const auto mask = month_mask(t, 2);
  REQUIRE(mask.size() == 60);
  const auto oracle = oracle_walk(CalendarKind::fixed_360, {2006, 1, 1}, 720);
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < oracle.size(); ++i)
    if (oracle[i].m == 2) expected.push_back(i);
  REQUIRE(mask == expected);
}

TEST_CASE("month_mask of an absent month is empty") {
  TimeIndex t = build_time_index(CalendarKind::gregorian, {2011, 1, 1}, 90);  // Jan-Mar
  REQUIRE(month_mask(t, 6).empty());
  REQUIRE_THROWS_AS(month_mask(t, 0), InvalidInput);
  REQUIRE_THROWS_AS(month_mask(t, 13), InvalidInput);
}

TEST_CASE("month masks partition the index") {
  std::mt19937 rng(777);
  for (int trial = 0; trial < 25; ++trial) {
    const CalendarKind cal =
        std::array{CalendarKind::gregorian, CalendarKind::noleap_365,
                   CalendarKind::fixed_360}[rng() % 3];
    const int y = 1995 + static_cast<int>(rng() % 20);
    const int m = 1 + static_cast<int>(rng() % 12);
    TimeIndex t = build_time_index(cal, {y, m, 1}, 1 + rng() % 900);
    std::set<std::size_t> all;
    std::size_t total = 0;
    for (int month = 1; month <= 12; ++month) {
      for (std::size_t d : month_mask(t, month)) all.insert(d);
      total += month_mask(t, month).size();
    }
    REQUIRE(total == t.n_days());
    REQUIRE(all.size() == t.n_days());
    REQUIRE(*all.begin() == 0);
    REQUIRE(*all.rbegin() == t.n_days() - 1);
  }
}

TEST_CASE("years and coverage accessors") {
  TimeIndex t = build_time_index(CalendarKind::gregorian, {2001, 7, 1}, 400);
  REQUIRE(t.years() == std::vector<int>{2001, 2002});
  REQUIRE(t.covers_year(2001));
  REQUIRE_FALSE(t.covers_year(2003));
}
