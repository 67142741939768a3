#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "solarqm/error.hpp"

namespace solarqm {

/// Sorted, deduplicated copy of a year list.
inline std::vector<int> normalize_years(std::vector<int> years) {
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  return years;
}

/// Day-count conventions used by climate model archives.
enum class CalendarKind { gregorian, noleap_365, fixed_360 };

inline const char* to_string(CalendarKind cal) {
  switch (cal) {
    case CalendarKind::gregorian: return "gregorian";
    case CalendarKind::noleap_365: return "noleap_365";
    case CalendarKind::fixed_360: return "fixed_360";
  }
  return "unknown";
}

inline CalendarKind calendar_from_string(const std::string& name) {
  if (name == "gregorian") return CalendarKind::gregorian;
  if (name == "noleap_365") return CalendarKind::noleap_365;
  if (name == "fixed_360") return CalendarKind::fixed_360;
  throw InvalidInput("unknown calendar \"" + name +
                     "\" (expected gregorian, noleap_365 or fixed_360)");
}

inline bool is_gregorian_leap(int year) {
  return year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
}

/// Month lengths of the standard (non-leap) year; shared by gregorian and
/// noleap_365.
inline constexpr std::array<int, 12> kStandardMonthLengths = {31, 28, 31, 30, 31, 30,
                                                              31, 31, 30, 31, 30, 31};

inline int days_in_month(CalendarKind cal, int year, int month) {
  if (month < 1 || month > 12)
    throw InvalidInput("month " + std::to_string(month) + " out of range 1..12");
  if (cal == CalendarKind::fixed_360) return 30;
  if (month == 2 && cal == CalendarKind::gregorian && is_gregorian_leap(year)) return 29;
  return kStandardMonthLengths[static_cast<std::size_t>(month - 1)];
}

inline int days_in_year(CalendarKind cal, int year) {
  switch (cal) {
    case CalendarKind::fixed_360: return 360;
    case CalendarKind::noleap_365: return 365;
    case CalendarKind::gregorian: return is_gregorian_leap(year) ? 366 : 365;
  }
  return 0;
}

struct Date {
  int year = 1;
  int month = 1;  // 1..12
  int day = 1;    // 1..days_in_month

  friend bool operator==(const Date&, const Date&) = default;
};

/// Calendar labels of one daily step.
struct DayLabel {
  std::int32_t year;
  std::int32_t month;        // 1..12
  std::int32_t day;          // day of month
  std::int32_t day_of_year;  // 1-based; Feb 29 counts, later days shift

  friend bool operator==(const DayLabel&, const DayLabel&) = default;
};

/// Contiguous run of calendar days starting at `start`, one step per day
/// under the stated calendar. Immutable after construction.
class TimeIndex {
public:
  TimeIndex(CalendarKind cal, Date start, std::size_t n_days)
      : cal_(cal), start_(start) {
    if (n_days < 1) throw InvalidInput("time index requires n_days >= 1");
    if (start.month < 1 || start.month > 12 || start.day < 1 ||
        start.day > days_in_month(cal, start.year, start.month))
      throw InvalidInput("start date " + format_date(start) + " is invalid under the " +
                         std::string(to_string(cal)) + " calendar");
    labels_.reserve(n_days);
    int y = start.year, m = start.month, d = start.day;
    int doy = d;
    for (int mm = 1; mm < m; ++mm) doy += days_in_month(cal, y, mm);
    for (std::size_t i = 0; i < n_days; ++i) {
      labels_.push_back({y, m, d, doy});
      ++d;
      ++doy;
      if (d > days_in_month(cal, y, m)) {
        d = 1;
        ++m;
        if (m > 12) {
          m = 1;
          ++y;
          doy = 1;
        }
      }
    }
  }

  CalendarKind calendar() const { return cal_; }
  const Date& start() const { return start_; }
  std::size_t n_days() const { return labels_.size(); }
  const DayLabel& label(std::size_t day) const { return labels_[day]; }

  /// Distinct years covered, ascending.
  std::vector<int> years() const {
    std::vector<int> out;
    for (const auto& l : labels_)
      if (out.empty() || out.back() != l.year) out.push_back(l.year);
    return out;
  }

  bool covers_year(int year) const {
    return year >= labels_.front().year && year <= labels_.back().year;
  }

  friend bool operator==(const TimeIndex& a, const TimeIndex& b) {
    return a.cal_ == b.cal_ && a.start_ == b.start_ && a.labels_.size() == b.labels_.size();
  }

  static std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
  }

private:
  CalendarKind cal_;
  Date start_;
  std::vector<DayLabel> labels_;
};

inline TimeIndex build_time_index(CalendarKind cal, Date start, std::size_t n_days) {
  return TimeIndex(cal, start, n_days);
}

/// All day indices whose month label equals `month`, chronological.
inline std::vector<std::size_t> month_mask(const TimeIndex& time, int month) {
  if (month < 1 || month > 12)
    throw InvalidInput("month " + std::to_string(month) + " out of range 1..12");
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < time.n_days(); ++d)
    if (time.label(d).month == month) out.push_back(d);
  return out;
}

}  // namespace solarqm
