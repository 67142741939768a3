#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "solarqm/dataset.hpp"

namespace solarqm {

/// Clamp margin applied to the clearsky index before the logit transform.
/// The physical cap is at 1; the margin keeps the logit finite and handles
/// zero daily averages symmetrically at the lower end.
struct ClearskyIndexParams {
  double epsilon = 1e-6;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5))
      throw InvalidInput("clearsky clamp epsilon must lie in (0, 0.5), got " +
                         std::to_string(epsilon));
  }
};

/// Climatology slot for a calendar day.
///
/// Slots 1..365 follow the standard non-leap year; slot 366 is reserved for
/// the gregorian Feb 29, so every other date lands in the same slot in leap
/// and non-leap years. fixed_360 dates map to the slot of the same gregorian
/// month, with the day clipped to that month's standard length.
inline int climatology_slot(CalendarKind cal, int month, int day) {
  if (cal == CalendarKind::gregorian && month == 2 && day == 29) return 366;
  static constexpr std::array<int, 12> kCumulative = {0,   31,  59,  90,  120, 151,
                                                      181, 212, 243, 273, 304, 334};
  const int len = kStandardMonthLengths[static_cast<std::size_t>(month - 1)];
  return kCumulative[static_cast<std::size_t>(month - 1)] + std::min(day, len);
}

/// Per-pixel mean clearsky GHI by climatology slot (366 slots per pixel).
/// Every value is strictly positive.
class ClearskyClimatology {
public:
  static constexpr std::size_t kSlots = 366;

  ClearskyClimatology(Grid grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.n_pixels() * kSlots)
      throw InvalidInput("climatology has " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(grid_.n_pixels()) + " x 366");
    for (double v : values_)
      if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidInput("climatology contains a nonpositive or non-finite clearsky value");
  }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

  /// slot is 1-based (1..366).
  double value(std::size_t pixel, int slot) const {
    return values_[pixel * kSlots + static_cast<std::size_t>(slot - 1)];
  }

private:
  Grid grid_;
  std::vector<double> values_;
};

/// Mean clearsky GHI per (pixel, slot) across every occurrence of that slot
/// in the inputs. Inputs must share one grid, cover whole calendar years and
/// use an observation-side calendar (gregorian or noleap). If no leap year
/// occurs, slot 366 falls back to the mean of the two adjacent slots.
inline ClearskyClimatology build_climatology(const std::vector<DailyDataset>& inputs) {
  if (inputs.empty()) throw InvalidInput("climatology requires at least one input dataset");
  const Grid& grid = inputs.front().grid();
  const std::size_t n_px = grid.n_pixels();
  std::vector<double> sums(n_px * ClearskyClimatology::kSlots, 0.0);
  std::vector<std::size_t> counts(ClearskyClimatology::kSlots, 0);

  for (const DailyDataset& ds : inputs) {
    if (!(ds.grid() == grid))
      throw InvalidInput("climatology inputs are on mismatched grids: " + grid.shape_string() +
                         " vs " + ds.grid().shape_string());
    const TimeIndex& time = ds.time();
    if (time.calendar() == CalendarKind::fixed_360)
      throw InvalidInput("climatology inputs must use a gregorian or noleap_365 calendar");
    const DayLabel& first = time.label(0);
    const DayLabel& last = time.label(time.n_days() - 1);
    if (first.month != 1 || first.day != 1 || last.month != 12 || last.day != 31)
      throw InvalidInput("climatology input \"" + ds.variable_name() +
                         "\" does not cover whole calendar years");
    for (std::size_t d = 0; d < time.n_days(); ++d) {
      const DayLabel& l = time.label(d);
      const std::size_t slot0 =
          static_cast<std::size_t>(climatology_slot(time.calendar(), l.month, l.day) - 1);
      ++counts[slot0];
      for (std::size_t p = 0; p < n_px; ++p) {
        const double v = ds.value(d, p);
        if (!(v > 0.0) || !std::isfinite(v))
          throw InvalidInput("clearsky input \"" + ds.variable_name() +
                             "\" has a nonpositive or non-finite value at day " +
                             std::to_string(d) + ", pixel " + std::to_string(p));
        sums[p * ClearskyClimatology::kSlots + slot0] += v;
      }
    }
  }

  std::vector<double> mean(n_px * ClearskyClimatology::kSlots, 0.0);
  for (std::size_t p = 0; p < n_px; ++p)
    for (std::size_t s = 0; s < ClearskyClimatology::kSlots; ++s)
      if (counts[s] > 0)
        mean[p * ClearskyClimatology::kSlots + s] =
            sums[p * ClearskyClimatology::kSlots + s] / static_cast<double>(counts[s]);
  if (counts[365] == 0) {
    // no leap year among the inputs: interpolate Feb 29 from Feb 28 / Mar 1
    for (std::size_t p = 0; p < n_px; ++p) {
      const double* row = mean.data() + p * ClearskyClimatology::kSlots;
      mean[p * ClearskyClimatology::kSlots + 365] = 0.5 * (row[58] + row[59]);
    }
  }
  return ClearskyClimatology(grid, std::move(mean));
}

/// clamp(ghi / cs, epsilon, 1 - epsilon). The cap at 1 keeps model data at or
/// below the clearsky maximum; the margin keeps the logit finite.
inline double clearsky_index(double ghi, double cs, const ClearskyIndexParams& params = {}) {
  params.validate();
  if (!std::isfinite(cs) || !(cs > 0.0))
    throw InvalidInput("clearsky value must be positive and finite, got " + std::to_string(cs));
  if (!std::isfinite(ghi) || ghi < 0.0)
    throw InvalidInput("GHI must be nonnegative and finite, got " + std::to_string(ghi));
  return std::clamp(ghi / cs, params.epsilon, 1.0 - params.epsilon);
}

/// ln(kc / (1 - kc)); requires kc in the open unit interval.
inline double logit(double kc) {
  if (!(kc > 0.0) || !(kc < 1.0))
    throw InvalidInput("logit requires a value in (0, 1), got " + std::to_string(kc));
  return std::log(kc / (1.0 - kc));
}

/// Inverse of logit; maps any finite real into (0, 1). Overflow-safe on both
/// tails.
inline double logistic(double t) {
  if (!std::isfinite(t)) throw InvalidInput("logistic requires a finite value");
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Climatology value for each day of `time` at `pixel`, using the slot
/// mapping above.
inline std::vector<double> climatology_series(const ClearskyClimatology& clim,
                                              const TimeIndex& time, std::size_t pixel) {
  if (pixel >= clim.grid().n_pixels())
    throw InvalidInput("pixel " + std::to_string(pixel) + " out of range for grid " +
                       clim.grid().shape_string());
  std::vector<double> out(time.n_days());
  for (std::size_t d = 0; d < time.n_days(); ++d) {
    const DayLabel& l = time.label(d);
    out[d] = clim.value(pixel, climatology_slot(time.calendar(), l.month, l.day));
  }
  return out;
}

}  // namespace solarqm
