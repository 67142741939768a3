#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "solarqm/calendar.hpp"
#include "solarqm/error.hpp"
#include "solarqm/grid.hpp"

namespace solarqm {

/// One variable's daily values on a grid: a [day][pixel] float32 matrix with
/// a missing-value sentinel (NaN by default). Values are stored at file
/// precision; all computation on them is done in double.
class DailyDataset {
public:
  DailyDataset(Grid grid, TimeIndex time, std::string variable_name, std::string units,
               std::vector<float> values,
               float missing_value = std::numeric_limits<float>::quiet_NaN())
      : grid_(std::move(grid)),
        time_(std::move(time)),
        variable_name_(std::move(variable_name)),
        units_(std::move(units)),
        missing_value_(missing_value),
        values_(std::move(values)) {
    if (values_.size() != time_.n_days() * grid_.n_pixels())
      throw InvalidInput("dataset \"" + variable_name_ + "\" has " +
                         std::to_string(values_.size()) + " values, expected " +
                         std::to_string(time_.n_days()) + " days x " +
                         std::to_string(grid_.n_pixels()) + " pixels");
  }

  /// Dataset of the given shape with every cell missing.
  static DailyDataset filled_missing(Grid grid, TimeIndex time, std::string variable_name,
                                     std::string units) {
    const std::size_t n = time.n_days() * grid.n_pixels();
    return DailyDataset(std::move(grid), std::move(time), std::move(variable_name),
                        std::move(units),
                        std::vector<float>(n, std::numeric_limits<float>::quiet_NaN()));
  }

  const Grid& grid() const { return grid_; }
  const TimeIndex& time() const { return time_; }
  const std::string& variable_name() const { return variable_name_; }
  const std::string& units() const { return units_; }
  float missing_value() const { return missing_value_; }
  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

  std::size_t cell(std::size_t day, std::size_t pixel) const {
    return day * grid_.n_pixels() + pixel;
  }
  float value(std::size_t day, std::size_t pixel) const { return values_[cell(day, pixel)]; }
  void set_value(std::size_t day, std::size_t pixel, float v) { values_[cell(day, pixel)] = v; }

  bool is_missing_value(float v) const {
    return std::isnan(missing_value_) ? std::isnan(v) : v == missing_value_;
  }
  bool is_missing(std::size_t day, std::size_t pixel) const {
    return is_missing_value(value(day, pixel));
  }

private:
  Grid grid_;
  TimeIndex time_;
  std::string variable_name_;
  std::string units_;
  float missing_value_;
  std::vector<float> values_;
};

}  // namespace solarqm
