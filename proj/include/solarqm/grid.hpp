#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "solarqm/error.hpp"

namespace solarqm {

/// Regular lat/lon raster. Pixels are numbered row-major with latitude rows
/// outer: pixel = row * n_lon + col.
class Grid {
public:
  Grid(std::vector<double> lat, std::vector<double> lon)
      : lat_(std::move(lat)), lon_(std::move(lon)) {
    if (lat_.empty() || lon_.empty())
      throw InvalidInput("grid requires at least one latitude and one longitude");
    check_axis(lat_, "latitude");
    check_axis(lon_, "longitude");
  }

  std::size_t n_lat() const { return lat_.size(); }
  std::size_t n_lon() const { return lon_.size(); }
  std::size_t n_pixels() const { return lat_.size() * lon_.size(); }

  double lat_of(std::size_t row) const { return lat_[row]; }
  double lon_of(std::size_t col) const { return lon_[col]; }
  const std::vector<double>& lat() const { return lat_; }
  const std::vector<double>& lon() const { return lon_; }

  std::size_t pixel(std::size_t row, std::size_t col) const { return row * n_lon() + col; }
  std::size_t row_of(std::size_t pixel) const { return pixel / n_lon(); }
  std::size_t col_of(std::size_t pixel) const { return pixel % n_lon(); }

  std::string shape_string() const {
    return std::to_string(n_lat()) + "x" + std::to_string(n_lon());
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  static void check_axis(const std::vector<double>& v, const char* name) {
    for (double x : v)
      if (!std::isfinite(x)) throw InvalidInput(std::string(name) + " axis has a non-finite value");
    if (v.size() < 2) return;
    const bool ascending = v[1] > v[0];
    for (std::size_t i = 1; i < v.size(); ++i) {
      const bool ok = ascending ? v[i] > v[i - 1] : v[i] < v[i - 1];
      if (!ok) throw InvalidInput(std::string(name) + " axis is not strictly monotone");
    }
  }

  std::vector<double> lat_;
  std::vector<double> lon_;
};

/// The pixel itself plus its grid-adjacent neighbors (Chebyshev distance 1),
/// truncated at grid edges. Ascending pixel index order.
inline std::vector<std::size_t> tile_neighbors(const Grid& grid, std::size_t pixel) {
  if (pixel >= grid.n_pixels())
    throw InvalidInput("pixel " + std::to_string(pixel) + " out of range for grid " +
                       grid.shape_string());
  const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(grid.row_of(pixel));
  const std::ptrdiff_t col = static_cast<std::ptrdiff_t>(grid.col_of(pixel));
  const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(grid.n_lat());
  const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(grid.n_lon());
  std::vector<std::size_t> out;
  out.reserve(9);
  for (std::ptrdiff_t r = row - 1; r <= row + 1; ++r) {
    if (r < 0 || r >= nr) continue;
    for (std::ptrdiff_t c = col - 1; c <= col + 1; ++c) {
      if (c < 0 || c >= nc) continue;
      out.push_back(grid.pixel(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
    }
  }
  return out;
}

}  // namespace solarqm
