#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "solarqm/clearsky.hpp"
#include "solarqm/dataset.hpp"
#include "solarqm/quantile.hpp"
#include "solarqm/region.hpp"

namespace solarqm {

namespace detail {

/// Streaming mean / variance accumulator (Welford).
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double sd() const {
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(m2 / static_cast<double>(n - 1));
  }
};

}  // namespace detail

/// Per-month pooled statistics comparing two datasets. Bias follows the
/// observed-minus-model convention: negative means the model overpredicts.
/// sd_ratio is model SD over observed SD (1 = unbiased variability).
struct MonthlyCell {
  bool has_data = false;
  std::size_t n_obs = 0;
  std::size_t n_mod = 0;
  double obs_mean = std::numeric_limits<double>::quiet_NaN();
  double mod_mean = std::numeric_limits<double>::quiet_NaN();
  double obs_sd = std::numeric_limits<double>::quiet_NaN();
  double mod_sd = std::numeric_limits<double>::quiet_NaN();
  double mean_bias = std::numeric_limits<double>::quiet_NaN();  // obs - mod
  double sd_diff = std::numeric_limits<double>::quiet_NaN();    // obs - mod
  double sd_ratio = std::numeric_limits<double>::quiet_NaN();   // mod / obs
};

struct MonthlyStats {
  std::array<MonthlyCell, 12> months{};

  const MonthlyCell& month(int m) const { return months[static_cast<std::size_t>(m - 1)]; }
};

/// Pools every non-missing (day, pixel) cell of each month. When the two
/// datasets share a time index the populations are paired cell-by-cell;
/// otherwise (differing calendars or periods) each dataset pools its own
/// cells independently. An empty year filter means all years.
inline MonthlyStats monthly_stats(const DailyDataset& obs, const DailyDataset& mod,
                                  const std::vector<int>& years = {}) {
  if (!(obs.grid() == mod.grid()))
    throw InvalidInput("monthly stats require a shared grid: " + obs.grid().shape_string() +
                       " vs " + mod.grid().shape_string());
  const std::set<int> wanted(years.begin(), years.end());
  const bool paired = obs.time() == mod.time();
  const std::size_t n_px = obs.grid().n_pixels();

  std::array<detail::RunningStats, 12> obs_acc{}, mod_acc{};
  auto accumulate = [&](const DailyDataset& ds, std::array<detail::RunningStats, 12>& acc,
                        const DailyDataset* pair_with) {
    for (std::size_t d = 0; d < ds.time().n_days(); ++d) {
      const DayLabel& l = ds.time().label(d);
      if (!wanted.empty() && !wanted.count(l.year)) continue;
      auto& a = acc[static_cast<std::size_t>(l.month - 1)];
      for (std::size_t p = 0; p < n_px; ++p) {
        const float v = ds.value(d, p);
        if (ds.is_missing_value(v)) continue;
        if (pair_with && pair_with->is_missing(d, p)) continue;
        a.add(static_cast<double>(v));
      }
    }
  };
  accumulate(obs, obs_acc, paired ? &mod : nullptr);
  accumulate(mod, mod_acc, paired ? &obs : nullptr);

  MonthlyStats out;
  for (int m = 1; m <= 12; ++m) {
    MonthlyCell& cell = out.months[static_cast<std::size_t>(m - 1)];
    const auto& oa = obs_acc[static_cast<std::size_t>(m - 1)];
    const auto& ma = mod_acc[static_cast<std::size_t>(m - 1)];
    cell.n_obs = oa.n;
    cell.n_mod = ma.n;
    if (oa.n == 0 || ma.n == 0) continue;
    cell.has_data = true;
    cell.obs_mean = oa.mean;
    cell.mod_mean = ma.mean;
    cell.obs_sd = oa.sd();
    cell.mod_sd = ma.sd();
    cell.mean_bias = oa.mean - ma.mean;
    cell.sd_diff = cell.obs_sd - cell.mod_sd;
    cell.sd_ratio = (cell.obs_sd > 0.0) ? cell.mod_sd / cell.obs_sd
                                        : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// Per-pixel field on a grid with NaN as the missing marker; carries the
/// years it was averaged over.
class BiasField {
public:
  BiasField(Grid grid, std::vector<double> values, std::vector<int> years)
      : grid_(std::move(grid)), values_(std::move(values)), years_(std::move(years)) {
    if (values_.size() != grid_.n_pixels())
      throw InvalidInput("bias field has " + std::to_string(values_.size()) +
                         " values for grid " + grid_.shape_string());
  }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<int>& years() const { return years_; }
  double value(std::size_t pixel) const { return values_[pixel]; }
  bool is_missing(std::size_t pixel) const { return std::isnan(values_[pixel]); }

private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<int> years_;
};

/// Percent bias of the mean over every non-missing day in the requested
/// years: 100 (obs - mod) / obs per pixel. Negative values mean the model
/// overpredicts. Pixels with no data or nonpositive observed mean are
/// missing. An empty year list means all years.
inline BiasField annual_percent_bias(const DailyDataset& obs, const DailyDataset& mod,
                                     const std::vector<int>& years_in = {}) {
  if (!(obs.grid() == mod.grid()))
    throw InvalidInput("percent bias requires a shared grid: " + obs.grid().shape_string() +
                       " vs " + mod.grid().shape_string());
  const std::vector<int> years = normalize_years(years_in);
  for (const DailyDataset* ds : {&obs, &mod}) {
    std::vector<int> have = ds->time().years();
    for (int y : years)
      if (!std::binary_search(have.begin(), have.end(), y))
        throw InvalidInput("dataset \"" + ds->variable_name() + "\" does not cover year " +
                           std::to_string(y));
  }
  const std::set<int> wanted(years.begin(), years.end());
  const std::size_t n_px = obs.grid().n_pixels();

  auto pixel_means = [&](const DailyDataset& ds) {
    std::vector<double> sum(n_px, 0.0);
    std::vector<std::size_t> cnt(n_px, 0);
    for (std::size_t d = 0; d < ds.time().n_days(); ++d) {
      if (!wanted.empty() && !wanted.count(ds.time().label(d).year)) continue;
      for (std::size_t p = 0; p < n_px; ++p) {
        const float v = ds.value(d, p);
        if (ds.is_missing_value(v)) continue;
        sum[p] += static_cast<double>(v);
        ++cnt[p];
      }
    }
    std::vector<double> mean(n_px, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t p = 0; p < n_px; ++p)
      if (cnt[p] > 0) mean[p] = sum[p] / static_cast<double>(cnt[p]);
    return mean;
  };

  const std::vector<double> obs_mean = pixel_means(obs);
  const std::vector<double> mod_mean = pixel_means(mod);
  std::vector<double> out(n_px, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p = 0; p < n_px; ++p) {
    if (std::isnan(obs_mean[p]) || std::isnan(mod_mean[p])) continue;
    if (!(obs_mean[p] > 0.0)) continue;
    out[p] = 100.0 * (obs_mean[p] - mod_mean[p]) / obs_mean[p];
  }
  std::vector<int> field_years = years;
  if (field_years.empty()) {
    std::set<int> all;
    for (int y : obs.time().years()) all.insert(y);
    for (int y : mod.time().years()) all.insert(y);
    field_years.assign(all.begin(), all.end());
  }
  return BiasField(obs.grid(), std::move(out), std::move(field_years));
}

/// Pixel-wise arithmetic mean of several fields. A pixel missing in any
/// input is missing in the result, so the averaged populations stay aligned.
inline BiasField average_bias_fields(const std::vector<BiasField>& fields) {
  if (fields.empty()) throw InvalidInput("field average requires at least one field");
  const Grid& grid = fields.front().grid();
  std::set<int> years;
  for (const BiasField& f : fields) {
    if (!(f.grid() == grid)) throw InvalidInput("field average requires a shared grid");
    years.insert(f.years().begin(), f.years().end());
  }
  const std::size_t n_px = grid.n_pixels();
  std::vector<double> out(n_px, 0.0);
  for (std::size_t p = 0; p < n_px; ++p) {
    double sum = 0.0;
    bool missing = false;
    for (const BiasField& f : fields) {
      if (f.is_missing(p)) {
        missing = true;
        break;
      }
      sum += f.value(p);
    }
    out[p] = missing ? std::numeric_limits<double>::quiet_NaN()
                     : sum / static_cast<double>(fields.size());
  }
  return BiasField(grid, std::move(out), std::vector<int>(years.begin(), years.end()));
}

struct RegionAssignment {
  std::vector<int> region_of;  // per pixel
};

/// Assigns each pixel the region whose centroid is nearest in raw (lat, lon)
/// degree space; ties go to the smallest region_id.
inline RegionAssignment assign_regions(const Grid& grid, const RegionTable& table) {
  table.validate();
  std::vector<RegionRow> rows = table.rows;
  std::sort(rows.begin(), rows.end(),
            [](const RegionRow& a, const RegionRow& b) { return a.region_id < b.region_id; });
  RegionAssignment out;
  out.region_of.resize(grid.n_pixels());
  for (std::size_t p = 0; p < grid.n_pixels(); ++p) {
    const double lat = grid.lat_of(grid.row_of(p));
    const double lon = grid.lon_of(grid.col_of(p));
    double best = std::numeric_limits<double>::infinity();
    int best_id = rows.front().region_id;
    for (const RegionRow& r : rows) {
      const double dlat = lat - r.centroid_lat;
      const double dlon = lon - r.centroid_lon;
      const double d2 = dlat * dlat + dlon * dlon;
      if (d2 < best) {
        best = d2;
        best_id = r.region_id;
      }
    }
    out.region_of[p] = best_id;
  }
  return out;
}

struct RegionSummaryRow {
  int region_id;
  std::string region_name;
  std::size_t count = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
};

/// Per-region statistics of the non-missing pixels of a field. Regions with
/// no pixels get a count-0 row. Rows are ordered by region_id.
inline std::vector<RegionSummaryRow> region_summary(const BiasField& field,
                                                    const RegionAssignment& assignment,
                                                    const RegionTable& table) {
  if (!(assignment.region_of.size() == field.grid().n_pixels()))
    throw InvalidInput("region assignment does not match the field's grid");
  std::vector<RegionRow> rows = table.rows;
  std::sort(rows.begin(), rows.end(),
            [](const RegionRow& a, const RegionRow& b) { return a.region_id < b.region_id; });

  std::vector<RegionSummaryRow> out;
  out.reserve(rows.size());
  const ProbabilitySet quartiles(std::vector<double>{0.25, 0.5, 0.75});
  for (const RegionRow& r : rows) {
    RegionSummaryRow row;
    row.region_id = r.region_id;
    row.region_name = r.region_name;
    std::vector<double> vals;
    for (std::size_t p = 0; p < field.grid().n_pixels(); ++p)
      if (assignment.region_of[p] == r.region_id && !field.is_missing(p))
        vals.push_back(field.value(p));
    row.count = vals.size();
    if (!vals.empty()) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      row.mean = sum / static_cast<double>(vals.size());
      row.min = *std::min_element(vals.begin(), vals.end());
      row.max = *std::max_element(vals.begin(), vals.end());
      const std::vector<double> q = empirical_quantiles(vals, quartiles);
      row.q25 = q[0];
      row.median = q[1];
      row.q75 = q[2];
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Pixel-wise 2x2 factorial decomposition of four bias fields into overall
/// mean, the two main effects and the interaction:
///   mu        = (b11 + b21 + b12 + b22) / 4
///   alpha_gcm = (b12 - b11 + b22 - b21) / 4
///   alpha_rcm = (b21 + b22 - b11 - b12) / 4
///   gamma     = (b11 - b12 + b22 - b21) / 4
/// Columns index the GCM factor, rows the RCM factor. The decomposition
/// reconstructs the inputs exactly:
///   b11 = mu - alpha_gcm - alpha_rcm + gamma, and so on.
struct FanovaComponents {
  Grid grid;
  std::vector<double> mu;
  std::vector<double> alpha_rcm;
  std::vector<double> alpha_gcm;
  std::vector<double> gamma;
};

inline FanovaComponents fanova(const BiasField& b11, const BiasField& b12, const BiasField& b21,
                               const BiasField& b22) {
  const Grid& grid = b11.grid();
  for (const BiasField* f : {&b12, &b21, &b22})
    if (!(f->grid() == grid))
      throw InvalidInput("fanova inputs are on mismatched grids: " + grid.shape_string() +
                         " vs " + f->grid().shape_string());
  const std::size_t n_px = grid.n_pixels();
  FanovaComponents out{grid,
                       std::vector<double>(n_px), std::vector<double>(n_px),
                       std::vector<double>(n_px), std::vector<double>(n_px)};
  for (std::size_t p = 0; p < n_px; ++p) {
    if (b11.is_missing(p) || b12.is_missing(p) || b21.is_missing(p) || b22.is_missing(p)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out.mu[p] = out.alpha_rcm[p] = out.alpha_gcm[p] = out.gamma[p] = nan;
      continue;
    }
    const double v11 = b11.value(p), v12 = b12.value(p);
    const double v21 = b21.value(p), v22 = b22.value(p);
    out.mu[p] = (v11 + v21 + v12 + v22) / 4.0;
    out.alpha_gcm[p] = (v12 - v11 + v22 - v21) / 4.0;
    out.alpha_rcm[p] = (v21 + v22 - v11 - v12) / 4.0;
    out.gamma[p] = (v11 - v12 + v22 - v21) / 4.0;
  }
  return out;
}

/// Distribution summary of unclamped clearsky-index values, for checking how
/// often data exceeds the clearsky reference.
struct KcDistribution {
  std::size_t count = 0;
  double min = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  double frac_exceeding_one = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline KcDistribution summarize_kc(std::vector<double> kc) {
  KcDistribution out;
  out.count = kc.size();
  if (kc.empty()) return out;
  std::size_t over = 0;
  for (double v : kc)
    if (v > 1.0) ++over;
  out.frac_exceeding_one = static_cast<double>(over) / static_cast<double>(kc.size());
  out.min = *std::min_element(kc.begin(), kc.end());
  out.max = *std::max_element(kc.begin(), kc.end());
  const std::vector<double> q =
      empirical_quantiles(std::move(kc), ProbabilitySet(std::vector<double>{0.25, 0.5, 0.75}));
  out.q25 = q[0];
  out.median = q[1];
  out.q75 = q[2];
  return out;
}

}  // namespace detail

/// kc against a cell-wise clearsky reference dataset (shared grid and time).
inline KcDistribution kc_distribution(const DailyDataset& ds, const DailyDataset& cs_reference) {
  if (!(ds.grid() == cs_reference.grid()))
    throw InvalidInput("kc distribution requires a shared grid");
  if (!(ds.time() == cs_reference.time()))
    throw InvalidInput("kc distribution against a dataset reference requires a shared time index");
  std::vector<double> kc;
  for (std::size_t d = 0; d < ds.time().n_days(); ++d)
    for (std::size_t p = 0; p < ds.grid().n_pixels(); ++p) {
      const float v = ds.value(d, p);
      const float cs = cs_reference.value(d, p);
      if (ds.is_missing_value(v) || cs_reference.is_missing_value(cs)) continue;
      if (!(cs > 0.0f)) continue;
      kc.push_back(static_cast<double>(v) / static_cast<double>(cs));
    }
  return detail::summarize_kc(std::move(kc));
}

/// kc against a clearsky climatology (slot lookup under the dataset's
/// calendar).
inline KcDistribution kc_distribution(const DailyDataset& ds, const ClearskyClimatology& clim) {
  if (!(ds.grid() == clim.grid()))
    throw InvalidInput("kc distribution requires a shared grid");
  std::vector<double> kc;
  for (std::size_t d = 0; d < ds.time().n_days(); ++d) {
    const DayLabel& l = ds.time().label(d);
    const int slot = climatology_slot(ds.time().calendar(), l.month, l.day);
    for (std::size_t p = 0; p < ds.grid().n_pixels(); ++p) {
      const float v = ds.value(d, p);
      if (ds.is_missing_value(v)) continue;
      kc.push_back(static_cast<double>(v) / clim.value(p, slot));
    }
  }
  return detail::summarize_kc(std::move(kc));
}

}  // namespace solarqm
