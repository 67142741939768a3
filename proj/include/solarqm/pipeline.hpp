#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "solarqm/clearsky.hpp"
#include "solarqm/dataset.hpp"
#include "solarqm/transfer.hpp"

namespace solarqm {

namespace detail {

inline unsigned resolve_threads(unsigned requested, std::size_t n_items) {
  unsigned t = requested;
  if (t == 0) {
    t = std::thread::hardware_concurrency();
    if (t == 0) t = 1;
  }
  if (static_cast<std::size_t>(t) > n_items) t = static_cast<unsigned>(n_items);
  return std::max(1u, t);
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks write to
/// disjoint state, so results are identical to a sequential run for any
/// thread count. The error surfaced is the one from the lowest chunk, which
/// matches what a sequential run would hit first.
template <typename Body>
inline void parallel_chunks(std::size_t n, unsigned threads, Body&& body) {
  threads = resolve_threads(threads, n);
  if (threads <= 1 || n == 0) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(n, static_cast<std::size_t>(t) * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&body, &errors, t, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct FitConfig {
  ProbabilitySet probs = ProbabilitySet::centiles();
  double epsilon = 1e-6;
  std::vector<int> train_years;
  std::size_t min_sample = 90;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const {
    ClearskyIndexParams{epsilon}.validate();
    if (train_years.empty()) throw InvalidInput("fit requires at least one training year");
    const std::size_t floor = (probs.size() + 1) / 2;
    if (min_sample < floor)
      throw InvalidInput("minimum sample size " + std::to_string(min_sample) +
                         " is below half the knot count (" + std::to_string(floor) + ")");
  }
};

/// Fitted quantile map: one transfer function per (pixel, month), plus the
/// configuration it was fitted with.
class QuantileMapModel {
public:
  QuantileMapModel(Grid grid, ProbabilitySet probs, double epsilon, std::size_t min_sample,
                   std::vector<int> train_years, std::string climatology_ref,
                   std::vector<TransferFunction> transfers)
      : grid_(std::move(grid)),
        probs_(std::move(probs)),
        epsilon_(epsilon),
        min_sample_(min_sample),
        train_years_(std::move(train_years)),
        climatology_ref_(std::move(climatology_ref)),
        transfers_(std::move(transfers)) {
    if (transfers_.size() != grid_.n_pixels() * 12)
      throw InvalidInput("model holds " + std::to_string(transfers_.size()) +
                         " transfer functions, expected one per (pixel, month) = " +
                         std::to_string(grid_.n_pixels() * 12));
  }

  const Grid& grid() const { return grid_; }
  const ProbabilitySet& probs() const { return probs_; }
  double epsilon() const { return epsilon_; }
  std::size_t min_sample() const { return min_sample_; }
  const std::vector<int>& train_years() const { return train_years_; }
  const std::string& climatology_ref() const { return climatology_ref_; }
  const std::vector<TransferFunction>& transfers() const { return transfers_; }

  const TransferFunction& transfer(std::size_t pixel, int month) const {
    return transfers_[pixel * 12 + static_cast<std::size_t>(month - 1)];
  }

private:
  Grid grid_;
  ProbabilitySet probs_;
  double epsilon_;
  std::size_t min_sample_;
  std::vector<int> train_years_;
  std::string climatology_ref_;
  std::vector<TransferFunction> transfers_;
};

namespace detail {

/// Day indices and climatology slots of one month restricted to a year set.
struct MonthPool {
  std::vector<std::size_t> days;
  std::vector<int> slots;
};

inline std::array<MonthPool, 12> month_pools(const TimeIndex& time, const std::set<int>& years) {
  std::array<MonthPool, 12> out;
  for (std::size_t d = 0; d < time.n_days(); ++d) {
    const DayLabel& l = time.label(d);
    if (!years.count(l.year)) continue;
    MonthPool& mp = out[static_cast<std::size_t>(l.month - 1)];
    mp.days.push_back(d);
    mp.slots.push_back(climatology_slot(time.calendar(), l.month, l.day));
  }
  return out;
}

inline std::vector<double> gather_pool(const DailyDataset& ds, const ClearskyClimatology& clim,
                                       const std::vector<std::size_t>& tile,
                                       const MonthPool& pool,
                                       const ClearskyIndexParams& params) {
  std::vector<double> out;
  out.reserve(tile.size() * pool.days.size());
  for (std::size_t q : tile) {
    for (std::size_t k = 0; k < pool.days.size(); ++k) {
      const float v = ds.value(pool.days[k], q);
      if (ds.is_missing_value(v)) continue;
      const double cs = clim.value(q, pool.slots[k]);
      out.push_back(logit(clearsky_index(v, cs, params)));
    }
  }
  return out;
}

}  // namespace detail

/// Logit-clearsky-index values pooled over the pixel's 3x3 tile and every
/// day of `month` within `years`. Missing cells are skipped. Throws
/// InsufficientData if fewer than `min_sample` values remain.
inline std::vector<double> pooled_sample(const DailyDataset& ds, const ClearskyClimatology& clim,
                                         std::size_t pixel, int month,
                                         const std::vector<int>& years,
                                         const ClearskyIndexParams& params,
                                         std::size_t min_sample) {
  if (!(ds.grid() == clim.grid()))
    throw InvalidInput("dataset grid " + ds.grid().shape_string() +
                       " does not match climatology grid " + clim.grid().shape_string());
  if (month < 1 || month > 12)
    throw InvalidInput("month " + std::to_string(month) + " out of range 1..12");
  if (years.empty()) throw InvalidInput("pooled sample requires at least one year");
  {
    std::vector<int> have = ds.time().years();
    for (int y : years)
      if (!std::binary_search(have.begin(), have.end(), y))
        throw InvalidInput("dataset \"" + ds.variable_name() + "\" does not cover year " +
                           std::to_string(y));
  }
  const std::set<int> wanted(years.begin(), years.end());
  const std::vector<std::size_t> tile = tile_neighbors(ds.grid(), pixel);
  const auto pools = detail::month_pools(ds.time(), wanted);
  std::vector<double> out = detail::gather_pool(
      ds, clim, tile, pools[static_cast<std::size_t>(month - 1)], params);
  if (out.size() < min_sample) throw InsufficientData(pixel, month, out.size(), min_sample);
  return out;
}

struct FitStats {
  std::size_t sample_min = 0;
  std::size_t sample_median = 0;
};

/// Fits one transfer function per (pixel, month) from tile-pooled training
/// samples. Any cell below the sample floor fails the whole fit.
inline QuantileMapModel fit(const DailyDataset& obs, const DailyDataset& mod,
                            const ClearskyClimatology& clim, const FitConfig& config,
                            FitStats* stats = nullptr) {
  config.validate();
  if (!(obs.grid() == mod.grid()))
    throw InvalidInput("observed grid " + obs.grid().shape_string() +
                       " does not match model grid " + mod.grid().shape_string());
  if (!(obs.grid() == clim.grid()))
    throw InvalidInput("dataset grid " + obs.grid().shape_string() +
                       " does not match climatology grid " + clim.grid().shape_string());
  const std::vector<int> years = normalize_years(config.train_years);
  for (const DailyDataset* ds : {&obs, &mod}) {
    std::vector<int> have = ds->time().years();
    for (int y : years)
      if (!std::binary_search(have.begin(), have.end(), y))
        throw InvalidInput("dataset \"" + ds->variable_name() + "\" does not cover training year " +
                           std::to_string(y));
  }

  const std::size_t n_px = obs.grid().n_pixels();
  const ClearskyIndexParams cip{config.epsilon};
  std::vector<std::optional<TransferFunction>> cells(n_px * 12);
  std::vector<std::size_t> sizes(n_px * 12 * 2, 0);

  const std::set<int> wanted(years.begin(), years.end());
  const auto obs_pools = detail::month_pools(obs.time(), wanted);
  const auto mod_pools = detail::month_pools(mod.time(), wanted);

  detail::parallel_chunks(n_px, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const std::vector<std::size_t> tile = tile_neighbors(obs.grid(), p);
      for (int m = 1; m <= 12; ++m) {
        const std::size_t mi = static_cast<std::size_t>(m - 1);
        const std::vector<double> mod_s =
            detail::gather_pool(mod, clim, tile, mod_pools[mi], cip);
        if (mod_s.size() < config.min_sample)
          throw InsufficientData(p, m, mod_s.size(), config.min_sample);
        const std::vector<double> obs_s =
            detail::gather_pool(obs, clim, tile, obs_pools[mi], cip);
        if (obs_s.size() < config.min_sample)
          throw InsufficientData(p, m, obs_s.size(), config.min_sample);
        const std::size_t cell = p * 12 + mi;
        sizes[cell * 2] = mod_s.size();
        sizes[cell * 2 + 1] = obs_s.size();
        cells[cell].emplace(build_transfer(mod_s, obs_s, config.probs));
      }
    }
  });

  if (stats) {
    std::vector<std::size_t> sorted(sizes);
    std::sort(sorted.begin(), sorted.end());
    stats->sample_min = sorted.front();
    stats->sample_median = sorted[sorted.size() / 2];
  }

  std::vector<TransferFunction> transfers;
  transfers.reserve(cells.size());
  for (auto& c : cells) transfers.push_back(std::move(*c));
  return QuantileMapModel(obs.grid(), config.probs, config.epsilon, config.min_sample, years,
                          "", std::move(transfers));
}

/// Applies the full correction chain GHI -> kc -> logit -> T -> logistic ->
/// x CS to every non-missing cell. The logistic reconstruction bounds every
/// output strictly between 0 and the clearsky climatology value; the clamp
/// margin is re-applied after the logistic so the bound survives finite
/// precision and the float32 output format.
inline DailyDataset correct(const QuantileMapModel& model, const DailyDataset& mod,
                            const ClearskyClimatology& clim, unsigned threads = 0) {
  if (!(model.grid() == mod.grid()))
    throw InvalidInput("model grid " + model.grid().shape_string() +
                       " does not match dataset grid " + mod.grid().shape_string());
  if (!(model.grid() == clim.grid()))
    throw InvalidInput("model grid " + model.grid().shape_string() +
                       " does not match climatology grid " + clim.grid().shape_string());
  const TimeIndex& time = mod.time();
  const std::size_t n_px = mod.grid().n_pixels();
  const ClearskyIndexParams cip{model.epsilon()};
  cip.validate();

  std::vector<int> slot_of_day(time.n_days()), month_of_day(time.n_days());
  for (std::size_t d = 0; d < time.n_days(); ++d) {
    const DayLabel& l = time.label(d);
    slot_of_day[d] = climatology_slot(time.calendar(), l.month, l.day);
    month_of_day[d] = l.month;
  }

  std::vector<float> out(time.n_days() * n_px, mod.missing_value());
  detail::parallel_chunks(time.n_days(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      const int slot = slot_of_day[d];
      const int month = month_of_day[d];
      for (std::size_t p = 0; p < n_px; ++p) {
        const float v = mod.value(d, p);
        if (mod.is_missing_value(v)) continue;
        const double cs = clim.value(p, slot);
        const double t = logit(clearsky_index(v, cs, cip));
        const double mapped = model.transfer(p, month)(t);
        const double kc = std::clamp(logistic(mapped), cip.epsilon, 1.0 - cip.epsilon);
        out[d * n_px + p] = static_cast<float>(kc * cs);
      }
    }
  });
  return DailyDataset(mod.grid(), time, mod.variable_name(), "W/m^2", std::move(out),
                      mod.missing_value());
}

/// Contiguous slice spanning the first through last requested year, with any
/// intervening unrequested year masked to missing.
inline DailyDataset slice_years(const DailyDataset& ds, const std::vector<int>& years_in) {
  const std::vector<int> years = normalize_years(years_in);
  if (years.empty()) throw InvalidInput("year slice requires at least one year");
  {
    std::vector<int> have = ds.time().years();
    for (int y : years)
      if (!std::binary_search(have.begin(), have.end(), y))
        throw InvalidInput("dataset \"" + ds.variable_name() + "\" does not cover year " +
                           std::to_string(y));
  }
  const TimeIndex& time = ds.time();
  std::size_t first = time.n_days(), last = 0;
  for (std::size_t d = 0; d < time.n_days(); ++d) {
    const int y = time.label(d).year;
    if (y >= years.front() && y <= years.back()) {
      first = std::min(first, d);
      last = std::max(last, d);
    }
  }
  const std::size_t n_days = last - first + 1;
  const DayLabel& l0 = time.label(first);
  TimeIndex sliced(time.calendar(), Date{l0.year, l0.month, l0.day}, n_days);
  const std::set<int> wanted(years.begin(), years.end());
  const std::size_t n_px = ds.grid().n_pixels();
  std::vector<float> values(n_days * n_px, ds.missing_value());
  for (std::size_t d = 0; d < n_days; ++d) {
    if (!wanted.count(sliced.label(d).year)) continue;
    const float* src = ds.values().data() + (first + d) * n_px;
    std::copy(src, src + n_px, values.begin() + static_cast<std::ptrdiff_t>(d * n_px));
  }
  return DailyDataset(ds.grid(), std::move(sliced), ds.variable_name(), ds.units(),
                      std::move(values), ds.missing_value());
}

/// Fits on the training years and corrects the model data's test-year slice
/// out of sample. Returns (corrected test slice, raw test slice).
inline std::pair<DailyDataset, DailyDataset> cross_validate(
    const DailyDataset& obs, const DailyDataset& mod, const ClearskyClimatology& clim,
    const std::vector<int>& train_years_in, const std::vector<int>& test_years_in,
    FitConfig config) {
  const std::vector<int> train = normalize_years(train_years_in);
  const std::vector<int> test = normalize_years(test_years_in);
  for (int y : test)
    if (std::binary_search(train.begin(), train.end(), y))
      throw InvalidInput("training and test years overlap at " + std::to_string(y));
  for (const DailyDataset* ds : {&obs, &mod}) {
    std::vector<int> have = ds->time().years();
    for (int y : test)
      if (!std::binary_search(have.begin(), have.end(), y))
        throw InvalidInput("dataset \"" + ds->variable_name() + "\" does not cover test year " +
                           std::to_string(y));
  }
  config.train_years = train;
  const QuantileMapModel model = fit(obs, mod, clim, config);
  DailyDataset raw = slice_years(mod, test);
  DailyDataset corrected = correct(model, raw, clim, config.threads);
  return {std::move(corrected), std::move(raw)};
}

}  // namespace solarqm
