#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "solarqm/diagnostics.hpp"
#include "solarqm/pipeline.hpp"

namespace solarqm {

// ---------------------------------------------------------------------------
// On-disk formats (all multi-byte payloads little-endian, host-independent):
//
//   dataset directory   meta.json  {n_lat, n_lon, lat[], lon[], calendar,
//                                   start "YYYY-MM-DD", n_days, variable_name,
//                                   units, missing_value (number or null=NaN)}
//                       data.f32   raw float32 [day][pixel], 4*n_days*n_pixels
//                                  bytes
//
//   model directory     meta.json  {probs[], epsilon, train_years[],
//                                   min_sample, n_lat, n_lon, lat[], lon[],
//                                   climatology}
//                       knots.f64  raw float64 [pixel][month 1..12][knot]
//                                  [model_q, observed_q]
//
//   region table        CSV, header region_id,region_name,centroid_lat,
//                       centroid_lon (names must not contain commas)
//
// Clearsky climatologies are stored as a dataset directory with n_days = 366
// (one row per climatology slot) and variable_name
// "clearsky_ghi_climatology".
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
inline void append_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
inline T read_le(const unsigned char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return data;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  const std::vector<unsigned char> raw = read_file(path);
  nlohmann::json j = nlohmann::json::parse(raw.begin(), raw.end(), nullptr, false);
  if (j.is_discarded()) throw CorruptFile("cannot parse JSON in " + path.string());
  return j;
}

template <typename T>
inline T json_field(const nlohmann::json& j, const char* key, const std::filesystem::path& path) {
  if (!j.contains(key))
    throw CorruptFile(path.string() + " is missing required field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CorruptFile(path.string() + " has a malformed \"" + std::string(key) + "\" field");
  }
}

inline Date parse_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  char trail = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c", &y, &m, &d, &trail) != 3)
    throw InvalidInput("cannot parse date \"" + text + "\" (expected YYYY-MM-DD)");
  return Date{y, m, d};
}

}  // namespace detail

// ---- dataset directories ---------------------------------------------------

inline void write_dataset(const DailyDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  nlohmann::json meta;
  meta["n_lat"] = ds.grid().n_lat();
  meta["n_lon"] = ds.grid().n_lon();
  meta["lat"] = ds.grid().lat();
  meta["lon"] = ds.grid().lon();
  meta["calendar"] = to_string(ds.time().calendar());
  meta["start"] = TimeIndex::format_date(ds.time().start());
  meta["n_days"] = ds.time().n_days();
  meta["variable_name"] = ds.variable_name();
  meta["units"] = ds.units();
  if (std::isnan(ds.missing_value()))
    meta["missing_value"] = nullptr;
  else
    meta["missing_value"] = ds.missing_value();
  const std::string text = meta.dump(2) + "\n";
  detail::write_file(dir / "meta.json", text.data(), text.size());

  std::vector<unsigned char> payload;
  payload.reserve(4 * ds.values().size());
  for (float v : ds.values()) detail::append_le(payload, v);
  detail::write_file(dir / "data.f32", payload.data(), payload.size());
}

inline DailyDataset read_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path meta_path = dir / "meta.json";
  const nlohmann::json meta = detail::read_json(meta_path);

  const auto n_lat = detail::json_field<std::size_t>(meta, "n_lat", meta_path);
  const auto n_lon = detail::json_field<std::size_t>(meta, "n_lon", meta_path);
  auto lat = detail::json_field<std::vector<double>>(meta, "lat", meta_path);
  auto lon = detail::json_field<std::vector<double>>(meta, "lon", meta_path);
  if (lat.size() != n_lat || lon.size() != n_lon)
    throw CorruptFile(meta_path.string() + " coordinate arrays do not match n_lat/n_lon");
  Grid grid(std::move(lat), std::move(lon));

  const CalendarKind cal =
      calendar_from_string(detail::json_field<std::string>(meta, "calendar", meta_path));
  const Date start = detail::parse_date(detail::json_field<std::string>(meta, "start", meta_path));
  const auto n_days = detail::json_field<std::size_t>(meta, "n_days", meta_path);

  float missing = std::numeric_limits<float>::quiet_NaN();
  if (meta.contains("missing_value") && !meta["missing_value"].is_null())
    missing = detail::json_field<float>(meta, "missing_value", meta_path);

  // validate the payload size before allocating anything sized by n_days
  const std::filesystem::path data_path = dir / "data.f32";
  const std::vector<unsigned char> raw = detail::read_file(data_path);
  if (n_days == 0 || n_days > std::numeric_limits<std::size_t>::max() / 4 / grid.n_pixels() ||
      raw.size() != 4 * n_days * grid.n_pixels())
    throw CorruptFile(data_path.string() + " holds " + std::to_string(raw.size()) +
                      " bytes, which does not match " + std::to_string(n_days) + " days x " +
                      std::to_string(grid.n_pixels()) + " pixels of float32");
  TimeIndex time(cal, start, n_days);
  std::vector<float> values(n_days * grid.n_pixels());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = detail::read_le<float>(raw.data() + 4 * i);

  return DailyDataset(std::move(grid), std::move(time),
                      detail::json_field<std::string>(meta, "variable_name", meta_path),
                      detail::json_field<std::string>(meta, "units", meta_path),
                      std::move(values), missing);
}

// ---- clearsky climatology (dataset directory with one row per slot) --------

inline constexpr const char* kClimatologyVariable = "clearsky_ghi_climatology";

inline void write_climatology(const ClearskyClimatology& clim, const std::filesystem::path& dir) {
  const std::size_t n_px = clim.grid().n_pixels();
  std::vector<float> values(ClearskyClimatology::kSlots * n_px);
  for (std::size_t s = 0; s < ClearskyClimatology::kSlots; ++s)
    for (std::size_t p = 0; p < n_px; ++p)
      values[s * n_px + p] = static_cast<float>(clim.value(p, static_cast<int>(s + 1)));
  // year 2000 is leap, so the nominal index really has 366 steps
  DailyDataset ds(clim.grid(), TimeIndex(CalendarKind::gregorian, Date{2000, 1, 1},
                                         ClearskyClimatology::kSlots),
                  kClimatologyVariable, "W/m^2", std::move(values));
  write_dataset(ds, dir);
}

inline ClearskyClimatology read_climatology(const std::filesystem::path& dir) {
  const DailyDataset ds = read_dataset(dir);
  if (ds.time().n_days() != ClearskyClimatology::kSlots)
    throw InvalidInput("climatology at " + dir.string() + " must have exactly 366 rows, found " +
                       std::to_string(ds.time().n_days()));
  const std::size_t n_px = ds.grid().n_pixels();
  std::vector<double> values(n_px * ClearskyClimatology::kSlots);
  for (std::size_t s = 0; s < ClearskyClimatology::kSlots; ++s)
    for (std::size_t p = 0; p < n_px; ++p) {
      const float v = ds.value(s, p);
      if (ds.is_missing_value(v) || !(v > 0.0f))
        throw InvalidInput("climatology at " + dir.string() +
                           " has a missing or nonpositive value (slot " + std::to_string(s + 1) +
                           ", pixel " + std::to_string(p) + ")");
      values[p * ClearskyClimatology::kSlots + s] = static_cast<double>(v);
    }
  return ClearskyClimatology(ds.grid(), std::move(values));
}

// ---- fitted model directories ----------------------------------------------

inline void write_model(const QuantileMapModel& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  nlohmann::json meta;
  meta["probs"] = model.probs().values();
  meta["epsilon"] = model.epsilon();
  meta["train_years"] = model.train_years();
  meta["min_sample"] = model.min_sample();
  meta["n_lat"] = model.grid().n_lat();
  meta["n_lon"] = model.grid().n_lon();
  meta["lat"] = model.grid().lat();
  meta["lon"] = model.grid().lon();
  meta["climatology"] = model.climatology_ref();
  const std::string text = meta.dump(2) + "\n";
  detail::write_file(dir / "meta.json", text.data(), text.size());

  const std::size_t k = model.probs().size();
  std::vector<unsigned char> payload;
  payload.reserve(model.grid().n_pixels() * 12 * k * 2 * 8);
  for (std::size_t p = 0; p < model.grid().n_pixels(); ++p)
    for (int m = 1; m <= 12; ++m) {
      const TransferFunction& tf = model.transfer(p, m);
      for (std::size_t i = 0; i < k; ++i) {
        detail::append_le(payload, tf.knots_x()[i]);
        detail::append_le(payload, tf.knots_y()[i]);
      }
    }
  detail::write_file(dir / "knots.f64", payload.data(), payload.size());
}

inline QuantileMapModel read_model(const std::filesystem::path& dir) {
  const std::filesystem::path meta_path = dir / "meta.json";
  const nlohmann::json meta = detail::read_json(meta_path);

  ProbabilitySet probs(detail::json_field<std::vector<double>>(meta, "probs", meta_path));
  const double epsilon = detail::json_field<double>(meta, "epsilon", meta_path);
  auto train_years = detail::json_field<std::vector<int>>(meta, "train_years", meta_path);
  const auto min_sample = detail::json_field<std::size_t>(meta, "min_sample", meta_path);
  auto lat = detail::json_field<std::vector<double>>(meta, "lat", meta_path);
  auto lon = detail::json_field<std::vector<double>>(meta, "lon", meta_path);
  if (lat.size() != detail::json_field<std::size_t>(meta, "n_lat", meta_path) ||
      lon.size() != detail::json_field<std::size_t>(meta, "n_lon", meta_path))
    throw CorruptFile(meta_path.string() + " coordinate arrays do not match n_lat/n_lon");
  Grid grid(std::move(lat), std::move(lon));
  std::string clim_ref;
  if (meta.contains("climatology") && meta["climatology"].is_string())
    clim_ref = meta["climatology"].get<std::string>();

  const std::filesystem::path knots_path = dir / "knots.f64";
  const std::vector<unsigned char> raw = detail::read_file(knots_path);
  const std::size_t k = probs.size();
  const std::size_t expected = grid.n_pixels() * 12 * k * 2 * 8;
  if (raw.size() != expected)
    throw CorruptFile(knots_path.string() + " holds " + std::to_string(raw.size()) +
                      " bytes, expected " + std::to_string(expected));

  std::vector<TransferFunction> transfers;
  transfers.reserve(grid.n_pixels() * 12);
  const unsigned char* p = raw.data();
  for (std::size_t cell = 0; cell < grid.n_pixels() * 12; ++cell) {
    std::vector<double> x(k), y(k);
    for (std::size_t i = 0; i < k; ++i) {
      x[i] = detail::read_le<double>(p);
      p += 8;
      y[i] = detail::read_le<double>(p);
      p += 8;
    }
    transfers.emplace_back(std::move(x), std::move(y));
  }
  return QuantileMapModel(std::move(grid), std::move(probs), epsilon, min_sample,
                          std::move(train_years), std::move(clim_ref), std::move(transfers));
}

// ---- region tables ----------------------------------------------------------

inline constexpr const char* kRegionTableHeader =
    "region_id,region_name,centroid_lat,centroid_lon";

inline RegionTable read_region_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line)) throw CorruptFile(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRegionTableHeader)
    throw InvalidInput(path.string() + " header must be \"" + kRegionTableHeader + "\"");
  RegionTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string id, name, lat, lon;
    if (!std::getline(row, id, ',') || !std::getline(row, name, ',') ||
        !std::getline(row, lat, ',') || !std::getline(row, lon))
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    try {
      table.rows.push_back(RegionRow{std::stoi(id), name, std::stod(lat), std::stod(lon)});
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  table.validate();
  return table;
}

// ---- CSV dataset import -----------------------------------------------------

/// Imports (date, pixel_id, value) or (date, lat, lon, value) rows into a
/// dataset of the given shape. Unspecified cells are missing. Coordinates
/// must match a grid coordinate within 1e-6 degrees; duplicate rows must
/// agree on the value.
inline DailyDataset import_csv(const std::filesystem::path& path, const Grid& grid,
                               const TimeIndex& time, const std::string& variable_name,
                               const std::string& units) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line)) throw CorruptFile(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool by_pixel;
  if (line == "date,pixel_id,value")
    by_pixel = true;
  else if (line == "date,lat,lon,value")
    by_pixel = false;
  else
    throw InvalidInput(path.string() + " header must be \"date,pixel_id,value\" or "
                       "\"date,lat,lon,value\"");

  std::unordered_map<std::int64_t, std::size_t> day_of_date;
  day_of_date.reserve(time.n_days());
  for (std::size_t d = 0; d < time.n_days(); ++d) {
    const DayLabel& l = time.label(d);
    day_of_date[static_cast<std::int64_t>(l.year) * 10000 + l.month * 100 + l.day] = d;
  }

  auto axis_lookup = [&path](const std::vector<double>& axis, double v,
                             const char* name) -> std::size_t {
    for (std::size_t i = 0; i < axis.size(); ++i)
      if (std::abs(axis[i] - v) <= 1e-6) return i;
    throw InvalidInput(path.string() + ": " + name + " " + std::to_string(v) +
                       " matches no grid coordinate within 1e-6 degrees");
  };

  DailyDataset ds = DailyDataset::filled_missing(grid, time, variable_name, units);
  std::vector<bool> written(ds.values().size(), false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    auto next = [&]() {
      if (!std::getline(row, field, ','))
        throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed row");
      return field;
    };
    const Date date = detail::parse_date(next());
    const auto it =
        day_of_date.find(static_cast<std::int64_t>(date.year) * 10000 + date.month * 100 + date.day);
    if (it == day_of_date.end())
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": date " +
                         TimeIndex::format_date(date) + " is outside the dataset's time index");
    std::size_t pixel;
    try {
      if (by_pixel) {
        const long long id = std::stoll(next());
        if (id < 0 || static_cast<std::size_t>(id) >= grid.n_pixels())
          throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": pixel_id " +
                             std::to_string(id) + " out of range for grid " +
                             grid.shape_string());
        pixel = static_cast<std::size_t>(id);
      } else {
        const double lat = std::stod(next());
        const double lon = std::stod(next());
        pixel = grid.pixel(axis_lookup(grid.lat(), lat, "lat"), axis_lookup(grid.lon(), lon, "lon"));
      }
    } catch (const InvalidInput&) {
      throw;
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    float value;
    try {
      value = std::stof(next());
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed value");
    }
    const std::size_t cell = ds.cell(it->second, pixel);
    if (written[cell]) {
      const float prev = ds.values()[cell];
      if (std::memcmp(&prev, &value, sizeof(float)) != 0)
        throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                           ": conflicting duplicate for date " + TimeIndex::format_date(date) +
                           ", pixel " + std::to_string(pixel));
    }
    ds.values()[cell] = value;
    written[cell] = true;
  }
  return ds;
}

// ---- diagnostic emitters ------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline void write_monthly_stats_csv(const MonthlyStats& stats, const std::filesystem::path& path) {
  std::string text = "month,mean_bias_wm2,sd_diff_wm2,sd_ratio\n";
  for (int m = 1; m <= 12; ++m) {
    const MonthlyCell& cell = stats.month(m);
    text += std::to_string(m) + ",";
    if (cell.has_data)
      text += detail::format_number(cell.mean_bias) + "," + detail::format_number(cell.sd_diff) +
              "," + detail::format_number(cell.sd_ratio);
    else
      text += ",,";
    text += "\n";
  }
  detail::write_file(path, text.data(), text.size());
}

inline void write_region_summary_csv(const std::vector<RegionSummaryRow>& rows,
                                     const std::filesystem::path& path) {
  std::string text = "region_id,region_name,count,mean,median,q25,q75,min,max\n";
  for (const RegionSummaryRow& r : rows) {
    text += std::to_string(r.region_id) + "," + r.region_name + "," + std::to_string(r.count) +
            "," + detail::format_number(r.mean) + "," + detail::format_number(r.median) + "," +
            detail::format_number(r.q25) + "," + detail::format_number(r.q75) + "," +
            detail::format_number(r.min) + "," + detail::format_number(r.max) + "\n";
  }
  detail::write_file(path, text.data(), text.size());
}

/// Single-row raster (n_days = 1) used for bias fields and factorial
/// components; NaN marks missing pixels.
inline void write_field_raster(const Grid& grid, const std::vector<double>& values,
                               const std::string& variable_name, const std::string& units,
                               const std::vector<int>& years, const std::filesystem::path& dir) {
  if (values.size() != grid.n_pixels())
    throw InvalidInput("field raster values do not match the grid");
  std::vector<float> narrowed(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) narrowed[i] = static_cast<float>(values[i]);
  const int year = years.empty() ? 2000 : years.front();
  DailyDataset ds(grid, TimeIndex(CalendarKind::gregorian, Date{year, 1, 1}, 1), variable_name,
                  units, std::move(narrowed));
  write_dataset(ds, dir);
}

inline void write_bias_field(const BiasField& field, const std::string& variable_name,
                             const std::filesystem::path& dir) {
  write_field_raster(field.grid(), field.values(), variable_name, "percent", field.years(), dir);
}

inline BiasField read_bias_field(const std::filesystem::path& dir) {
  const DailyDataset ds = read_dataset(dir);
  if (ds.time().n_days() != 1)
    throw InvalidInput("field raster at " + dir.string() + " must have exactly one day, found " +
                       std::to_string(ds.time().n_days()));
  std::vector<double> values(ds.grid().n_pixels());
  for (std::size_t p = 0; p < values.size(); ++p) {
    const float v = ds.value(0, p);
    values[p] = ds.is_missing_value(v) ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(v);
  }
  return BiasField(ds.grid(), std::move(values), {ds.time().start().year});
}

}  // namespace solarqm
