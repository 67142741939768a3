#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "solarqm/solarqm.hpp"

using namespace solarqm;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("SOLARQM_CLI");
  return p == nullptr ? std::string{} : std::string(p);
}

int run(const std::string& args, const fs::path& stdout_file = {},
        const fs::path& stderr_file = {}) {
  std::string cmd = cli_path() + " " + args;
  if (!stdout_file.empty()) cmd += " >" + stdout_file.string();
  if (!stderr_file.empty()) cmd += " 2>" + stderr_file.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const fs::path p =
      fs::temp_directory_path() / ("solarqm_cli_" + tag + "_" + std::to_string(rng()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Grid small_grid() { return Grid({35.0, 35.2, 35.4}, {-105.0, -104.8, -104.6}); }

ClearskyClimatology small_climatology(const Grid& g) {
  std::vector<double> v(g.n_pixels() * 366);
  for (std::size_t p = 0; p < g.n_pixels(); ++p)
    for (int s = 1; s <= 366; ++s)
      v[p * 366 + static_cast<std::size_t>(s - 1)] =
          280.0 + 60.0 * std::sin(3.14159265 * s / 366.0) + static_cast<double>(p);
  return ClearskyClimatology(g, std::move(v));
}

DailyDataset kc_dataset(const Grid& g, const ClearskyClimatology& clim, int start_year,
                        int n_years, std::uint64_t seed) {
  std::size_t n_days = 0;
  for (int y = 0; y < n_years; ++y)
    n_days += static_cast<std::size_t>(days_in_year(CalendarKind::gregorian, start_year + y));
  TimeIndex t(CalendarKind::gregorian, {start_year, 1, 1}, n_days);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> kc(0.15, 0.9);
  std::vector<float> values(t.n_days() * g.n_pixels());
  for (std::size_t d = 0; d < t.n_days(); ++d) {
    const DayLabel& l = t.label(d);
    const int slot = climatology_slot(CalendarKind::gregorian, l.month, l.day);
    for (std::size_t p = 0; p < g.n_pixels(); ++p)
      values[d * g.n_pixels() + p] = static_cast<float>(kc(rng) * clim.value(p, slot));
  }
  return DailyDataset(g, t, "ghi", "W/m^2", std::move(values));
}

// whole-year clearsky dataset matching the climatology's shape
DailyDataset clearsky_year(const Grid& g, int year, double offset) {
  TimeIndex t(CalendarKind::gregorian, {year, 1, 1},
              static_cast<std::size_t>(days_in_year(CalendarKind::gregorian, year)));
  std::vector<float> v(t.n_days() * g.n_pixels());
  for (std::size_t d = 0; d < t.n_days(); ++d)
    for (std::size_t p = 0; p < g.n_pixels(); ++p)
      v[d * g.n_pixels() + p] =
          static_cast<float>(260.0 + offset + 50.0 * std::sin(3.14159265 * (d + 1) / 366.0) +
                             static_cast<double>(p));
  return DailyDataset(g, t, "clearsky_ghi", "W/m^2", std::move(v));
}

}  // namespace

TEST_CASE("CLI end-to-end workflow", "[cli]") {
  if (cli_path().empty()) {
    WARN("SOLARQM_CLI not set; skipping CLI tests");
    return;
  }
  const fs::path dir = fresh_dir("workflow");
  const Grid g = small_grid();
  const ClearskyClimatology clim = small_climatology(g);

  write_dataset(kc_dataset(g, clim, 2001, 4, 1), dir / "obs");
  write_dataset(kc_dataset(g, clim, 2001, 4, 2), dir / "mod");
  write_climatology(clim, dir / "clim");

  SECTION("fit then apply, config-first with flag overrides") {
    {
      std::ofstream cfg(dir / "run.json");
      cfg << nlohmann::json{{"obs", (dir / "obs").string()},
                            {"mod", (dir / "mod").string()},
                            {"climatology", (dir / "clim").string()},
                            {"model", (dir / "model").string()},
                            {"output", (dir / "corrected").string()},
                            {"train_years", "2001:2002"},
                            {"test_years", "2003:2004"},
                            {"min_sample", 90}}
                 .dump(2);
    }
    const fs::path out = dir / "fit_stdout.txt";
    REQUIRE(run("fit --config " + (dir / "run.json").string(), out) == 0);
    const auto summary = nlohmann::json::parse(slurp(out));
    REQUIRE(summary["command"] == "fit");
    REQUIRE(summary["pixels"] == 9);
    REQUIRE(summary["sample_min"].get<std::size_t>() >= 90);

    // apply honors the config's test_years and corrects that slice
    REQUIRE(run("apply --config " + (dir / "run.json").string(), dir / "apply_stdout.txt") == 0);
    const DailyDataset corrected = read_dataset(dir / "corrected");
    REQUIRE(corrected.time().start().year == 2003);
    REQUIRE(corrected.time().label(corrected.time().n_days() - 1).year == 2004);

    // a --test-years flag overrides the config
    REQUIRE(run("apply --config " + (dir / "run.json").string() + " --test-years 2004" +
                " --out " + (dir / "corrected_2004").string(),
                dir / "apply_slice_stdout.txt") == 0);
    const DailyDataset slice_2004 = read_dataset(dir / "corrected_2004");
    REQUIRE(slice_2004.time().start().year == 2004);
    REQUIRE(slice_2004.time().n_days() == 366);  // 2004 is leap

    // stats over the test years
    REQUIRE(run("stats --obs " + (dir / "obs").string() + " --mod " +
                (dir / "corrected").string() + " --years 2003:2004 --out-prefix " +
                (dir / "eval").string(),
                dir / "stats_stdout.txt") == 0);
    const std::string csv = slurp(dir / "eval_monthly.csv");
    REQUIRE(csv.rfind("month,mean_bias_wm2,sd_diff_wm2,sd_ratio\n", 0) == 0);

    // idempotence: byte-identical reruns
    const std::string monthly_first = csv;
    const auto bias_bytes_first = slurp(dir / "eval_bias" / "data.f32");
    REQUIRE(run("stats --obs " + (dir / "obs").string() + " --mod " +
                (dir / "corrected").string() + " --years 2003:2004 --out-prefix " +
                (dir / "eval").string(),
                dir / "stats_stdout2.txt") == 0);
    REQUIRE(slurp(dir / "eval_monthly.csv") == monthly_first);
    REQUIRE(slurp(dir / "eval_bias" / "data.f32") == bias_bytes_first);
  }

  SECTION("validation failures exit 2") {
    // apply with mismatched grid
    const Grid g2({35.0, 35.2}, {-105.0, -104.8});
    std::vector<double> cv(g2.n_pixels() * 366, 300.0);
    const ClearskyClimatology clim2(g2, cv);
    write_dataset(kc_dataset(g2, clim2, 2001, 2, 3), dir / "mod_small");
    write_climatology(clim2, dir / "clim_small");

    REQUIRE(run("fit --obs " + (dir / "obs").string() + " --mod " + (dir / "obs").string() +
                " --clim " + (dir / "clim").string() + " --out " + (dir / "m1").string() +
                " --train-years 2001:2002") == 0);
    REQUIRE(run("apply --model " + (dir / "m1").string() + " --mod " +
                (dir / "mod_small").string() + " --clim " + (dir / "clim_small").string() +
                " --out " + (dir / "bad").string()) == 2);

    // fit with training years missing from the data
    REQUIRE(run("fit --obs " + (dir / "obs").string() + " --mod " + (dir / "mod").string() +
                " --clim " + (dir / "clim").string() + " --out " + (dir / "m2").string() +
                " --train-years 1990:1995") == 2);

    // nonexistent input path
    REQUIRE(run("fit --obs " + (dir / "nope").string() + " --mod " + (dir / "mod").string() +
                " --clim " + (dir / "clim").string() + " --out " + (dir / "m3").string() +
                " --train-years 2001:2002") == 2);

    // unknown flag
    REQUIRE(run("fit --frobnicate") == 2);
  }

  SECTION("insufficient data exits 3 and names the cell") {
    // min-sample far above what two training years can pool
    const fs::path err = dir / "insuff_stderr.txt";
    REQUIRE(run("fit --obs " + (dir / "obs").string() + " --mod " + (dir / "mod").string() +
                " --clim " + (dir / "clim").string() + " --out " + (dir / "m4").string() +
                " --train-years 2001:2002 --min-sample 100000",
                {}, err) == 3);
    const std::string msg = slurp(err);
    REQUIRE(msg.find("pixel") != std::string::npos);
    REQUIRE(msg.find("month") != std::string::npos);
  }

  fs::remove_all(dir);
}

TEST_CASE("CLI climatology command", "[cli]") {
  if (cli_path().empty()) {
    WARN("SOLARQM_CLI not set; skipping CLI tests");
    return;
  }
  const fs::path dir = fresh_dir("clim");
  const Grid g = small_grid();
  write_dataset(clearsky_year(g, 2001, 0.0), dir / "cs2001");
  write_dataset(clearsky_year(g, 2002, 5.0), dir / "cs2002");

  SECTION("two years average") {
    REQUIRE(run("climatology " + (dir / "cs2001").string() + " " + (dir / "cs2002").string() +
                " --out " + (dir / "clim").string(),
                dir / "out.txt") == 0);
    const ClearskyClimatology clim = read_climatology(dir / "clim");
    // slot values average the two offsets
    const DailyDataset y1 = read_dataset(dir / "cs2001");
    const double want = 0.5 * (static_cast<double>(y1.value(0, 0)) +
                               static_cast<double>(y1.value(0, 0)) + 5.0);
    REQUIRE(clim.value(0, 1) == Catch::Approx(want).margin(1e-3));
    const auto summary = nlohmann::json::parse(slurp(dir / "out.txt"));
    REQUIRE(summary["pixels"] == 9);
  }

  SECTION("mismatched grids exit 2 naming both shapes") {
    const Grid g2({35.0, 35.2}, {-105.0, -104.8});
    TimeIndex t(CalendarKind::gregorian, {2001, 1, 1}, 365);
    write_dataset(DailyDataset(g2, t, "clearsky_ghi", "W/m^2",
                               std::vector<float>(t.n_days() * g2.n_pixels(), 200.0f)),
                  dir / "cs_small");
    const fs::path err = dir / "err.txt";
    REQUIRE(run("climatology " + (dir / "cs2001").string() + " " + (dir / "cs_small").string() +
                " --out " + (dir / "clim2").string(),
                {}, err) == 2);
    const std::string msg = slurp(err);
    REQUIRE(msg.find("3x3") != std::string::npos);
    REQUIRE(msg.find("2x2") != std::string::npos);
  }

  SECTION("nonpositive clearsky value exits 2") {
    DailyDataset bad = clearsky_year(g, 2001, 0.0);
    bad.set_value(10, 0, 0.0f);
    write_dataset(bad, dir / "cs_bad");
    REQUIRE(run("climatology " + (dir / "cs_bad").string() + " --out " +
                (dir / "clim3").string()) == 2);
  }

  SECTION("two identical yearly files average to either one") {
    fs::create_directories(dir / "copy");
    fs::copy(dir / "cs2001", dir / "copy" / "cs2001", fs::copy_options::recursive);
    REQUIRE(run("climatology " + (dir / "cs2001").string() + " " +
                (dir / "copy" / "cs2001").string() + " --out " + (dir / "clim_id").string()) ==
            0);
    const ClearskyClimatology clim = read_climatology(dir / "clim_id");
    const DailyDataset y = read_dataset(dir / "cs2001");
    for (std::size_t d = 0; d < y.time().n_days(); ++d) {
      const DayLabel& l = y.time().label(d);
      const int slot = climatology_slot(CalendarKind::gregorian, l.month, l.day);
      REQUIRE(clim.value(0, slot) == static_cast<double>(y.value(d, 0)));
    }
  }

  fs::remove_all(dir);
}

TEST_CASE("CLI corrupt files exit 1 and custom probability sets work", "[cli]") {
  if (cli_path().empty()) {
    WARN("SOLARQM_CLI not set; skipping CLI tests");
    return;
  }
  const fs::path dir = fresh_dir("io");
  const Grid g = small_grid();
  const ClearskyClimatology clim = small_climatology(g);
  write_dataset(kc_dataset(g, clim, 2001, 2, 5), dir / "obs");
  write_climatology(clim, dir / "clim");

  SECTION("truncated payload is an I/O failure") {
    fs::resize_file(dir / "obs" / "data.f32", 100);
    REQUIRE(run("stats --obs " + (dir / "obs").string() + " --mod " + (dir / "obs").string() +
                " --out-prefix " + (dir / "x").string()) == 1);
  }

  SECTION("stats on identical datasets emits an all-zero bias table") {
    REQUIRE(run("stats --obs " + (dir / "obs").string() + " --mod " + (dir / "obs").string() +
                " --out-prefix " + (dir / "self").string()) == 0);
    std::ifstream csv(dir / "self_monthly.csv");
    std::string line;
    std::getline(csv, line);  // header
    int rows = 0;
    while (std::getline(csv, line)) {
      ++rows;
      std::stringstream ss(line);
      std::string month, bias, sd_diff, sd_ratio;
      std::getline(ss, month, ',');
      std::getline(ss, bias, ',');
      std::getline(ss, sd_diff, ',');
      std::getline(ss, sd_ratio, ',');
      REQUIRE(std::stod(bias) == 0.0);
      REQUIRE(std::stod(sd_diff) == 0.0);
      REQUIRE(std::stod(sd_ratio) == 1.0);
    }
    REQUIRE(rows == 12);
    const BiasField bias = read_bias_field(dir / "self_bias");
    for (std::size_t p = 0; p < g.n_pixels(); ++p) REQUIRE(bias.value(p) == 0.0);
  }

  SECTION("a coarser probability set fits and serializes") {
    REQUIRE(run("fit --obs " + (dir / "obs").string() + " --mod " + (dir / "obs").string() +
                " --clim " + (dir / "clim").string() + " --out " + (dir / "m").string() +
                " --train-years 2001:2002 --probs 0.05:0.95:0.05 --min-sample 10") == 0);
    const QuantileMapModel model = read_model(dir / "m");
    REQUIRE(model.probs().size() == 19);
    REQUIRE(model.transfers().front().knots_x().size() == 19);
  }

  fs::remove_all(dir);
}

TEST_CASE("CLI import command", "[cli]") {
  if (cli_path().empty()) {
    WARN("SOLARQM_CLI not set; skipping CLI tests");
    return;
  }
  const fs::path dir = fresh_dir("import");
  {
    std::ofstream csv(dir / "in.csv");
    csv << "date,pixel_id,value\n";
    csv << "2001-01-01,0,10\n2001-01-01,1,11\n2001-01-01,2,12\n2001-01-01,3,13\n";
    csv << "2001-01-02,0,14\n2001-01-02,1,15\n2001-01-02,2,16\n2001-01-02,3,17\n";
  }
  const std::string grid_flags =
      " --lat0 35 --dlat 0.2 --nlat 2 --lon0 -105 --dlon 0.2 --nlon 2";
  REQUIRE(run("import " + (dir / "in.csv").string() + " --out " + (dir / "ds").string() +
              " --calendar gregorian --start 2001-01-01 --days 2" + grid_flags) == 0);
  const DailyDataset ds = read_dataset(dir / "ds");
  REQUIRE(ds.value(0, 0) == 10.0f);
  REQUIRE(ds.value(1, 3) == 17.0f);

  // conflicting duplicate rows exit 2
  {
    std::ofstream csv(dir / "dup.csv");
    csv << "date,pixel_id,value\n2001-01-01,0,10\n2001-01-01,0,99\n";
  }
  REQUIRE(run("import " + (dir / "dup.csv").string() + " --out " + (dir / "ds2").string() +
              " --calendar gregorian --start 2001-01-01 --days 2" + grid_flags) == 2);

  // unknown calendar exits 2
  REQUIRE(run("import " + (dir / "in.csv").string() + " --out " + (dir / "ds3").string() +
              " --calendar julian --start 2001-01-01 --days 2" + grid_flags) == 2);

  fs::remove_all(dir);
}

TEST_CASE("CLI fanova and regions commands", "[cli]") {
  if (cli_path().empty()) {
    WARN("SOLARQM_CLI not set; skipping CLI tests");
    return;
  }
  const fs::path dir = fresh_dir("fanova");
  const Grid g = small_grid();
  std::vector<double> values(g.n_pixels());
  for (std::size_t p = 0; p < values.size(); ++p) values[p] = 2.0 + 0.25 * static_cast<double>(p);
  const BiasField field(g, values, {2011});
  write_bias_field(field, "annual_percent_bias", dir / "b");

  // four copies: mu equals the field, effects vanish
  REQUIRE(run("fanova --b11 " + (dir / "b").string() + " --b12 " + (dir / "b").string() +
              " --b21 " + (dir / "b").string() + " --b22 " + (dir / "b").string() +
              " --out-prefix " + (dir / "f").string(),
              dir / "out.txt") == 0);
  const BiasField mu = read_bias_field(dir / "f_mu");
  const BiasField gamma = read_bias_field(dir / "f_gamma");
  for (std::size_t p = 0; p < g.n_pixels(); ++p) {
    REQUIRE(mu.value(p) == Catch::Approx(field.value(p)).margin(1e-6));
    REQUIRE(gamma.value(p) == 0.0);
  }

  {
    std::ofstream csv(dir / "regions.csv");
    csv << "region_id,region_name,centroid_lat,centroid_lon\n";
    csv << "4,Everything,35.2,-104.8\n";
  }
  REQUIRE(run("regions --field " + (dir / "b").string() + " --table " +
              (dir / "regions.csv").string() + " --out " + (dir / "summary.csv").string()) == 0);
  const std::string csv = slurp(dir / "summary.csv");
  REQUIRE(csv.rfind("region_id,region_name,count,mean,median,q25,q75,min,max\n", 0) == 0);
  REQUIRE(csv.find("4,Everything,9,") != std::string::npos);

  fs::remove_all(dir);
}
