// solarqm — clearsky-bounded quantile mapping for gridded daily GHI.
//
// Subcommands: climatology, fit, apply, stats, fanova, regions, import.
// Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 insufficient
// data.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "solarqm/solarqm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInsufficientData = 3;

// "2001:2005", "2001,2003", or a mix of comma-separated tokens.
std::vector<int> parse_years(const std::string& spec) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t next = spec.find(',', pos);
    if (next == std::string::npos) next = spec.size();
    const std::string token = spec.substr(pos, next - pos);
    int a = 0, b = 0;
    char trail = 0;
    if (std::sscanf(token.c_str(), "%d:%d%c", &a, &b, &trail) == 2) {
      if (b < a) throw solarqm::InvalidInput("year range \"" + token + "\" is reversed");
      for (int y = a; y <= b; ++y) out.push_back(y);
    } else if (std::sscanf(token.c_str(), "%d%c", &a, &trail) == 1) {
      out.push_back(a);
    } else {
      throw solarqm::InvalidInput("cannot parse years \"" + spec +
                                  "\" (expected e.g. 2001:2005 or 2001,2002)");
    }
    pos = next + 1;
  }
  return solarqm::normalize_years(out);
}

// Values shared by the data-processing subcommands. Each field can come from
// the JSON config file; command-line flags take precedence.
struct RunConfig {
  std::optional<std::string> obs, mod, climatology, model, output;
  std::optional<std::string> probs, train_years, test_years;
  std::optional<double> epsilon;
  std::optional<std::size_t> min_sample;
  std::optional<unsigned> threads;

  static RunConfig load(const std::string& path) {
    if (!fs::exists(path))
      throw solarqm::InvalidInput("config file " + path + " does not exist");
    const json j = solarqm::detail::read_json(path);
    RunConfig c;
    auto str = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key)) return std::nullopt;
      if (j[key].is_string()) return j[key].get<std::string>();
      throw solarqm::InvalidInput("config field \"" + std::string(key) + "\" must be a string");
    };
    c.obs = str("obs");
    c.mod = str("mod");
    c.climatology = str("climatology");
    c.model = str("model");
    c.output = str("output");
    c.probs = str("probs");
    c.train_years = str("train_years");
    c.test_years = str("test_years");
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("min_sample")) c.min_sample = j["min_sample"].get<std::size_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    return c;
  }
};

// One string-typed option that may fall back to a config value.
struct Configured {
  std::string flag_value;
  CLI::Option* option = nullptr;

  std::optional<std::string> resolve(const std::optional<std::string>& from_config) const {
    if (option != nullptr && option->count() > 0) return flag_value;
    return from_config;
  }
};

std::string require_value(const std::optional<std::string>& v, const std::string& what) {
  if (!v || v->empty())
    throw solarqm::InvalidInput("missing required " + what +
                                " (set it via flag or config file)");
  return *v;
}

void require_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw solarqm::InvalidInput(what + " path " + path + " does not exist");
}

solarqm::DailyDataset load_dataset(const std::string& path, const std::string& what) {
  require_exists(path, what);
  return solarqm::read_dataset(path);
}

solarqm::ClearskyClimatology load_climatology(const std::string& path) {
  require_exists(path, "climatology");
  return solarqm::read_climatology(path);
}

void print_summary(const json& j) { std::cout << j.dump() << "\n"; }

// ---- subcommand bodies ------------------------------------------------------

int cmd_climatology(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<solarqm::DailyDataset> datasets;
  datasets.reserve(inputs.size());
  for (const std::string& p : inputs) datasets.push_back(load_dataset(p, "clearsky input"));
  const solarqm::ClearskyClimatology clim = solarqm::build_climatology(datasets);
  solarqm::write_climatology(clim, out);

  std::size_t total_days = 0;
  for (const auto& ds : datasets) total_days += ds.time().n_days();
  print_summary(json{{"command", "climatology"},
                     {"inputs", inputs.size()},
                     {"pixels", clim.grid().n_pixels()},
                     {"values_per_pixel", total_days},
                     {"output", out}});
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, unsigned threads_flag, bool threads_set) {
  const std::string obs_path = require_value(cfg.obs, "observed dataset (obs)");
  const std::string mod_path = require_value(cfg.mod, "model dataset (mod)");
  const std::string clim_path = require_value(cfg.climatology, "climatology");
  const std::string model_path = require_value(cfg.model, "model output path");

  solarqm::FitConfig config;
  if (cfg.probs) config.probs = solarqm::ProbabilitySet::parse(*cfg.probs);
  if (cfg.epsilon) config.epsilon = *cfg.epsilon;
  if (cfg.min_sample) config.min_sample = *cfg.min_sample;
  config.train_years = parse_years(require_value(cfg.train_years, "training years"));
  config.threads = threads_set ? threads_flag : cfg.threads.value_or(0);

  const solarqm::DailyDataset obs = load_dataset(obs_path, "observed dataset");
  const solarqm::DailyDataset mod = load_dataset(mod_path, "model dataset");
  const solarqm::ClearskyClimatology clim = load_climatology(clim_path);

  solarqm::FitStats stats;
  solarqm::QuantileMapModel model = solarqm::fit(obs, mod, clim, config, &stats);
  model = solarqm::QuantileMapModel(model.grid(), model.probs(), model.epsilon(),
                                    model.min_sample(), model.train_years(), clim_path,
                                    model.transfers());
  solarqm::write_model(model, model_path);
  print_summary(json{{"command", "fit"},
                     {"pixels", model.grid().n_pixels()},
                     {"months", 12},
                     {"sample_min", stats.sample_min},
                     {"sample_median", stats.sample_median},
                     {"model", model_path}});
  return kExitOk;
}

int cmd_apply(const RunConfig& cfg, unsigned threads_flag, bool threads_set) {
  const std::string model_path = require_value(cfg.model, "model path");
  const std::string mod_path = require_value(cfg.mod, "model dataset (mod)");
  const std::string clim_path = require_value(cfg.climatology, "climatology");
  const std::string out_path = require_value(cfg.output, "output path");

  require_exists(model_path, "model");
  const solarqm::QuantileMapModel model = solarqm::read_model(model_path);
  solarqm::DailyDataset mod = load_dataset(mod_path, "model dataset");
  const solarqm::ClearskyClimatology clim = load_climatology(clim_path);
  const unsigned threads = threads_set ? threads_flag : cfg.threads.value_or(0);
  if (cfg.test_years) mod = solarqm::slice_years(mod, parse_years(*cfg.test_years));

  const solarqm::DailyDataset corrected = solarqm::correct(model, mod, clim, threads);
  solarqm::write_dataset(corrected, out_path);

  std::size_t missing = 0;
  for (float v : corrected.values())
    if (corrected.is_missing_value(v)) ++missing;
  print_summary(json{{"command", "apply"},
                     {"days", corrected.time().n_days()},
                     {"pixels", corrected.grid().n_pixels()},
                     {"cells", corrected.values().size()},
                     {"missing_cells", missing},
                     {"output", out_path}});
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg, const std::string& years_flag, bool years_set,
              const std::string& out_prefix, bool yearly_mean) {
  const std::string obs_path = require_value(cfg.obs, "observed dataset (obs)");
  const std::string mod_path = require_value(cfg.mod, "model dataset (mod)");
  const solarqm::DailyDataset obs = load_dataset(obs_path, "observed dataset");
  const solarqm::DailyDataset mod = load_dataset(mod_path, "model dataset");

  std::vector<int> years;
  if (years_set)
    years = parse_years(years_flag);
  else if (cfg.test_years)
    years = parse_years(*cfg.test_years);

  const solarqm::MonthlyStats stats = solarqm::monthly_stats(obs, mod, years);
  solarqm::write_monthly_stats_csv(stats, out_prefix + "_monthly.csv");

  solarqm::BiasField bias = [&] {
    if (yearly_mean && years.size() > 1) {
      std::vector<solarqm::BiasField> per_year;
      for (int y : years)
        per_year.push_back(solarqm::annual_percent_bias(obs, mod, {y}));
      return solarqm::average_bias_fields(per_year);
    }
    return solarqm::annual_percent_bias(obs, mod, years);
  }();
  solarqm::write_bias_field(bias, "annual_percent_bias", out_prefix + "_bias");

  std::size_t missing = 0;
  for (std::size_t p = 0; p < bias.grid().n_pixels(); ++p)
    if (bias.is_missing(p)) ++missing;
  print_summary(json{{"command", "stats"},
                     {"months_with_data",
                      std::count_if(stats.months.begin(), stats.months.end(),
                                    [](const solarqm::MonthlyCell& c) { return c.has_data; })},
                     {"bias_pixels", bias.grid().n_pixels() - missing},
                     {"monthly_csv", out_prefix + "_monthly.csv"},
                     {"bias_raster", out_prefix + "_bias"}});
  return kExitOk;
}

int cmd_fanova(const std::string& b11, const std::string& b12, const std::string& b21,
               const std::string& b22, const std::string& out_prefix) {
  for (const auto* p : {&b11, &b12, &b21, &b22}) require_exists(*p, "bias field");
  const solarqm::BiasField f11 = solarqm::read_bias_field(b11);
  const solarqm::BiasField f12 = solarqm::read_bias_field(b12);
  const solarqm::BiasField f21 = solarqm::read_bias_field(b21);
  const solarqm::BiasField f22 = solarqm::read_bias_field(b22);
  const solarqm::FanovaComponents comps = solarqm::fanova(f11, f12, f21, f22);

  const std::vector<int> years = f11.years();
  solarqm::write_field_raster(comps.grid, comps.mu, "fanova_mu", "percent", years,
                              out_prefix + "_mu");
  solarqm::write_field_raster(comps.grid, comps.alpha_gcm, "fanova_alpha_gcm", "percent", years,
                              out_prefix + "_alpha_gcm");
  solarqm::write_field_raster(comps.grid, comps.alpha_rcm, "fanova_alpha_rcm", "percent", years,
                              out_prefix + "_alpha_rcm");
  solarqm::write_field_raster(comps.grid, comps.gamma, "fanova_gamma", "percent", years,
                              out_prefix + "_gamma");
  print_summary(json{{"command", "fanova"},
                     {"pixels", comps.grid.n_pixels()},
                     {"outputs",
                      {out_prefix + "_mu", out_prefix + "_alpha_gcm", out_prefix + "_alpha_rcm",
                       out_prefix + "_gamma"}}});
  return kExitOk;
}

int cmd_regions(const std::string& field_path, const std::string& table_path,
                const std::string& out) {
  require_exists(field_path, "bias field");
  require_exists(table_path, "region table");
  const solarqm::BiasField field = solarqm::read_bias_field(field_path);
  const solarqm::RegionTable table = solarqm::read_region_table(table_path);
  const solarqm::RegionAssignment assignment = solarqm::assign_regions(field.grid(), table);
  const auto rows = solarqm::region_summary(field, assignment, table);
  solarqm::write_region_summary_csv(rows, out);
  print_summary(json{{"command", "regions"}, {"regions", rows.size()}, {"output", out}});
  return kExitOk;
}

struct ImportArgs {
  std::string csv, out, calendar = "gregorian", start, variable = "ghi", units = "W/m^2";
  std::size_t n_days = 0;
  std::string like;
  double lat0 = 0, dlat = 0, lon0 = 0, dlon = 0;
  std::size_t n_lat = 0, n_lon = 0;
};

int cmd_import(const ImportArgs& a) {
  require_exists(a.csv, "CSV input");
  std::optional<solarqm::Grid> grid;
  std::optional<solarqm::TimeIndex> time;
  if (!a.like.empty()) {
    const solarqm::DailyDataset ref = load_dataset(a.like, "reference dataset");
    grid = ref.grid();
    time = ref.time();
  } else {
    if (a.n_lat == 0 || a.n_lon == 0)
      throw solarqm::InvalidInput("grid shape required: pass --like or --nlat/--nlon with "
                                  "--lat0/--dlat/--lon0/--dlon");
    if (a.dlat == 0.0 || a.dlon == 0.0)
      throw solarqm::InvalidInput("grid spacing --dlat/--dlon must be nonzero");
    std::vector<double> lat(a.n_lat), lon(a.n_lon);
    for (std::size_t i = 0; i < a.n_lat; ++i) lat[i] = a.lat0 + a.dlat * static_cast<double>(i);
    for (std::size_t j = 0; j < a.n_lon; ++j) lon[j] = a.lon0 + a.dlon * static_cast<double>(j);
    grid.emplace(std::move(lat), std::move(lon));
    if (a.start.empty() || a.n_days == 0)
      throw solarqm::InvalidInput("--start and --days are required without --like");
    time.emplace(solarqm::calendar_from_string(a.calendar),
                 solarqm::detail::parse_date(a.start), a.n_days);
  }
  const solarqm::DailyDataset ds =
      solarqm::import_csv(a.csv, *grid, *time, a.variable, a.units);
  solarqm::write_dataset(ds, a.out);

  std::size_t missing = 0;
  for (float v : ds.values())
    if (ds.is_missing_value(v)) ++missing;
  print_summary(json{{"command", "import"},
                     {"days", ds.time().n_days()},
                     {"pixels", ds.grid().n_pixels()},
                     {"missing_cells", missing},
                     {"output", a.out}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clearsky-bounded quantile mapping for gridded daily GHI"};
  app.require_subcommand(1);

  std::string config_path;

  // climatology
  auto* climatology = app.add_subcommand("climatology", "Average yearly clearsky datasets");
  std::vector<std::string> clim_inputs;
  std::string clim_out;
  climatology->add_option("inputs", clim_inputs, "Yearly clearsky dataset directories")
      ->required();
  climatology->add_option("--out", clim_out, "Output climatology directory")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit per-pixel monthly transfer functions");
  Configured fit_obs, fit_mod, fit_clim, fit_model, fit_probs, fit_train;
  double fit_epsilon = 0;
  std::size_t fit_min_sample = 0;
  unsigned fit_threads = 0;
  fit_cmd->add_option("--config", config_path, "JSON run configuration");
  fit_obs.option = fit_cmd->add_option("--obs", fit_obs.flag_value, "Observed dataset directory");
  fit_mod.option = fit_cmd->add_option("--mod", fit_mod.flag_value, "Model dataset directory");
  fit_clim.option = fit_cmd->add_option("--clim", fit_clim.flag_value, "Climatology directory");
  fit_model.option = fit_cmd->add_option("--out", fit_model.flag_value, "Model output directory");
  fit_probs.option =
      fit_cmd->add_option("--probs", fit_probs.flag_value, "Probabilities (start:stop:step)");
  fit_train.option =
      fit_cmd->add_option("--train-years", fit_train.flag_value, "Training years (a:b or list)");
  auto* fit_eps_opt = fit_cmd->add_option("--epsilon", fit_epsilon, "Clearsky-index clamp margin");
  auto* fit_min_opt =
      fit_cmd->add_option("--min-sample", fit_min_sample, "Minimum pooled sample size");
  auto* fit_threads_opt = fit_cmd->add_option("--threads", fit_threads, "Worker thread cap");

  // apply
  auto* apply_cmd = app.add_subcommand("apply", "Correct a dataset with a fitted model");
  Configured apply_model, apply_mod, apply_clim, apply_out, apply_years;
  unsigned apply_threads = 0;
  apply_cmd->add_option("--config", config_path, "JSON run configuration");
  apply_model.option =
      apply_cmd->add_option("--model", apply_model.flag_value, "Fitted model directory");
  apply_mod.option =
      apply_cmd->add_option("--mod", apply_mod.flag_value, "Dataset directory to correct");
  apply_clim.option =
      apply_cmd->add_option("--clim", apply_clim.flag_value, "Climatology directory");
  apply_out.option = apply_cmd->add_option("--out", apply_out.flag_value, "Output directory");
  apply_years.option = apply_cmd->add_option(
      "--test-years", apply_years.flag_value, "Correct only this year slice (a:b or list)");
  auto* apply_threads_opt = apply_cmd->add_option("--threads", apply_threads, "Worker thread cap");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Monthly bias table and percent-bias raster");
  Configured stats_obs, stats_mod;
  std::string stats_years, stats_prefix;
  bool stats_yearly_mean = false;
  stats_cmd->add_option("--config", config_path, "JSON run configuration");
  stats_obs.option =
      stats_cmd->add_option("--obs", stats_obs.flag_value, "Observed dataset directory");
  stats_mod.option =
      stats_cmd->add_option("--mod", stats_mod.flag_value, "Model dataset directory");
  auto* stats_years_opt =
      stats_cmd->add_option("--years,--test-years", stats_years, "Evaluation years (a:b or list)");
  stats_cmd->add_option("--out-prefix", stats_prefix, "Output path prefix")->required();
  stats_cmd->add_flag("--yearly-mean", stats_yearly_mean,
                      "Average per-year percent-bias fields instead of pooling days");

  // fanova
  auto* fanova_cmd = app.add_subcommand("fanova", "2x2 factorial decomposition of bias fields");
  std::string f11, f12, f21, f22, fanova_prefix;
  fanova_cmd->add_option("--b11", f11, "Bias field raster (row 1, col 1)")->required();
  fanova_cmd->add_option("--b12", f12, "Bias field raster (row 1, col 2)")->required();
  fanova_cmd->add_option("--b21", f21, "Bias field raster (row 2, col 1)")->required();
  fanova_cmd->add_option("--b22", f22, "Bias field raster (row 2, col 2)")->required();
  fanova_cmd->add_option("--out-prefix", fanova_prefix, "Output path prefix")->required();

  // regions
  auto* regions_cmd = app.add_subcommand("regions", "Aggregate a bias field by climate region");
  std::string regions_field, regions_table, regions_out;
  regions_cmd->add_option("--field", regions_field, "Bias field raster directory")->required();
  regions_cmd->add_option("--table", regions_table, "Region table CSV")->required();
  regions_cmd->add_option("--out", regions_out, "Output CSV path")->required();

  // import
  auto* import_cmd = app.add_subcommand("import", "Import a CSV into a dataset directory");
  ImportArgs imp;
  import_cmd->add_option("csv", imp.csv, "Input CSV path")->required();
  import_cmd->add_option("--out", imp.out, "Output dataset directory")->required();
  import_cmd->add_option("--calendar", imp.calendar, "gregorian, noleap_365 or fixed_360");
  import_cmd->add_option("--start", imp.start, "Start date YYYY-MM-DD");
  import_cmd->add_option("--days", imp.n_days, "Number of days");
  import_cmd->add_option("--var", imp.variable, "Variable name");
  import_cmd->add_option("--units", imp.units, "Units");
  import_cmd->add_option("--like", imp.like, "Copy grid and time index from this dataset");
  import_cmd->add_option("--lat0", imp.lat0, "First latitude");
  import_cmd->add_option("--dlat", imp.dlat, "Latitude spacing");
  import_cmd->add_option("--nlat", imp.n_lat, "Latitude count");
  import_cmd->add_option("--lon0", imp.lon0, "First longitude");
  import_cmd->add_option("--dlon", imp.dlon, "Longitude spacing");
  import_cmd->add_option("--nlon", imp.n_lon, "Longitude count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitValidation;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::load(config_path);

    if (climatology->parsed()) return cmd_climatology(clim_inputs, clim_out);

    if (fit_cmd->parsed()) {
      cfg.obs = fit_obs.resolve(cfg.obs);
      cfg.mod = fit_mod.resolve(cfg.mod);
      cfg.climatology = fit_clim.resolve(cfg.climatology);
      cfg.model = fit_model.resolve(cfg.model);
      cfg.probs = fit_probs.resolve(cfg.probs);
      cfg.train_years = fit_train.resolve(cfg.train_years);
      if (fit_eps_opt->count()) cfg.epsilon = fit_epsilon;
      if (fit_min_opt->count()) cfg.min_sample = fit_min_sample;
      return cmd_fit(cfg, fit_threads, fit_threads_opt->count() > 0);
    }

    if (apply_cmd->parsed()) {
      cfg.model = apply_model.resolve(cfg.model);
      cfg.mod = apply_mod.resolve(cfg.mod);
      cfg.climatology = apply_clim.resolve(cfg.climatology);
      cfg.output = apply_out.resolve(cfg.output);
      cfg.test_years = apply_years.resolve(cfg.test_years);
      return cmd_apply(cfg, apply_threads, apply_threads_opt->count() > 0);
    }

    if (stats_cmd->parsed()) {
      cfg.obs = stats_obs.resolve(cfg.obs);
      cfg.mod = stats_mod.resolve(cfg.mod);
      return cmd_stats(cfg, stats_years, stats_years_opt->count() > 0, stats_prefix,
                       stats_yearly_mean);
    }

    if (fanova_cmd->parsed()) return cmd_fanova(f11, f12, f21, f22, fanova_prefix);
    if (regions_cmd->parsed()) return cmd_regions(regions_field, regions_table, regions_out);
    if (import_cmd->parsed()) return cmd_import(imp);

    std::cerr << "error: no subcommand given\n";
    return kExitValidation;
  } catch (const solarqm::InsufficientData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficientData;
  } catch (const solarqm::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const solarqm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
