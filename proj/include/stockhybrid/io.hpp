#pragma once

// Files, configuration and the batch workflow behind the command line.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stockhybrid/assessor.hpp"
#include "stockhybrid/gbt.hpp"
#include "stockhybrid/hybrid.hpp"
#include "stockhybrid/shap.hpp"
#include "stockhybrid/simulator.hpp"

namespace stockhybrid::io {

// ---- plain files ----------------------------------------------------------

std::string read_file(const std::string& path);
/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Delimited text with a header line. Blank lines and lines starting with
/// '#' are skipped; `lines` holds the 1-based source line of each row.
struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;

  /// Column index, or a schema error naming the file.
  std::size_t column(const std::string& name) const;
};

Table parse_table(const std::string& text, char sep, const std::string& path = "<memory>");
Table read_table(const std::string& path, char sep);

/// "%.17g", with "NA" for missing values.
std::string format_number(double v);
/// Inverse of format_number; `where` prefixes the error message.
double parse_number(const std::string& s, const std::string& where);

// ---- stock data -----------------------------------------------------------
//
// observations.csv: fleet,kind,timing,year,age,value
//   kind is "catch" or "survey"; timing is empty for catch fleets; age is
//   empty for an aggregate fleet; value is positive or "NA". Years absent
//   inside a fleet's span load as missing.
// biology.csv: quantity,year,age,value
//   quantity is weight (kg), maturity (fraction) or natural_mortality.

struct StockData {
  ObservationSeries observations;
  BiologySeries biology;
};

ObservationSeries load_observations(const std::string& path);
BiologySeries load_biology(const std::string& path, const AgeRange& ages);
StockData load_stock(const std::string& observations_path, const std::string& biology_path,
                     const AgeRange& ages);

ObservationSeries parse_observations(const Table& t);
BiologySeries parse_biology(const Table& t, const AgeRange& ages);

std::string observations_csv(const ObservationSeries& obs);
std::string biology_csv(const BiologySeries& bio);
/// truth.csv: year,age,abundance,fishing_mortality
std::string truth_csv(const sim::TrueTrajectory& truth);
/// truth_stock.csv: year,recruitment,ssb,f,environment
std::string truth_stock_csv(const sim::TrueTrajectory& truth);

// ---- configuration --------------------------------------------------------

struct TaskRequest {
  hybrid::Task task = hybrid::Task::forecast;
  ParameterKind target = ParameterKind::recruitment;
};

struct RunConfig {
  std::string stock = "stock";
  std::uint64_t seed = 1;
  std::string output = "out";
  /// Input files; when absent the stock is simulated from `simulation`.
  std::optional<std::string> observations_path;
  std::optional<std::string> biology_path;
  sim::SimConfig simulation = sim::SimConfig::defaults();
  assess::AssessorConfig assessor;
  gbt::HyperParams gbt;
  std::vector<TaskRequest> tasks;
  hybrid::LabelPolicy label_policy = hybrid::LabelPolicy::final_model;
  hybrid::Correction correction = hybrid::Correction::log_ratio;
  int k = 17;
  int threads = 1;
  int retro_peels = 5;
  int forecast_horizon = 3;

  bool simulated() const { return !observations_path.has_value(); }
  /// Pushes `seed` into the simulation and the optimizer.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

/// Every task and target pair, in a fixed order.
std::vector<TaskRequest> all_tasks();

/// YAML with sections stock, seed, output, data, simulation, assessor, gbt,
/// backtest and retro. Unknown keys are errors. Relative data paths are
/// resolved against the config file's directory.
RunConfig parse_run_config(const std::string& yaml_text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
std::string run_config_yaml(const RunConfig& cfg);

/// The stock named by the config: loaded from files or simulated.
StockData stock_data(const RunConfig& cfg);

// ---- reports --------------------------------------------------------------
//
// report.tsv is tidy: one "summary" record per report, one "row" record
// per evaluation year and one "skipped" record per skipped year.

std::string report_tsv(const std::vector<hybrid::BacktestReport>& reports);
std::vector<hybrid::BacktestReport> parse_report_tsv(const std::string& text);

std::string format_rmse(double v);  // "%.0f"
std::string format_r2(double v);    // "%.3f"
/// Aligned summary table plus per-year tables.
std::string render_reports(const std::vector<hybrid::BacktestReport>& reports);

/// retro.tsv: quantity,year then one column per model year (M<t>).
std::string retro_tsv(const assess::RetrospectiveMatrix& retro);
assess::RetrospectiveMatrix parse_retro_tsv(const std::string& text);

struct ShapSample {
  std::string model;   // task id of the ensemble explained
  std::string sample;  // "train:<year>" or "test:<year>"
  FeatureVector features;
  shap::Attribution attribution;
};

/// shap.tsv: model,sample,feature,feature_value,phi. Each sample also has
/// a "(base)" row and a "(prediction)" row carrying those values in phi.
std::string shap_tsv(const std::vector<ShapSample>& samples);
std::vector<ShapSample> parse_shap_tsv(const std::string& text);

struct ModelImportance {
  std::string model;
  std::vector<shap::Importance> ranking;
};
/// importance.tsv: model,rank,feature,mean_abs_phi
std::string importance_tsv(const std::vector<ModelImportance>& models);

// ---- commands -------------------------------------------------------------

/// Runs one subcommand, writing into cfg.output. Returns the files written.
/// Throws on failure; a backtest that produces some but not all reports
/// writes what it has and then throws an empty_report error.
std::vector<std::string> run_command(const std::string& command, const RunConfig& cfg);

std::vector<std::string> command_names();

}  // namespace stockhybrid::io
