#pragma once

// Assessment-plus-trees hybrid: training tuples built from successive
// assessments, an expanding-window backtest, and its scoring.

#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "stockhybrid/assessor.hpp"
#include "stockhybrid/core.hpp"
#include "stockhybrid/gbt.hpp"

namespace stockhybrid::hybrid {

enum class Task { estimation, forecast };
enum class FeatureVariant { abundance_plus_obs, ssb_plus_obs, ssb_only };
/// final_model: every label comes from the assessment on all data.
/// strict_past: at evaluation year t, labels come from the assessment on
/// data through t.
enum class LabelPolicy { final_model, strict_past };
/// direct: trees predict the label. residual: trees predict label minus
/// the assessment value, which is added back. log_ratio: trees predict
/// log(label / assessment value) and the assessment value is scaled by
/// exp of the prediction.
enum class Correction { direct, residual, log_ratio };

const char* to_string(Task v);
const char* to_string(FeatureVariant v);
const char* to_string(LabelPolicy v);
const char* to_string(Correction v);
Task task_from_string(const std::string& s);
FeatureVariant feature_variant_from_string(const std::string& s);
LabelPolicy label_policy_from_string(const std::string& s);
Correction correction_from_string(const std::string& s);

struct TaskSpec {
  Task task = Task::forecast;
  ParameterKind target = ParameterKind::recruitment;
  FeatureVariant variant = FeatureVariant::abundance_plus_obs;
  LabelPolicy label_policy = LabelPolicy::final_model;
  Correction correction = Correction::log_ratio;

  void validate() const;
  /// "<task>/<target>/<variant>/<label policy>/<correction>"
  std::string id() const;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Feature variants evaluated for a target.
std::vector<FeatureVariant> variants_for(ParameterKind target);

/// Where a feature value came from. model_year is the last data year of the
/// assessment that produced it (-1 for a raw observation); data_year is the
/// latest observation year the value depends on.
struct FeatureSource {
  std::string feature;
  int model_year = -1;
  int data_year = 0;
};

struct TrainingTuple {
  int feature_year = 0;  // i: the year whose data and assessment feed the features
  int target_year = 0;   // i for estimation, i + 1 for forecasting
  FeatureVector features;
  double baseline = 0.0;  // the assessment's own value for the target
  double label = kMissing;
  int label_model_year = -1;
  std::vector<FeatureSource> provenance;
};

struct Dataset {
  std::vector<TrainingTuple> train;
  TrainingTuple test;
  std::vector<int> dropped;  // feature years without a usable assessment or label
};

using ModelProvider = assess::FitProvider;

/// Features of the tuple for feature year i, from assessment `model` (which
/// must cover data through i) and the observations of year i.
TrainingTuple make_tuple(const TaskSpec& spec, const assess::FittedAssessment& model,
                         const ObservationSeries& obs, const BiologySeries& bio, int i);

/// Target values for every year up to label_year, from the assessment on
/// data through label_year.
StockParameterSeries make_labels(const ModelProvider& models, const BiologySeries& bio,
                                 ParameterKind target, int label_year);

/// Training tuples for feature years before t and the test tuple at t.
/// Feature years whose assessment did not converge, has fewer than
/// `min_years` data years, or lacks a label are dropped.
Dataset build_dataset(const TaskSpec& spec, const ModelProvider& models,
                      const ObservationSeries& obs, const BiologySeries& bio,
                      const StockParameterSeries& labels, int t, int min_years);

/// Provenance violations: features depending on data after their tuple's
/// feature year, or strict-past labels from assessments past the test year.
std::vector<std::string> audit(const Dataset& d, LabelPolicy policy);

/// What the trees are trained on for a tuple, and how their output turns
/// into the hybrid value.
double training_target(Correction c, const TrainingTuple& tuple);
double apply_correction(Correction c, double baseline, double tree_output);

struct TaskResult {
  int model_year = 0;
  int target_year = 0;
  double baseline = 0.0;
  double hybrid = 0.0;
  double label = 0.0;
  Dataset dataset;
  gbt::TreeEnsemble ensemble;
};

/// One evaluation year. Training labels follow spec.label_policy; the
/// evaluation label always comes from the assessment through final_year.
TaskResult run_task(const TaskSpec& spec, const ModelProvider& models,
                    const ObservationSeries& obs, const BiologySeries& bio, int t,
                    const gbt::HyperParams& hp, int final_year, int min_years);

double rmse(std::span<const double> pred, std::span<const double> truth);
double r_squared(std::span<const double> pred, std::span<const double> truth);

struct ReportRow {
  int model_year = 0;
  int target_year = 0;
  double baseline = 0.0;
  double hybrid = 0.0;
  double label = 0.0;
};

struct SkippedYear {
  int model_year = 0;
  std::string reason;
};

struct RowDetail {
  Dataset dataset;
  gbt::TreeEnsemble ensemble;
};

struct BacktestReport {
  std::string stock;
  TaskSpec spec;
  int k = 0;
  std::vector<ReportRow> rows;
  std::vector<SkippedYear> skipped;
  double ml_rmse = kMissing;
  double ml_r2 = kMissing;
  double baseline_rmse = kMissing;
  double baseline_r2 = kMissing;
  /// Lowest hybrid RMSE among the variants run for this target.
  bool selected = true;
  std::vector<RowDetail> details;  // parallel to rows when kept
};

/// Recomputes the four aggregates from the rows (R^2 is kMissing when the
/// labels have no variance).
void aggregate(BacktestReport& r);

/// Thread-safe store of fitted assessments keyed by the data through the
/// last data year and the assessor settings. Concurrent requests for one
/// key fit it once.
class ModelCache {
 public:
  using Model = std::shared_ptr<const assess::FittedAssessment>;

  Model get(const ObservationSeries& obs, const BiologySeries& bio,
            const assess::AssessorConfig& cfg, int last_year);
  /// Fits the given years on `threads` workers.
  void prefetch(const ObservationSeries& obs, const BiologySeries& bio,
                const assess::AssessorConfig& cfg, const std::vector<int>& years, int threads);
  ModelProvider provider(const ObservationSeries& obs, const BiologySeries& bio,
                         const assess::AssessorConfig& cfg);

  std::size_t size() const;
  std::size_t fits() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<Model>> entries_;
  std::size_t fits_ = 0;
};

/// Hash of every observation and biology value.
std::string data_fingerprint(const ObservationSeries& obs, const BiologySeries& bio);

struct BacktestOptions {
  std::string stock = "stock";
  int k = 17;
  gbt::HyperParams hp;
  assess::AssessorConfig assessor;
  int threads = 1;
  bool keep_details = false;
  ModelCache* cache = nullptr;  // a private cache is used when null
};

/// Model years evaluated: T-k..T for estimation, T-k-1..T-1 for forecasting.
std::vector<int> evaluation_years(Task task, int last_year, int k);

BacktestReport backtest(const TaskSpec& spec, const ObservationSeries& obs,
                        const BiologySeries& bio, const BacktestOptions& opts);

/// Every feature variant of spec.target, with the lowest-RMSE one marked
/// selected.
std::vector<BacktestReport> backtest_target(const TaskSpec& spec, const ObservationSeries& obs,
                                            const BiologySeries& bio,
                                            const BacktestOptions& opts);

}  // namespace stockhybrid::hybrid
