#pragma once

// Age-structured state-space assessment model.
//
// Latent state per year: x_t = (log n_{a,t} for every age, log f_t), with
// fishing mortality F_{a,t} = S_a * f_t, logistic selectivity S_a, and log f_t
// a random walk. Survivors follow log n_{a+1,t+1} = log n_{a,t} - F - M;
// recruitment is a random walk on log scale or Beverton-Holt in the previous
// year's SSB. Catch-at-age follows the Baranov equation and survey indices
// are q * n * exp(-timing * Z), all observed with log-normal error.
//
// Parameters are estimated by maximising the prediction-error likelihood of
// an extended Kalman filter with a bounded Nelder-Mead search; states are
// then smoothed with the Rauch-Tung-Striebel recursion.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stockhybrid/core.hpp"

namespace stockhybrid::assess {

enum class RecruitmentModel { random_walk, beverton_holt };
enum class ForecastPolicy { status_quo, mean_last_3 };

const char* to_string(RecruitmentModel m);
const char* to_string(ForecastPolicy p);
RecruitmentModel recruitment_model_from_string(const std::string& s);
ForecastPolicy forecast_policy_from_string(const std::string& s);

struct OptimizerSettings {
  int max_evaluations = 20000;  // per simplex run
  double tolerance = 1e-6;      // on the negative log-likelihood
  int restarts = 1;             // independent starts: defaults, then jittered defaults
  double jitter = 0.25;         // half-width of the uniform start perturbation
  int polish_rounds = 2;        // fresh simplex restarts from each run's optimum
  std::uint64_t seed = 20240917;
};

struct AssessorConfig {
  AgeRange ages;
  RecruitmentModel recruitment = RecruitmentModel::random_walk;
  ForecastPolicy forecast_policy = ForecastPolicy::status_quo;
  OptimizerSettings optimizer;
  double variance_floor = 1e-6;
  double prior_variance = 1.0;
  int min_years = 10;

  void validate() const;
  /// Stable textual digest of every field, used in cache keys.
  std::string fingerprint() const;
};

struct Parameter {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double start = 0.0;
  double step = 0.5;
};

enum class StateKind { filtered, smoothed, forecast };

struct StateEstimate {
  int year = 0;
  StateKind kind = StateKind::filtered;
  Eigen::VectorXd mean;  // (log n per age..., log f)
  Eigen::MatrixXd cov;
};

struct FittedAssessment {
  AssessorConfig config;
  int first_year = 0;
  int last_data_year = 0;
  std::vector<std::string> parameter_names;
  std::vector<double> theta;
  double nll = 0.0;
  bool converged = false;
  int evaluations = 0;
  std::vector<StateEstimate> filtered;
  std::vector<StateEstimate> smoothed;  // empty unless converged

  // Process-model pieces needed to project beyond the data.
  std::vector<double> selectivity;
  std::vector<double> natural_mortality;  // last data year
  std::vector<double> weight;             // last data year
  std::vector<double> maturity;           // last data year
  double bh_alpha = 0.0;
  double bh_beta = 0.0;

  const AgeRange& ages() const { return config.ages; }
  double parameter(const std::string& name) const;
  const StateEstimate& smoothed_at(int year) const;
  const StateEstimate& filtered_at(int year) const;
};

/// Builds the parameter vector layout for a dataset: names, bounds and the
/// data-informed default start.
std::vector<Parameter> parameter_layout(const ObservationSeries& obs, const BiologySeries& bio,
                                        const AssessorConfig& cfg);

/// Negative log-likelihood; +inf when the filter breaks down numerically.
double nll(std::span<const double> theta, const ObservationSeries& obs, const BiologySeries& bio,
           const AssessorConfig& cfg);

/// Filtered (and, on request, smoothed) states at a fixed theta.
struct FilterOutput {
  double nll = 0.0;
  std::vector<StateEstimate> filtered;
  std::vector<StateEstimate> smoothed;
  std::vector<double> filtered_trace_before_update;
  std::vector<double> filtered_trace_after_update;
};
FilterOutput run_filter(std::span<const double> theta, const ObservationSeries& obs,
                        const BiologySeries& bio, const AssessorConfig& cfg, bool smooth);

FittedAssessment fit(const ObservationSeries& obs, const BiologySeries& bio,
                     const AssessorConfig& cfg);

/// Smoothed abundance for `year` (filtered at the last data year, where the
/// two coincide). Back-transformed as exp of the latent mean.
AbundanceVector estimate(const FittedAssessment& m, int year);

/// Fishing intensity used for projections under the configured policy.
double forecast_f(const FittedAssessment& m);
/// One deterministic year of the process mean.
AbundanceVector project_one_year(const FittedAssessment& m, const AbundanceVector& n);
/// horizon in [1, 3].
AbundanceVector forecast(const FittedAssessment& m, int horizon);

/// SSB uses the biology of n.year, which must be covered by `bio`.
double derive_parameter(const AbundanceVector& n, const BiologySeries& bio, ParameterKind kind);

struct RetrospectiveMatrix {
  int first_year = 0;
  std::vector<int> model_years;
  std::vector<bool> converged;
  std::vector<StockParameterSeries> recruitment;  // one per model, up to its last year
  std::vector<StockParameterSeries> ssb;

  const StockParameterSeries& series(ParameterKind kind, std::size_t model) const;
  int index_of(int model_year) const;  // -1 when absent
};

using FitProvider = std::function<std::shared_ptr<const FittedAssessment>(int last_year)>;

RetrospectiveMatrix retrospective_matrix(const ObservationSeries& obs, const BiologySeries& bio,
                                         const AssessorConfig& cfg, int first_t);
RetrospectiveMatrix retrospective_matrix(const BiologySeries& bio, int first_year, int first_t,
                                         int last_t, const FitProvider& provider);

/// Mean relative revision of the terminal estimates over `peels` peels.
/// Peels whose reference value is zero or absent are skipped and reported
/// through `warnings`.
double mohns_rho(const RetrospectiveMatrix& retro, ParameterKind kind, int peels,
                 std::vector<std::string>* warnings = nullptr);

std::string to_text(const FittedAssessment& m);
FittedAssessment assessment_from_text(const std::string& text);

}  // namespace stockhybrid::assess
