#include "stockhybrid/assessor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "state_space.hpp"
#include "stockhybrid/optimizer.hpp"

namespace stockhybrid::assess {

const char* to_string(RecruitmentModel m) {
  return m == RecruitmentModel::random_walk ? "random_walk" : "beverton_holt";
}

const char* to_string(ForecastPolicy p) {
  return p == ForecastPolicy::status_quo ? "status_quo" : "mean_last_3";
}

RecruitmentModel recruitment_model_from_string(const std::string& s) {
  if (s == "random_walk") return RecruitmentModel::random_walk;
  if (s == "beverton_holt") return RecruitmentModel::beverton_holt;
  fail(ErrorCode::parse, "unknown recruitment model '" + s + "'");
}

ForecastPolicy forecast_policy_from_string(const std::string& s) {
  if (s == "status_quo") return ForecastPolicy::status_quo;
  if (s == "mean_last_3") return ForecastPolicy::mean_last_3;
  fail(ErrorCode::parse, "unknown forecast policy '" + s + "'");
}

void AssessorConfig::validate() const {
  ages.validate();
  if (optimizer.max_evaluations < 10) fail(ErrorCode::config, "max_evaluations too small");
  if (!(optimizer.tolerance > 0.0)) fail(ErrorCode::config, "optimizer tolerance must be > 0");
  if (optimizer.restarts < 1) fail(ErrorCode::config, "at least one optimizer start is needed");
  if (optimizer.polish_rounds < 0) fail(ErrorCode::config, "polish_rounds must be >= 0");
  if (!(variance_floor > 0.0)) fail(ErrorCode::config, "variance floor must be positive");
  if (!(prior_variance > 0.0)) fail(ErrorCode::config, "prior variance must be positive");
  if (min_years < 2) fail(ErrorCode::config, "min_years must be at least 2");
}

std::string AssessorConfig::fingerprint() const {
  std::ostringstream s;
  s.precision(17);
  s << ages.min_age << ',' << ages.max_age << ',' << ages.plus_group << ';'
    << to_string(recruitment) << ';' << to_string(forecast_policy) << ';'
    << optimizer.max_evaluations << ',' << optimizer.tolerance << ',' << optimizer.restarts << ','
    << optimizer.jitter << ',' << optimizer.polish_rounds << ',' << optimizer.seed << ';'
    << variance_floor << ',' << prior_variance << ',' << min_years;
  return s.str();
}

double FittedAssessment::parameter(const std::string& name) const {
  for (std::size_t i = 0; i < parameter_names.size(); ++i) {
    if (parameter_names[i] == name) return theta[i];
  }
  fail(ErrorCode::invalid_argument, "no parameter named '" + name + "'");
}

const StateEstimate& FittedAssessment::smoothed_at(int year) const {
  if (smoothed.empty()) fail(ErrorCode::not_converged, "assessment has no smoothed states");
  if (year < first_year || year > last_data_year) {
    fail(ErrorCode::out_of_range, "year " + std::to_string(year) + " outside the fitted years");
  }
  return smoothed[static_cast<std::size_t>(year - first_year)];
}

const StateEstimate& FittedAssessment::filtered_at(int year) const {
  if (year < first_year || year > last_data_year || filtered.empty()) {
    fail(ErrorCode::out_of_range, "year " + std::to_string(year) + " outside the fitted years");
  }
  return filtered[static_cast<std::size_t>(year - first_year)];
}

std::vector<Parameter> parameter_layout(const ObservationSeries& obs, const BiologySeries& bio,
                                        const AssessorConfig& cfg) {
  return detail::StateSpaceModel(obs, bio, cfg).layout();
}

double nll(std::span<const double> theta, const ObservationSeries& obs, const BiologySeries& bio,
           const AssessorConfig& cfg) {
  return detail::StateSpaceModel(obs, bio, cfg).nll(theta);
}

FilterOutput run_filter(std::span<const double> theta, const ObservationSeries& obs,
                        const BiologySeries& bio, const AssessorConfig& cfg, bool smooth) {
  return detail::StateSpaceModel(obs, bio, cfg).run(theta, true, smooth);
}

FittedAssessment fit(const ObservationSeries& obs, const BiologySeries& bio,
                     const AssessorConfig& cfg) {
  const detail::StateSpaceModel model(obs, bio, cfg);
  const auto& layout = model.layout();
  const std::size_t n = layout.size();
  std::vector<double> lower(n), upper(n), start(n), steps(n);
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = layout[i].lower;
    upper[i] = layout[i].upper;
    start[i] = std::clamp(layout[i].start, lower[i], upper[i]);
    steps[i] = layout[i].step;
  }
  const auto objective = [&model](std::span<const double> theta) { return model.nll(theta); };
  const auto& settings = cfg.optimizer;
  opt::NelderMeadOptions options{settings.max_evaluations, settings.tolerance};

  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> jitter(-settings.jitter, settings.jitter);
  opt::NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  for (int r = 0; r < settings.restarts; ++r) {
    std::vector<double> x0 = start;
    if (r > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        x0[i] = std::clamp(x0[i] + jitter(rng), lower[i], upper[i]);
      }
    }
    auto run = opt::nelder_mead(objective, x0, steps, lower, upper, options);
    evaluations += run.evaluations;
    // A fresh simplex at the optimum guards against premature collapse.
    for (int k = 0; k < settings.polish_rounds; ++k) {
      auto again = opt::nelder_mead(objective, run.x, steps, lower, upper, options);
      evaluations += again.evaluations;
      const double gain = run.value - again.value;
      if (again.value <= run.value) run = std::move(again);
      if (!(gain > settings.tolerance)) break;
    }
    if (run.value < best.value) best = std::move(run);
  }

  FittedAssessment out;
  out.config = cfg;
  out.first_year = model.first_year();
  out.last_data_year = model.last_year();
  for (const auto& p : layout) out.parameter_names.push_back(p.name);
  out.theta = best.x;
  out.evaluations = evaluations;
  out.converged = best.converged && std::isfinite(best.value);
  const auto states = model.run(out.theta, true, out.converged);
  out.nll = states.nll;
  out.filtered = states.filtered;
  if (out.converged && states.smoothed.size() == states.filtered.size()) {
    out.smoothed = states.smoothed;
  } else {
    out.converged = false;
  }
  const auto decoded = model.decode(out.theta);
  out.selectivity = decoded.selectivity;
  const auto m = model.mortality(out.last_data_year);
  const auto w = model.weight(out.last_data_year);
  const auto mat = model.maturity(out.last_data_year);
  out.natural_mortality.assign(m.begin(), m.end());
  out.weight.assign(w.begin(), w.end());
  out.maturity.assign(mat.begin(), mat.end());
  out.bh_alpha = decoded.bh_alpha;
  out.bh_beta = decoded.bh_beta;
  return out;
}

AbundanceVector estimate(const FittedAssessment& m, int year) {
  if (!m.converged) fail(ErrorCode::not_converged, "assessment did not converge");
  const auto& state = year == m.last_data_year ? m.filtered_at(year) : m.smoothed_at(year);
  AbundanceVector out{year, m.ages(), {}};
  out.values.resize(static_cast<std::size_t>(m.ages().size()));
  for (int a = 0; a < m.ages().size(); ++a) out.values[a] = std::exp(state.mean[a]);
  return out;
}

double forecast_f(const FittedAssessment& m) {
  const int fi = m.ages().size();
  if (m.config.forecast_policy == ForecastPolicy::status_quo) {
    return std::exp(m.filtered_at(m.last_data_year).mean[fi]);
  }
  const int first = std::max(m.first_year, m.last_data_year - 2);
  double sum = 0.0;
  for (int y = first; y <= m.last_data_year; ++y) sum += std::exp(m.smoothed_at(y).mean[fi]);
  return sum / (m.last_data_year - first + 1);
}

AbundanceVector project_one_year(const FittedAssessment& m, const AbundanceVector& n) {
  const int width = m.ages().size();
  if (static_cast<int>(n.values.size()) != width) {
    fail(ErrorCode::invalid_argument, "projection: abundance has the wrong number of ages");
  }
  const double f = forecast_f(m);
  AbundanceVector next{n.year + 1, n.ages, std::vector<double>(static_cast<std::size_t>(width))};
  auto z = [&](int a) { return m.selectivity[a] * f + m.natural_mortality[a]; };
  for (int a = 0; a + 1 < width; ++a) next.values[a + 1] = n.values[a] * std::exp(-z(a));
  if (m.ages().plus_group) next.values[width - 1] += n.values[width - 1] * std::exp(-z(width - 1));
  if (m.config.recruitment == RecruitmentModel::random_walk) {
    next.values[0] = n.values[0];
  } else {
    double s = 0.0;
    for (int a = 0; a < width; ++a) s += m.weight[a] * m.maturity[a] * n.values[a];
    next.values[0] = m.bh_alpha * s / (1.0 + m.bh_beta * s);
  }
  return next;
}

AbundanceVector forecast(const FittedAssessment& m, int horizon) {
  if (horizon < 1) fail(ErrorCode::invalid_argument, "forecast horizon must be >= 1");
  if (horizon > 3) fail(ErrorCode::unsupported, "forecast horizons beyond 3 are unsupported");
  if (!m.converged) fail(ErrorCode::not_converged, "assessment did not converge");
  AbundanceVector n = estimate(m, m.last_data_year);
  for (int k = 0; k < horizon; ++k) n = project_one_year(m, n);
  return n;
}

double derive_parameter(const AbundanceVector& n, const BiologySeries& bio, ParameterKind kind) {
  return kind == ParameterKind::recruitment ? recruitment_of(n) : ssb(n, bio);
}

}  // namespace stockhybrid::assess
