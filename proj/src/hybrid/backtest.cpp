#include <algorithm>
#include <cmath>

#include "stockhybrid/hybrid.hpp"

namespace stockhybrid::hybrid {

double training_target(Correction c, const TrainingTuple& tuple) {
  switch (c) {
    case Correction::direct: return tuple.label;
    case Correction::residual: return tuple.label - tuple.baseline;
    case Correction::log_ratio:
      if (!(tuple.label > 0.0 && tuple.baseline > 0.0)) {
        fail(ErrorCode::domain, "log-ratio correction needs positive labels and baselines");
      }
      return std::log(tuple.label / tuple.baseline);
  }
  return tuple.label;
}

double apply_correction(Correction c, double baseline, double tree_output) {
  switch (c) {
    case Correction::direct: return tree_output;
    case Correction::residual: return baseline + tree_output;
    case Correction::log_ratio: return baseline * std::exp(tree_output);
  }
  return tree_output;
}

TaskResult run_task(const TaskSpec& spec, const ModelProvider& models,
                    const ObservationSeries& obs, const BiologySeries& bio, int t,
                    const gbt::HyperParams& hp, int final_year, int min_years) {
  const int label_year = spec.label_policy == LabelPolicy::final_model ? final_year : t;
  const auto train_labels = make_labels(models, bio, spec.target, label_year);
  TaskResult out;
  out.dataset = build_dataset(spec, models, obs, bio, train_labels, t, min_years);

  const auto final_labels = label_year == final_year
                                ? train_labels
                                : make_labels(models, bio, spec.target, final_year);
  auto& test = out.dataset.test;
  if (!final_labels.has(test.target_year)) {
    fail(ErrorCode::out_of_range,
         "no evaluation label for year " + std::to_string(test.target_year));
  }
  test.label = final_labels.at(test.target_year);
  test.label_model_year = final_year;

  std::vector<FeatureVector> x;
  std::vector<double> y;
  for (const auto& tuple : out.dataset.train) {
    x.push_back(tuple.features);
    y.push_back(training_target(spec.correction, tuple));
  }
  out.ensemble = gbt::fit(x, y, hp);
  const double correction = gbt::predict(out.ensemble, test.features);

  out.model_year = t;
  out.target_year = test.target_year;
  out.baseline = test.baseline;
  out.hybrid = apply_correction(spec.correction, test.baseline, correction);
  out.label = test.label;
  return out;
}

std::vector<int> evaluation_years(Task task, int last_year, int k) {
  const int last = task == Task::estimation ? last_year : last_year - 1;
  std::vector<int> years;
  for (int t = last - k; t <= last; ++t) years.push_back(t);
  return years;
}

BacktestReport backtest(const TaskSpec& spec, const ObservationSeries& obs,
                        const BiologySeries& bio, const BacktestOptions& opts) {
  spec.validate();
  opts.hp.validate();
  opts.assessor.validate();
  if (opts.k < 5) fail(ErrorCode::invalid_argument, "backtest needs k >= 5");
  const int final_year = obs.last_year;
  const auto years = evaluation_years(spec.task, final_year, opts.k);
  const int min_years = opts.assessor.min_years;
  if (years.front() - obs.first_year + 1 < min_years) {
    fail(ErrorCode::insufficient_data,
         "first evaluation year " + std::to_string(years.front()) + " leaves fewer than " +
             std::to_string(min_years) + " years of data");
  }

  ModelCache own;
  ModelCache& cache = opts.cache ? *opts.cache : own;
  std::vector<int> fits;
  for (int t = obs.first_year + min_years - 1; t <= final_year; ++t) fits.push_back(t);
  cache.prefetch(obs, bio, opts.assessor, fits, opts.threads);
  const auto models = cache.provider(obs, bio, opts.assessor);
  const auto final_model = models(final_year);
  if (!final_model->converged) {
    fail(ErrorCode::not_converged, "the assessment on all data, which supplies every evaluation "
                                   "label, did not converge");
  }

  BacktestReport report;
  report.stock = opts.stock;
  report.spec = spec;
  report.k = opts.k;
  for (int t : years) {
    try {
      auto r = run_task(spec, models, obs, bio, t, opts.hp, final_year, min_years);
      report.rows.push_back({r.model_year, r.target_year, r.baseline, r.hybrid, r.label});
      if (opts.keep_details) {
        report.details.push_back({std::move(r.dataset), std::move(r.ensemble)});
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::not_converged || e.code() == ErrorCode::insufficient_data) {
        report.skipped.push_back({t, e.what()});
        continue;
      }
      throw;
    }
  }
  if (report.rows.empty()) {
    fail(ErrorCode::empty_report, "every evaluation year of " + spec.id() + " was skipped");
  }
  aggregate(report);
  return report;
}

std::vector<BacktestReport> backtest_target(const TaskSpec& spec, const ObservationSeries& obs,
                                            const BiologySeries& bio,
                                            const BacktestOptions& opts) {
  ModelCache own;
  BacktestOptions shared = opts;
  if (!shared.cache) shared.cache = &own;
  std::vector<BacktestReport> reports;
  for (auto variant : variants_for(spec.target)) {
    TaskSpec s = spec;
    s.variant = variant;
    reports.push_back(backtest(s, obs, bio, shared));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].ml_rmse < reports[best].ml_rmse) best = i;
  }
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].selected = i == best;
  return reports;
}

}  // namespace stockhybrid::hybrid
