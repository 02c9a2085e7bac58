#include <filesystem>
#include <sstream>

#include "stockhybrid/io.hpp"

namespace stockhybrid::io {
namespace {

namespace fs = std::filesystem;

struct Writer {
  const RunConfig& cfg;
  std::vector<std::string> written;

  void operator()(const std::string& name, const std::string& content) {
    const auto path = (fs::path(cfg.output) / name).string();
    write_file_atomic(path, content);
    written.push_back(path);
  }
};

std::vector<std::string> simulate_command(const RunConfig& cfg) {
  if (!cfg.simulated()) {
    fail(ErrorCode::config, "simulate needs a simulation section, not data files");
  }
  const auto result = sim::simulate(cfg.simulation);
  Writer write{cfg, {}};
  write("observations.csv", observations_csv(result.observations));
  write("biology.csv", biology_csv(result.biology));
  write("truth.csv", truth_csv(result.truth));
  write("truth_stock.csv", truth_stock_csv(result.truth));
  write("config.yaml", run_config_yaml(cfg));
  return write.written;
}

std::string abundance_header(const AgeRange& ages) {
  std::string h;
  for (int a = ages.min_age; a <= ages.max_age; ++a) h += "\tN_a" + std::to_string(a);
  return h;
}

std::vector<std::string> assess_command(const RunConfig& cfg) {
  const auto data = stock_data(cfg);
  const auto& bio = data.biology;
  const auto m = assess::fit(data.observations, bio, cfg.assessor);
  Writer write{cfg, {}};
  write("model.txt", assess::to_text(m));
  if (!m.converged) {
    fail(ErrorCode::not_converged, "assessment did not converge after " +
                                       std::to_string(m.evaluations) + " evaluations");
  }
  std::ostringstream est;
  est << "year\trecruitment\tssb\tf" << abundance_header(m.ages()) << '\n';
  for (int y = m.first_year; y <= m.last_data_year; ++y) {
    const auto n = assess::estimate(m, y);
    const auto& state = m.smoothed_at(y);
    est << y << '\t' << format_number(recruitment_of(n)) << '\t'
        << format_number(assess::derive_parameter(n, bio, ParameterKind::ssb)) << '\t'
        << format_number(std::exp(state.mean(state.mean.size() - 1)));
    for (double v : n.values) est << '\t' << format_number(v);
    est << '\n';
  }
  write("estimates.tsv", est.str());

  // Future biology is unknown; projections use the last data year's.
  std::ostringstream fc;
  fc << "horizon\tyear\trecruitment\tssb" << abundance_header(m.ages()) << '\n';
  for (int h = 1; h <= cfg.forecast_horizon; ++h) {
    const auto n = assess::forecast(m, h);
    fc << h << '\t' << n.year << '\t' << format_number(recruitment_of(n)) << '\t'
       << format_number(ssb(n.values, bio, m.last_data_year));
    for (double v : n.values) fc << '\t' << format_number(v);
    fc << '\n';
  }
  write("forecast.tsv", fc.str());
  return write.written;
}

std::vector<std::string> retro_command(const RunConfig& cfg) {
  const auto data = stock_data(cfg);
  const auto& obs = data.observations;
  const int last = obs.last_year;
  const int first_t = last - cfg.retro_peels;
  if (first_t - obs.first_year + 1 < cfg.assessor.min_years) {
    fail(ErrorCode::insufficient_data, "retro.peels leaves fewer than " +
                                           std::to_string(cfg.assessor.min_years) +
                                           " years of data in the shortest peel");
  }
  hybrid::ModelCache cache;
  std::vector<int> years;
  for (int t = first_t; t <= last; ++t) years.push_back(t);
  cache.prefetch(obs, data.biology, cfg.assessor, years, cfg.threads);
  const auto retro = assess::retrospective_matrix(data.biology, obs.first_year, first_t, last,
                                                  cache.provider(obs, data.biology, cfg.assessor));
  Writer write{cfg, {}};
  write("retro.tsv", retro_tsv(retro));
  std::ostringstream rho;
  rho << "quantity\tpeels\trho\n";
  for (auto kind : {ParameterKind::recruitment, ParameterKind::ssb}) {
    double value = kMissing;
    try {
      value = assess::mohns_rho(retro, kind, cfg.retro_peels);
    } catch (const Error&) {
      // Too few converged peels: reported as NA.
    }
    rho << to_string(kind) << '\t' << cfg.retro_peels << '\t' << format_number(value) << '\n';
  }
  write("mohns_rho.tsv", rho.str());
  return write.written;
}

hybrid::TaskSpec spec_for(const RunConfig& cfg, const TaskRequest& r) {
  hybrid::TaskSpec s;
  s.task = r.task;
  s.target = r.target;
  s.variant = hybrid::variants_for(r.target).front();
  s.label_policy = cfg.label_policy;
  s.correction = cfg.correction;
  return s;
}

hybrid::BacktestOptions options_for(const RunConfig& cfg, hybrid::ModelCache& cache) {
  hybrid::BacktestOptions o;
  o.stock = cfg.stock;
  o.k = cfg.k;
  o.hp = cfg.gbt;
  o.assessor = cfg.assessor;
  o.threads = cfg.threads;
  o.cache = &cache;
  return o;
}

std::vector<std::string> backtest_command(const RunConfig& cfg) {
  const auto data = stock_data(cfg);
  hybrid::ModelCache cache;
  auto opts = options_for(cfg, cache);
  opts.keep_details = true;

  std::vector<hybrid::BacktestReport> reports;
  std::vector<std::string> failures;
  std::ostringstream audit;
  audit << "task\tmodel_year\ttuples\tviolations\tdetail\n";
  for (const auto& request : cfg.tasks) {
    const auto spec = spec_for(cfg, request);
    try {
      auto batch = hybrid::backtest_target(spec, data.observations, data.biology, opts);
      for (auto& r : batch) {
        for (std::size_t i = 0; i < r.details.size(); ++i) {
          const auto& d = r.details[i].dataset;
          const auto v = hybrid::audit(d, r.spec.label_policy);
          audit << r.spec.id() << '\t' << r.rows[i].model_year << '\t' << d.train.size() + 1
                << '\t' << v.size() << '\t' << (v.empty() ? "NA" : v.front()) << '\n';
        }
        r.details.clear();
        reports.push_back(std::move(r));
      }
    } catch (const Error& e) {
      failures.push_back(spec.id() + ": " + e.what());
    }
  }
  Writer write{cfg, {}};
  if (!reports.empty()) {
    write("report.tsv", report_tsv(reports));
    write("audit.tsv", audit.str());
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " of " + std::to_string(cfg.tasks.size()) +
                      " tasks produced no report";
    for (const auto& f : failures) msg += "\n  " + f;
    fail(ErrorCode::empty_report, msg);
  }
  return write.written;
}

std::vector<std::string> shap_command(const RunConfig& cfg) {
  const auto data = stock_data(cfg);
  const auto& obs = data.observations;
  hybrid::ModelCache cache;
  std::vector<int> years;
  for (int t = obs.first_year + cfg.assessor.min_years - 1; t <= obs.last_year; ++t) {
    years.push_back(t);
  }
  cache.prefetch(obs, data.biology, cfg.assessor, years, cfg.threads);
  const auto models = cache.provider(obs, data.biology, cfg.assessor);

  std::vector<ShapSample> samples;
  std::vector<ModelImportance> importance;
  Writer write{cfg, {}};
  for (const auto& request : cfg.tasks) {
    const auto spec = spec_for(cfg, request);
    const int t = hybrid::evaluation_years(spec.task, obs.last_year, cfg.k).back();
    const auto r = hybrid::run_task(spec, models, obs, data.biology, t, cfg.gbt, obs.last_year,
                                    cfg.assessor.min_years);
    std::vector<FeatureVector> background;
    for (const auto& tuple : r.dataset.train) background.push_back(tuple.features);
    const auto covers = shap::background_covers(r.ensemble, background);

    std::vector<shap::Attribution> attrs;
    auto explain = [&](const hybrid::TrainingTuple& tuple, const char* role) {
      auto a = shap::tree_shap(r.ensemble, tuple.features, covers);
      attrs.push_back(a);
      samples.push_back({spec.id(), std::string(role) + ":" + std::to_string(tuple.feature_year),
                         tuple.features, std::move(a)});
    };
    for (const auto& tuple : r.dataset.train) explain(tuple, "train");
    explain(r.dataset.test, "test");
    importance.push_back({spec.id(), shap::aggregate_importance(attrs)});

    std::string name = std::string("ensemble_") + hybrid::to_string(spec.task) + "_" +
                       to_string(spec.target) + ".txt";
    write(name, gbt::to_text(r.ensemble));
  }
  write("shap.tsv", shap_tsv(samples));
  write("importance.tsv", importance_tsv(importance));
  return write.written;
}

std::vector<std::string> report_command(const RunConfig& cfg) {
  const auto path = (fs::path(cfg.output) / "report.tsv").string();
  if (!fs::exists(path)) {
    fail(ErrorCode::io, "no report at '" + path + "'; run backtest first");
  }
  const auto reports = parse_report_tsv(read_file(path));
  Writer write{cfg, {}};
  write("report.txt", render_reports(reports));
  return write.written;
}

}  // namespace

std::vector<std::string> command_names() {
  return {"simulate", "assess", "retro", "backtest", "shap", "report"};
}

std::vector<std::string> run_command(const std::string& command, const RunConfig& cfg) {
  cfg.validate();
  if (command == "simulate") return simulate_command(cfg);
  if (command == "assess") return assess_command(cfg);
  if (command == "retro") return retro_command(cfg);
  if (command == "backtest") return backtest_command(cfg);
  if (command == "shap") return shap_command(cfg);
  if (command == "report") return report_command(cfg);
  fail(ErrorCode::invalid_argument, "unknown command '" + command + "'");
}

}  // namespace stockhybrid::io
