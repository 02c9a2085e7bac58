#include "stockhybrid/stockhybrid.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "stockhybrid/io.hpp"

using namespace stockhybrid;

struct shy_config {
  io::RunConfig cfg;
  std::optional<hybrid::Task> task;
  std::optional<ParameterKind> target;
};

struct shy_dataset {
  io::StockData data;
};

struct shy_assessment {
  assess::FittedAssessment model;
};

namespace {

thread_local std::string last_error;

shy_status set_error(shy_status s, const std::string& message) {
  last_error = message;
  return s;
}

template <class F>
shy_status guard(F&& f) {
  try {
    f();
    return SHY_OK;
  } catch (const Error& e) {
    return set_error(static_cast<shy_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SHY_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SHY_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(SHY_E_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

io::RunConfig effective(const shy_config& c) {
  io::RunConfig cfg = c.cfg;
  if (c.task || c.target) {
    std::vector<io::TaskRequest> kept;
    for (const auto& r : cfg.tasks) {
      if ((!c.task || r.task == *c.task) && (!c.target || r.target == *c.target)) kept.push_back(r);
    }
    if (kept.empty() && c.task && c.target) kept.push_back({*c.task, *c.target});
    if (kept.empty()) fail(ErrorCode::config, "no configured task matches the requested filter");
    cfg.tasks = kept;
  }
  cfg.validate();
  return cfg;
}

double value_of(const AbundanceVector& n, const shy_dataset* d, const char* target, int bio_year) {
  need(target, "target");
  const auto kind = parameter_kind_from_string(target);
  if (kind == ParameterKind::recruitment) return recruitment_of(n);
  need(d, "dataset");
  return ssb(n.values, d->data.biology, bio_year);
}

}  // namespace

extern "C" {

const char* shy_version(void) { return "0.1.0"; }

const char* shy_last_error(void) { return last_error.c_str(); }

const char* shy_status_name(shy_status status) {
  return to_string(static_cast<ErrorCode>(status));
}

void shy_string_free(char* s) { std::free(s); }

shy_status shy_config_default(shy_config** out) {
  return guard([&] {
    need(out, "out");
    auto c = std::make_unique<shy_config>();
    c->cfg.tasks = io::all_tasks();
    c->cfg.assessor.ages = c->cfg.simulation.ages;
    c->cfg.apply_seed(c->cfg.seed);
    *out = c.release();
  });
}

shy_status shy_config_load(const char* path, shy_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto c = std::make_unique<shy_config>();
    c->cfg = io::load_run_config(path);
    *out = c.release();
  });
}

shy_status shy_config_parse(const char* yaml_text, const char* base_dir, shy_config** out) {
  return guard([&] {
    need(yaml_text, "yaml_text");
    need(out, "out");
    auto c = std::make_unique<shy_config>();
    c->cfg = io::parse_run_config(yaml_text, base_dir ? base_dir : ".");
    *out = c.release();
  });
}

void shy_config_free(shy_config* cfg) { delete cfg; }

shy_status shy_config_set_output(shy_config* cfg, const char* dir) {
  return guard([&] {
    need(cfg, "cfg");
    need(dir, "dir");
    if (!*dir) fail(ErrorCode::config, "output directory must not be empty");
    cfg->cfg.output = dir;
  });
}

shy_status shy_config_set_seed(shy_config* cfg, uint64_t seed) {
  return guard([&] {
    need(cfg, "cfg");
    cfg->cfg.apply_seed(seed);
  });
}

shy_status shy_config_set_k(shy_config* cfg, int k) {
  return guard([&] {
    need(cfg, "cfg");
    if (k < 1) fail(ErrorCode::config, "k must be >= 1");
    cfg->cfg.k = k;
  });
}

shy_status shy_config_set_threads(shy_config* cfg, int threads) {
  return guard([&] {
    need(cfg, "cfg");
    if (threads < 1) fail(ErrorCode::config, "threads must be >= 1");
    cfg->cfg.threads = threads;
  });
}

shy_status shy_config_set_label_policy(shy_config* cfg, const char* policy) {
  return guard([&] {
    need(cfg, "cfg");
    need(policy, "policy");
    cfg->cfg.label_policy = hybrid::label_policy_from_string(policy);
  });
}

shy_status shy_config_set_correction(shy_config* cfg, const char* correction) {
  return guard([&] {
    need(cfg, "cfg");
    need(correction, "correction");
    cfg->cfg.correction = hybrid::correction_from_string(correction);
  });
}

shy_status shy_config_set_task(shy_config* cfg, const char* task) {
  return guard([&] {
    need(cfg, "cfg");
    need(task, "task");
    cfg->task = hybrid::task_from_string(task);
  });
}

shy_status shy_config_set_target(shy_config* cfg, const char* target) {
  return guard([&] {
    need(cfg, "cfg");
    need(target, "target");
    cfg->target = parameter_kind_from_string(target);
  });
}

shy_status shy_config_to_yaml(const shy_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = duplicate(io::run_config_yaml(effective(*cfg)));
  });
}

shy_status shy_run(const shy_config* cfg, const char* command, char** files) {
  return guard([&] {
    need(cfg, "cfg");
    need(command, "command");
    if (files) *files = nullptr;
    const auto written = io::run_command(command, effective(*cfg));
    if (files) {
      std::string list;
      for (const auto& f : written) list += f + "\n";
      *files = duplicate(list);
    }
  });
}

shy_status shy_render_report(const char* report_tsv_path, char** out) {
  return guard([&] {
    need(report_tsv_path, "report_tsv_path");
    need(out, "out");
    const auto reports = io::parse_report_tsv(io::read_file(report_tsv_path));
    *out = duplicate(io::render_reports(reports));
  });
}

shy_status shy_dataset_load(const char* observations_csv, const char* biology_csv, int min_age,
                            int max_age, shy_dataset** out) {
  return guard([&] {
    need(observations_csv, "observations_csv");
    need(biology_csv, "biology_csv");
    need(out, "out");
    AgeRange ages{min_age, max_age, true};
    auto d = std::make_unique<shy_dataset>();
    d->data = io::load_stock(observations_csv, biology_csv, ages);
    *out = d.release();
  });
}

shy_status shy_dataset_simulate(const shy_config* cfg, shy_dataset** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    if (!cfg->cfg.simulated()) fail(ErrorCode::config, "config names data files, not a simulation");
    auto d = std::make_unique<shy_dataset>();
    d->data = io::stock_data(cfg->cfg);
    *out = d.release();
  });
}

shy_status shy_dataset_years(const shy_dataset* d, int* first_year, int* last_year) {
  return guard([&] {
    need(d, "dataset");
    if (first_year) *first_year = d->data.observations.first_year;
    if (last_year) *last_year = d->data.observations.last_year;
  });
}

void shy_dataset_free(shy_dataset* d) { delete d; }

shy_status shy_assessment_fit(const shy_config* cfg, const shy_dataset* d, int last_year,
                              shy_assessment** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(d, "dataset");
    need(out, "out");
    const auto& obs = d->data.observations;
    const auto data = last_year == 0 ? obs : obs.truncated(last_year);
    auto a = std::make_unique<shy_assessment>();
    a->model = assess::fit(data, d->data.biology, cfg->cfg.assessor);
    *out = a.release();
  });
}

shy_status shy_assessment_converged(const shy_assessment* a, int* converged) {
  return guard([&] {
    need(a, "assessment");
    need(converged, "converged");
    *converged = a->model.converged ? 1 : 0;
  });
}

shy_status shy_assessment_nll(const shy_assessment* a, double* nll) {
  return guard([&] {
    need(a, "assessment");
    need(nll, "nll");
    *nll = a->model.nll;
  });
}

shy_status shy_assessment_estimate(const shy_assessment* a, const shy_dataset* d,
                                   const char* target, int year, double* value) {
  return guard([&] {
    need(a, "assessment");
    need(value, "value");
    *value = value_of(assess::estimate(a->model, year), d, target, year);
  });
}

shy_status shy_assessment_forecast(const shy_assessment* a, const shy_dataset* d,
                                   const char* target, int horizon, double* value) {
  return guard([&] {
    need(a, "assessment");
    need(value, "value");
    *value = value_of(assess::forecast(a->model, horizon), d, target, a->model.last_data_year);
  });
}

shy_status shy_assessment_save(const shy_assessment* a, const char* path) {
  return guard([&] {
    need(a, "assessment");
    need(path, "path");
    io::write_file_atomic(path, assess::to_text(a->model));
  });
}

shy_status shy_assessment_load(const char* path, shy_assessment** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto a = std::make_unique<shy_assessment>();
    a->model = assess::assessment_from_text(io::read_file(path));
    *out = a.release();
  });
}

void shy_assessment_free(shy_assessment* a) { delete a; }

}  // extern "C"
