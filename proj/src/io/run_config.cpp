#include <charconv>
#include <filesystem>
#include <set>

#include <yaml-cpp/yaml.h>

#include "stockhybrid/io.hpp"

namespace stockhybrid::io {
namespace {

namespace fs = std::filesystem;

void check_keys(const YAML::Node& n, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!n.IsMap()) fail(ErrorCode::config, "'" + section + "' must be a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      fail(ErrorCode::config, "unknown key '" + key + "' in " + section);
    }
  }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& section) {
  const auto v = n[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::config, section + "." + key + ": cannot read value '" + YAML::Dump(v) + "'");
  }
}

template <class Parse>
void read_enum(const YAML::Node& n, const char* key, Parse parse, const std::string& section) {
  const auto v = n[key];
  if (!v) return;
  try {
    parse(v.as<std::string>());
  } catch (const Error& e) {
    fail(ErrorCode::config, section + "." + key + ": " + e.what());
  } catch (const YAML::Exception&) {
    fail(ErrorCode::config, section + "." + key + ": expected a string");
  }
}

bool read_ages(const YAML::Node& n, AgeRange& ages, const std::string& section) {
  const auto v = n["ages"];
  if (!v) return false;
  const auto where = section + ".ages";
  check_keys(v, where, {"min", "max", "plus_group"});
  read(v, "min", ages.min_age, where);
  read(v, "max", ages.max_age, where);
  read(v, "plus_group", ages.plus_group, where);
  return true;
}

sim::FleetSimConfig parse_fleet(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"name", "kind", "timing", "min_age", "max_age", "catchability",
                        "obs_sigma", "environment_linked"});
  sim::FleetSimConfig f;
  read(n, "name", f.name, where);
  read_enum(n, "kind", [&](const std::string& s) { f.kind = fleet_kind_from_string(s); }, where);
  read(n, "timing", f.timing, where);
  read(n, "min_age", f.min_age, where);
  read(n, "max_age", f.max_age, where);
  read(n, "catchability", f.catchability, where);
  read(n, "obs_sigma", f.obs_sigma, where);
  read(n, "environment_linked", f.environment_linked, where);
  return f;
}

void parse_simulation(const YAML::Node& n, sim::SimConfig& s) {
  const std::string where = "simulation";
  check_keys(n, where,
             {"ages", "first_year", "years", "bh_alpha", "bh_beta", "natural_mortality", "weights",
              "maturity", "selectivity", "f_initial", "f_sigma", "fishing_path", "process_sigma",
              "recruitment_sigma", "fleets", "environment"});
  read_ages(n, s.ages, where);
  read(n, "first_year", s.first_year, where);
  read(n, "years", s.years, where);
  read(n, "bh_alpha", s.bh_alpha, where);
  read(n, "bh_beta", s.bh_beta, where);
  read(n, "natural_mortality", s.natural_mortality, where);
  read(n, "weights", s.weights, where);
  read(n, "maturity", s.maturity, where);
  read(n, "selectivity", s.selectivity, where);
  read(n, "f_initial", s.f_initial, where);
  read(n, "f_sigma", s.f_sigma, where);
  read(n, "fishing_path", s.fishing_path, where);
  read(n, "process_sigma", s.process_sigma, where);
  read(n, "recruitment_sigma", s.recruitment_sigma, where);
  if (const auto fleets = n["fleets"]) {
    if (!fleets.IsSequence()) fail(ErrorCode::config, "simulation.fleets must be a list");
    s.fleets.clear();
    for (std::size_t i = 0; i < fleets.size(); ++i) {
      s.fleets.push_back(parse_fleet(fleets[i], "simulation.fleets[" + std::to_string(i) + "]"));
    }
  }
  if (const auto env = n["environment"]) {
    const std::string w = "simulation.environment";
    check_keys(env, w, {"enabled", "phi", "sigma", "recruitment_loading", "survey_loading"});
    read(env, "enabled", s.environment.enabled, w);
    read(env, "phi", s.environment.phi, w);
    read(env, "sigma", s.environment.sigma, w);
    read(env, "recruitment_loading", s.environment.recruitment_loading, w);
    read(env, "survey_loading", s.environment.survey_loading, w);
  }
}

bool parse_assessor(const YAML::Node& n, RunConfig& cfg) {
  const std::string where = "assessor";
  check_keys(n, where,
             {"ages", "recruitment", "forecast_policy", "variance_floor", "prior_variance",
              "min_years", "forecast_horizon", "optimizer"});
  auto& a = cfg.assessor;
  const bool ages = read_ages(n, a.ages, where);
  read_enum(n, "recruitment",
            [&](const std::string& s) { a.recruitment = assess::recruitment_model_from_string(s); },
            where);
  read_enum(n, "forecast_policy",
            [&](const std::string& s) {
              a.forecast_policy = assess::forecast_policy_from_string(s);
            },
            where);
  read(n, "variance_floor", a.variance_floor, where);
  read(n, "prior_variance", a.prior_variance, where);
  read(n, "min_years", a.min_years, where);
  read(n, "forecast_horizon", cfg.forecast_horizon, where);
  if (const auto o = n["optimizer"]) {
    const std::string w = "assessor.optimizer";
    check_keys(o, w, {"max_evaluations", "tolerance", "restarts", "jitter", "polish_rounds"});
    read(o, "max_evaluations", a.optimizer.max_evaluations, w);
    read(o, "tolerance", a.optimizer.tolerance, w);
    read(o, "restarts", a.optimizer.restarts, w);
    read(o, "jitter", a.optimizer.jitter, w);
    read(o, "polish_rounds", a.optimizer.polish_rounds, w);
  }
  return ages;
}

void parse_backtest(const YAML::Node& n, RunConfig& cfg) {
  const std::string where = "backtest";
  check_keys(n, where, {"k", "threads", "label_policy", "correction", "tasks"});
  read(n, "k", cfg.k, where);
  read(n, "threads", cfg.threads, where);
  read_enum(n, "label_policy",
            [&](const std::string& s) { cfg.label_policy = hybrid::label_policy_from_string(s); },
            where);
  read_enum(n, "correction",
            [&](const std::string& s) { cfg.correction = hybrid::correction_from_string(s); },
            where);
  if (const auto tasks = n["tasks"]) {
    if (!tasks.IsSequence()) fail(ErrorCode::config, "backtest.tasks must be a list");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const std::string w = "backtest.tasks[" + std::to_string(i) + "]";
      check_keys(tasks[i], w, {"task", "target"});
      if (!tasks[i]["task"] || !tasks[i]["target"]) {
        fail(ErrorCode::config, w + " needs both task and target");
      }
      TaskRequest r;
      read_enum(tasks[i], "task",
                [&](const std::string& s) { r.task = hybrid::task_from_string(s); }, w);
      read_enum(tasks[i], "target",
                [&](const std::string& s) { r.target = parameter_kind_from_string(s); }, w);
      cfg.tasks.push_back(r);
    }
  }
}

// Shortest text that reads back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

std::vector<TaskRequest> all_tasks() {
  using hybrid::Task;
  return {{Task::estimation, ParameterKind::recruitment},
          {Task::estimation, ParameterKind::ssb},
          {Task::forecast, ParameterKind::recruitment},
          {Task::forecast, ParameterKind::ssb}};
}

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  simulation.seed = s;
  assessor.optimizer.seed = s;
}

void RunConfig::validate() const {
  if (stock.empty()) fail(ErrorCode::config, "stock name must not be empty");
  if (output.empty()) fail(ErrorCode::config, "output directory must not be empty");
  if (observations_path.has_value() != biology_path.has_value()) {
    fail(ErrorCode::config, "data needs both observations and biology files");
  }
  if (simulated()) {
    simulation.validate();
    if (!(simulation.ages == assessor.ages)) {
      fail(ErrorCode::config, "assessor ages differ from the simulated stock's ages");
    }
  }
  assessor.validate();
  gbt.validate();
  if (k < 1) fail(ErrorCode::config, "backtest.k must be >= 1");
  if (threads < 1) fail(ErrorCode::config, "backtest.threads must be >= 1");
  if (retro_peels < 1) fail(ErrorCode::config, "retro.peels must be >= 1");
  if (forecast_horizon < 1 || forecast_horizon > 3) {
    fail(ErrorCode::config, "assessor.forecast_horizon must lie in [1, 3]");
  }
  if (tasks.empty()) fail(ErrorCode::config, "no backtest tasks");
}

RunConfig parse_run_config(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::config, std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "config",
             {"stock", "seed", "output", "data", "simulation", "assessor", "gbt", "backtest",
              "retro"});
  read(root, "stock", cfg.stock, "config");
  read(root, "seed", cfg.seed, "config");
  read(root, "output", cfg.output, "config");
  if (const auto data = root["data"]) {
    check_keys(data, "data", {"observations", "biology"});
    std::string obs, bio;
    read(data, "observations", obs, "data");
    read(data, "biology", bio, "data");
    if (!obs.empty()) cfg.observations_path = resolve(obs, base_dir);
    if (!bio.empty()) cfg.biology_path = resolve(bio, base_dir);
    if (root["simulation"]) {
      fail(ErrorCode::config, "give either data files or a simulation section, not both");
    }
  }
  if (const auto s = root["simulation"]) parse_simulation(s, cfg.simulation);
  bool assessor_ages = false;
  if (const auto a = root["assessor"]) assessor_ages = parse_assessor(a, cfg);
  if (!assessor_ages && cfg.simulated()) cfg.assessor.ages = cfg.simulation.ages;
  if (const auto g = root["gbt"]) {
    check_keys(g, "gbt", {"num_leaves", "max_depth", "min_data_in_leaf", "learning_rate",
                          "nrounds"});
    read(g, "num_leaves", cfg.gbt.num_leaves, "gbt");
    read(g, "max_depth", cfg.gbt.max_depth, "gbt");
    read(g, "min_data_in_leaf", cfg.gbt.min_data_in_leaf, "gbt");
    read(g, "learning_rate", cfg.gbt.learning_rate, "gbt");
    read(g, "nrounds", cfg.gbt.nrounds, "gbt");
  }
  if (const auto b = root["backtest"]) parse_backtest(b, cfg);
  if (cfg.tasks.empty()) cfg.tasks = all_tasks();
  if (const auto r = root["retro"]) {
    check_keys(r, "retro", {"peels"});
    read(r, "peels", cfg.retro_peels, "retro");
  }
  cfg.apply_seed(cfg.seed);
  cfg.validate();
  if (cfg.observations_path && !fs::exists(*cfg.observations_path)) {
    fail(ErrorCode::missing_data, "missing observations input file: '" +
                                      *cfg.observations_path + "'");
  }
  if (cfg.biology_path && !fs::exists(*cfg.biology_path)) {
    fail(ErrorCode::missing_data, "missing biology input file: '" + *cfg.biology_path + "'");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  if (!fs::exists(path)) fail(ErrorCode::io, "config file '" + path + "' not found");
  const auto dir = fs::path(path).parent_path().string();
  return parse_run_config(read_file(path), dir.empty() ? "." : dir);
}

std::string run_config_yaml(const RunConfig& cfg) {
  YAML::Emitter out;
  auto ages = [&](const AgeRange& a) {
    out << YAML::Key << "ages" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
        << "min" << YAML::Value << a.min_age << YAML::Key << "max" << YAML::Value << a.max_age
        << YAML::Key << "plus_group" << YAML::Value << a.plus_group << YAML::EndMap;
  };
  auto list = [&](const char* key, const std::vector<double>& v) {
    std::vector<std::string> text;
    for (double x : v) text.push_back(shortest(x));
    out << YAML::Key << key << YAML::Value << YAML::Flow << text;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "stock" << YAML::Value << cfg.stock;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "output" << YAML::Value << cfg.output;
  if (!cfg.simulated()) {
    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap << YAML::Key << "observations"
        << YAML::Value << *cfg.observations_path << YAML::Key << "biology" << YAML::Value
        << *cfg.biology_path << YAML::EndMap;
  } else {
    const auto& s = cfg.simulation;
    out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
    ages(s.ages);
    out << YAML::Key << "first_year" << YAML::Value << s.first_year;
    out << YAML::Key << "years" << YAML::Value << s.years;
    out << YAML::Key << "bh_alpha" << YAML::Value << shortest(s.bh_alpha);
    out << YAML::Key << "bh_beta" << YAML::Value << shortest(s.bh_beta);
    out << YAML::Key << "natural_mortality" << YAML::Value << shortest(s.natural_mortality);
    list("weights", s.weights);
    list("maturity", s.maturity);
    list("selectivity", s.selectivity);
    out << YAML::Key << "f_initial" << YAML::Value << shortest(s.f_initial);
    out << YAML::Key << "f_sigma" << YAML::Value << shortest(s.f_sigma);
    if (!s.fishing_path.empty()) list("fishing_path", s.fishing_path);
    out << YAML::Key << "process_sigma" << YAML::Value << shortest(s.process_sigma);
    out << YAML::Key << "recruitment_sigma" << YAML::Value << shortest(s.recruitment_sigma);
    out << YAML::Key << "fleets" << YAML::Value << YAML::BeginSeq;
    for (const auto& f : s.fleets) {
      out << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << f.name;
      out << YAML::Key << "kind" << YAML::Value << to_string(f.kind);
      if (f.kind == FleetKind::survey) {
        out << YAML::Key << "timing" << YAML::Value << shortest(f.timing);
        list("catchability", f.catchability);
      }
      out << YAML::Key << "min_age" << YAML::Value << f.min_age;
      out << YAML::Key << "max_age" << YAML::Value << f.max_age;
      out << YAML::Key << "obs_sigma" << YAML::Value << shortest(f.obs_sigma);
      out << YAML::Key << "environment_linked" << YAML::Value << f.environment_linked;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    const auto& e = s.environment;
    out << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "enabled" << YAML::Value << e.enabled;
    out << YAML::Key << "phi" << YAML::Value << shortest(e.phi);
    out << YAML::Key << "sigma" << YAML::Value << shortest(e.sigma);
    out << YAML::Key << "recruitment_loading" << YAML::Value << shortest(e.recruitment_loading);
    out << YAML::Key << "survey_loading" << YAML::Value << shortest(e.survey_loading);
    out << YAML::EndMap << YAML::EndMap;
  }
  const auto& a = cfg.assessor;
  out << YAML::Key << "assessor" << YAML::Value << YAML::BeginMap;
  ages(a.ages);
  out << YAML::Key << "recruitment" << YAML::Value << assess::to_string(a.recruitment);
  out << YAML::Key << "forecast_policy" << YAML::Value << assess::to_string(a.forecast_policy);
  out << YAML::Key << "variance_floor" << YAML::Value << shortest(a.variance_floor);
  out << YAML::Key << "prior_variance" << YAML::Value << shortest(a.prior_variance);
  out << YAML::Key << "min_years" << YAML::Value << a.min_years;
  out << YAML::Key << "forecast_horizon" << YAML::Value << cfg.forecast_horizon;
  out << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_evaluations" << YAML::Value << a.optimizer.max_evaluations;
  out << YAML::Key << "tolerance" << YAML::Value << shortest(a.optimizer.tolerance);
  out << YAML::Key << "restarts" << YAML::Value << a.optimizer.restarts;
  out << YAML::Key << "jitter" << YAML::Value << shortest(a.optimizer.jitter);
  out << YAML::Key << "polish_rounds" << YAML::Value << a.optimizer.polish_rounds;
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "gbt" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "num_leaves" << YAML::Value << cfg.gbt.num_leaves;
  out << YAML::Key << "max_depth" << YAML::Value << cfg.gbt.max_depth;
  out << YAML::Key << "min_data_in_leaf" << YAML::Value << cfg.gbt.min_data_in_leaf;
  out << YAML::Key << "learning_rate" << YAML::Value << shortest(cfg.gbt.learning_rate);
  out << YAML::Key << "nrounds" << YAML::Value << cfg.gbt.nrounds;
  out << YAML::EndMap;
  out << YAML::Key << "backtest" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "k" << YAML::Value << cfg.k;
  out << YAML::Key << "threads" << YAML::Value << cfg.threads;
  out << YAML::Key << "label_policy" << YAML::Value << hybrid::to_string(cfg.label_policy);
  out << YAML::Key << "correction" << YAML::Value << hybrid::to_string(cfg.correction);
  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : cfg.tasks) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "task" << YAML::Value
        << hybrid::to_string(t.task) << YAML::Key << "target" << YAML::Value
        << to_string(t.target) << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "retro" << YAML::Value << YAML::BeginMap << YAML::Key << "peels"
      << YAML::Value << cfg.retro_peels << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

StockData stock_data(const RunConfig& cfg) {
  if (!cfg.simulated()) return load_stock(*cfg.observations_path, *cfg.biology_path, cfg.assessor.ages);
  auto result = sim::simulate(cfg.simulation);
  return StockData{std::move(result.observations), std::move(result.biology)};
}

}  // namespace stockhybrid::io
