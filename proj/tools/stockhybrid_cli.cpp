// Command-line front end. Talks to the library through the C API only.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stockhybrid/stockhybrid.h"

namespace {

int report_failure(const char* what, shy_status s) {
  std::fprintf(stderr, "stockhybrid: %s failed (%s): %s\n", what, shy_status_name(s),
               shy_last_error());
  return 10 + static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid stock assessment: simulate, assess, backtest and explain."};
  std::string command;
  std::optional<std::string> config, out, label_policy, task, target, correction;
  std::optional<std::uint64_t> seed;
  std::optional<int> k, threads;

  app.add_option("command", command, "simulate | assess | retro | backtest | shap | report")
      ->required()
      ->check(CLI::IsMember({"simulate", "assess", "retro", "backtest", "shap", "report"}));
  app.add_option("--config,-c", config, "YAML run configuration (defaults when omitted)");
  app.add_option("--out,-o", out, "output directory");
  app.add_option("--seed", seed, "seed for simulation and optimizer");
  app.add_option("--k", k, "number of evaluation years")->check(CLI::PositiveNumber);
  app.add_option("--label-policy", label_policy, "final_model | strict_past")
      ->check(CLI::IsMember({"final_model", "strict_past"}));
  app.add_option("--task", task, "estimation | forecast")
      ->check(CLI::IsMember({"estimation", "forecast"}));
  app.add_option("--target", target, "recruitment | ssb")
      ->check(CLI::IsMember({"recruitment", "ssb"}));
  app.add_option("--correction", correction, "direct | residual | log_ratio")
      ->check(CLI::IsMember({"direct", "residual", "log_ratio"}));
  app.add_option("--threads", threads, "worker threads for assessment fits")
      ->check(CLI::PositiveNumber);
  app.set_version_flag("--version", shy_version());
  CLI11_PARSE(app, argc, argv);

  shy_config* cfg = nullptr;
  shy_status s = config ? shy_config_load(config->c_str(), &cfg) : shy_config_default(&cfg);
  if (s != SHY_OK) return report_failure("loading the configuration", s);

  if (s == SHY_OK && out) s = shy_config_set_output(cfg, out->c_str());
  if (s == SHY_OK && seed) s = shy_config_set_seed(cfg, *seed);
  if (s == SHY_OK && k) s = shy_config_set_k(cfg, *k);
  if (s == SHY_OK && threads) s = shy_config_set_threads(cfg, *threads);
  if (s == SHY_OK && label_policy) s = shy_config_set_label_policy(cfg, label_policy->c_str());
  if (s == SHY_OK && correction) s = shy_config_set_correction(cfg, correction->c_str());
  if (s == SHY_OK && task) s = shy_config_set_task(cfg, task->c_str());
  if (s == SHY_OK && target) s = shy_config_set_target(cfg, target->c_str());
  if (s != SHY_OK) {
    shy_config_free(cfg);
    return report_failure("applying the command-line options", s);
  }

  char* files = nullptr;
  s = shy_run(cfg, command.c_str(), &files);
  shy_config_free(cfg);
  if (s != SHY_OK) return report_failure(command.c_str(), s);
  std::fputs(files, stdout);

  if (command == "report") {
    const std::string written = files;
    std::ifstream in(written.substr(0, written.find('\n')));
    std::cout << '\n' << in.rdbuf();
  }
  shy_string_free(files);
  return 0;
}
