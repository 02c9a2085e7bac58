#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <string>

#include "stockhybrid/stockhybrid.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  shy_string_free(s);
  return out;
}

fs::path scratch(const char* name) {
  auto p = fs::temp_directory_path() / (std::string("stockhybrid_capi_") + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(shy_version()).size() > 0);
  CHECK(std::string(shy_status_name(SHY_OK)) == "ok");
  CHECK(std::string(shy_status_name(SHY_E_CONFIG)) != shy_status_name(SHY_E_PARSE));
}

TEST_CASE("configuration setters validate their input") {
  shy_config* cfg = nullptr;
  REQUIRE(shy_config_default(&cfg) == SHY_OK);
  CHECK(shy_config_set_k(cfg, 0) == SHY_E_CONFIG);
  CHECK(std::string(shy_last_error()).find("k") != std::string::npos);
  CHECK(shy_config_set_threads(cfg, 0) == SHY_E_CONFIG);
  CHECK(shy_config_set_label_policy(cfg, "sometimes") == SHY_E_PARSE);
  CHECK(shy_config_set_correction(cfg, "log_ratio") == SHY_OK);
  CHECK(shy_config_set_task(cfg, "estimation") == SHY_OK);
  CHECK(shy_config_set_target(cfg, "ssb") == SHY_OK);
  CHECK(shy_config_set_output(cfg, "") == SHY_E_CONFIG);
  CHECK(shy_config_set_seed(cfg, 99) == SHY_OK);
  CHECK(shy_config_set_k(cfg, 12) == SHY_OK);
  CHECK(shy_config_set_k(nullptr, 12) == SHY_E_INVALID_ARGUMENT);

  char* yaml = nullptr;
  REQUIRE(shy_config_to_yaml(cfg, &yaml) == SHY_OK);
  const auto text = take(yaml);
  CHECK(text.find("seed: 99") != std::string::npos);
  CHECK(text.find("k: 12") != std::string::npos);
  CHECK(text.find("task: estimation") != std::string::npos);
  CHECK(text.find("task: forecast") == std::string::npos);

  shy_config* again = nullptr;
  REQUIRE(shy_config_parse(text.c_str(), ".", &again) == SHY_OK);
  char* yaml2 = nullptr;
  REQUIRE(shy_config_to_yaml(again, &yaml2) == SHY_OK);
  CHECK(take(yaml2) == text);
  shy_config_free(again);

  shy_config* bad = nullptr;
  CHECK(shy_config_parse("nonsense_key: 1\n", ".", &bad) == SHY_E_CONFIG);
  CHECK(bad == nullptr);
  CHECK(shy_config_load("/no/such/config.yaml", &bad) == SHY_E_IO);
  shy_config_free(cfg);
  shy_config_free(nullptr);
}

TEST_CASE("datasets and assessments through handles") {
  shy_config* cfg = nullptr;
  REQUIRE(shy_config_default(&cfg) == SHY_OK);
  shy_dataset* d = nullptr;
  REQUIRE(shy_dataset_simulate(cfg, &d) == SHY_OK);
  int first = 0, last = 0;
  REQUIRE(shy_dataset_years(d, &first, &last) == SHY_OK);
  CHECK(last - first + 1 == 40);

  shy_assessment* a = nullptr;
  REQUIRE(shy_assessment_fit(cfg, d, last - 1, &a) == SHY_OK);
  int converged = 0;
  REQUIRE(shy_assessment_converged(a, &converged) == SHY_OK);
  CHECK(converged == 1);
  double nll = 0.0;
  REQUIRE(shy_assessment_nll(a, &nll) == SHY_OK);
  CHECK(std::isfinite(nll));

  double rec = 0.0, ssb = 0.0, fc = 0.0;
  CHECK(shy_assessment_estimate(a, nullptr, "recruitment", last - 1, &rec) == SHY_OK);
  CHECK(rec > 0.0);
  CHECK(shy_assessment_estimate(a, d, "ssb", last - 1, &ssb) == SHY_OK);
  CHECK(ssb > 0.0);
  CHECK(shy_assessment_estimate(a, nullptr, "ssb", last - 1, &ssb) == SHY_E_INVALID_ARGUMENT);
  CHECK(shy_assessment_estimate(a, d, "biomass", last - 1, &ssb) == SHY_E_PARSE);
  CHECK(shy_assessment_estimate(a, d, "ssb", last, &ssb) == SHY_E_OUT_OF_RANGE);
  CHECK(shy_assessment_forecast(a, d, "recruitment", 1, &fc) == SHY_OK);
  CHECK(fc > 0.0);
  CHECK(shy_assessment_forecast(a, d, "ssb", 4, &fc) == SHY_E_UNSUPPORTED);

  const auto dir = scratch("model");
  fs::create_directories(dir);
  const auto path = (dir / "model.txt").string();
  REQUIRE(shy_assessment_save(a, path.c_str()) == SHY_OK);
  shy_assessment* b = nullptr;
  REQUIRE(shy_assessment_load(path.c_str(), &b) == SHY_OK);
  double rec2 = 0.0;
  REQUIRE(shy_assessment_estimate(b, nullptr, "recruitment", last - 1, &rec2) == SHY_OK);
  CHECK(rec2 == rec);
  CHECK(shy_assessment_load((dir / "none.txt").string().c_str(), &b) == SHY_E_IO);
  fs::remove_all(dir);

  shy_dataset* none = nullptr;
  CHECK(shy_dataset_load("/no/obs.csv", "/no/bio.csv", 1, 8, &none) == SHY_E_MISSING_DATA);
  CHECK(none == nullptr);

  shy_assessment_free(b);
  shy_assessment_free(a);
  shy_dataset_free(d);
  shy_config_free(cfg);
}

TEST_CASE("commands run through the interface") {
  const auto dir = scratch("run");
  shy_config* cfg = nullptr;
  REQUIRE(shy_config_default(&cfg) == SHY_OK);
  REQUIRE(shy_config_set_output(cfg, dir.string().c_str()) == SHY_OK);
  char* files = nullptr;
  REQUIRE(shy_run(cfg, "simulate", &files) == SHY_OK);
  const auto list = take(files);
  CHECK(list.find("observations.csv\n") != std::string::npos);
  CHECK(fs::exists(dir / "truth.csv"));

  shy_dataset* d = nullptr;
  REQUIRE(shy_dataset_load((dir / "observations.csv").string().c_str(),
                           (dir / "biology.csv").string().c_str(), 1, 8, &d) == SHY_OK);
  shy_dataset_free(d);

  CHECK(shy_run(cfg, "report", nullptr) == SHY_E_IO);
  CHECK(shy_run(cfg, "dance", nullptr) == SHY_E_INVALID_ARGUMENT);
  char* text = nullptr;
  CHECK(shy_render_report((dir / "report.tsv").string().c_str(), &text) == SHY_E_IO);
  CHECK(shy_config_set_task(cfg, "estimation") == SHY_OK);
  CHECK(shy_config_set_target(cfg, "nonsense") == SHY_E_PARSE);
  shy_config_free(cfg);
  fs::remove_all(dir);
}
