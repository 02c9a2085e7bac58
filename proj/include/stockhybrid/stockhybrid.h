/* C interface to the stockhybrid library.
 *
 * Every function returns a shy_status; on failure the message of the most
 * recent error on the calling thread is available from shy_last_error().
 * Objects are opaque and owned by the caller, who releases them with the
 * matching *_free function. Strings returned through char** out-parameters
 * are released with shy_string_free.
 */
#ifndef STOCKHYBRID_H
#define STOCKHYBRID_H

#include <stddef.h>
#include <stdint.h>

#if defined(SHY_BUILDING_LIBRARY)
#define SHY_API __attribute__((visibility("default")))
#else
#define SHY_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum shy_status {
  SHY_OK = 0,
  SHY_E_INVALID_ARGUMENT = 1,
  SHY_E_DOMAIN = 2,
  SHY_E_MISSING_DATA = 3,
  SHY_E_OUT_OF_RANGE = 4,
  SHY_E_SCHEMA = 5,
  SHY_E_CONFIG = 6,
  SHY_E_INSUFFICIENT_DATA = 7,
  SHY_E_NOT_CONVERGED = 8,
  SHY_E_UNSUPPORTED = 9,
  SHY_E_IO = 10,
  SHY_E_PARSE = 11,
  SHY_E_EMPTY_REPORT = 12,
  SHY_E_INTERNAL = 13
} shy_status;

typedef struct shy_config shy_config;
typedef struct shy_dataset shy_dataset;
typedef struct shy_assessment shy_assessment;

SHY_API const char* shy_version(void);
/* Thread-local; valid until the next failing call on this thread. */
SHY_API const char* shy_last_error(void);
SHY_API const char* shy_status_name(shy_status status);
SHY_API void shy_string_free(char* s);

/* ---- run configuration ---- */

SHY_API shy_status shy_config_default(shy_config** out);
SHY_API shy_status shy_config_load(const char* path, shy_config** out);
SHY_API shy_status shy_config_parse(const char* yaml_text, const char* base_dir, shy_config** out);
SHY_API void shy_config_free(shy_config* cfg);

SHY_API shy_status shy_config_set_output(shy_config* cfg, const char* dir);
/* Reseeds the simulation and the optimizer. */
SHY_API shy_status shy_config_set_seed(shy_config* cfg, uint64_t seed);
SHY_API shy_status shy_config_set_k(shy_config* cfg, int k);
SHY_API shy_status shy_config_set_threads(shy_config* cfg, int threads);
/* "final_model" or "strict_past". */
SHY_API shy_status shy_config_set_label_policy(shy_config* cfg, const char* policy);
/* "direct", "residual" or "log_ratio". */
SHY_API shy_status shy_config_set_correction(shy_config* cfg, const char* correction);
/* Restrict the configured tasks to one task ("estimation", "forecast")
 * and/or one target ("recruitment", "ssb"). Applied when the config runs. */
SHY_API shy_status shy_config_set_task(shy_config* cfg, const char* task);
SHY_API shy_status shy_config_set_target(shy_config* cfg, const char* target);
/* Effective configuration as YAML. */
SHY_API shy_status shy_config_to_yaml(const shy_config* cfg, char** out);

/* Runs simulate, assess, retro, backtest, shap or report. On success the
 * written paths are returned newline-separated in *files (may be NULL). */
SHY_API shy_status shy_run(const shy_config* cfg, const char* command, char** files);

/* Renders a report.tsv file as aligned text tables. */
SHY_API shy_status shy_render_report(const char* report_tsv_path, char** out);

/* ---- data ---- */

SHY_API shy_status shy_dataset_load(const char* observations_csv, const char* biology_csv,
                                    int min_age, int max_age, shy_dataset** out);
SHY_API shy_status shy_dataset_simulate(const shy_config* cfg, shy_dataset** out);
SHY_API shy_status shy_dataset_years(const shy_dataset* d, int* first_year, int* last_year);
SHY_API void shy_dataset_free(shy_dataset* d);

/* ---- assessments ---- */

/* Fits the assessor settings of cfg to d, using data through last_year
 * (pass 0 for all years). */
SHY_API shy_status shy_assessment_fit(const shy_config* cfg, const shy_dataset* d, int last_year,
                                      shy_assessment** out);
SHY_API shy_status shy_assessment_converged(const shy_assessment* a, int* converged);
SHY_API shy_status shy_assessment_nll(const shy_assessment* a, double* nll);
/* target: "recruitment" or "ssb". d supplies the biology for SSB and may
 * be NULL for recruitment. */
SHY_API shy_status shy_assessment_estimate(const shy_assessment* a, const shy_dataset* d,
                                           const char* target, int year, double* value);
/* horizon in [1, 3]; SSB uses the biology of the last data year. */
SHY_API shy_status shy_assessment_forecast(const shy_assessment* a, const shy_dataset* d,
                                           const char* target, int horizon, double* value);
SHY_API shy_status shy_assessment_save(const shy_assessment* a, const char* path);
SHY_API shy_status shy_assessment_load(const char* path, shy_assessment** out);
SHY_API void shy_assessment_free(shy_assessment* a);

#ifdef __cplusplus
}
#endif

#endif /* STOCKHYBRID_H */
