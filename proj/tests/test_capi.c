#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "rpfield/rpfield.h"

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: FAILED %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

static const char* kCovariance =
    "{\"schema\": \"rpfield-config/1\", \"seed\": 3,"
    " \"lattice\": {\"dim\": 1, \"sites\": 64, \"length\": 16.0, \"components\": 1},"
    " \"test_functions\": {\"g\": {\"center\": [0.0], \"width\": 1.0}},"
    " \"commands\": {\"covariance\": {\"pairs\": [[\"g\", \"g\"]]}}}";

static const char* kFailingSchedule =
    "{\"schema\": \"rpfield-config/1\","
    " \"lattice\": {\"dim\": 2, \"sites\": 16, \"length\": 8.0, \"components\": 1},"
    " \"schedule\": {\"r\": {\"base\": 1.0, \"exponent\": 1.0}, \"Lambda\": {\"base\": 1.0, \"exponent\": 1.0},"
    " \"M\": {\"base\": 1.0}}}";

int main(int argc, char** argv) {
  const char* out_dir = argc > 1 ? argv[1] : "capi_out";
  EXPECT(strcmp(rpf_version(), "0.1.0") == 0);
  EXPECT(strlen(rpf_status_name(RPF_ERR_CONFIG)) > 0);

  /* parse, emit, reparse */
  rpf_config* cfg = NULL;
  EXPECT(rpf_config_parse(kCovariance, &cfg) == RPF_OK);
  char* text = NULL;
  EXPECT(rpf_config_emit(cfg, &text) == RPF_OK);
  rpf_config* again = NULL;
  EXPECT(rpf_config_parse(text, &again) == RPF_OK);
  rpf_string_free(text);
  rpf_config_free(again);

  /* in-memory run: the pi e erfc(1) value is in the report */
  rpf_run_options opt;
  rpf_run_options_init(&opt);
  EXPECT(opt.has_seed == 0 && opt.out_dir == NULL && opt.write_files != 0);
  opt.write_files = 0;
  rpf_report* rep = NULL;
  EXPECT(rpf_run("covariance", cfg, &opt, &rep) == RPF_OK);
  int pass = 0;
  EXPECT(rpf_report_pass(rep, &pass) == RPF_OK && pass == 1);
  char* json = NULL;
  EXPECT(rpf_report_json(rep, &json) == RPF_OK);
  EXPECT(json && strstr(json, "rpfield-report/1") != NULL);
  rpf_string_free(json);
  rpf_report_free(rep);

  /* writing files */
  opt.write_files = 1;
  opt.out_dir = out_dir;
  opt.format = RPF_FORMAT_JSON;
  EXPECT(rpf_run("covariance", cfg, &opt, &rep) == RPF_OK);
  rpf_report_free(rep);
  char path[4096];
  snprintf(path, sizeof path, "%s/rpfield-covariance.json", out_dir);
  FILE* fp = fopen(path, "r");
  EXPECT(fp != NULL);
  if (fp) fclose(fp);

  /* errors */
  EXPECT(rpf_run("nonsense", cfg, NULL, &rep) == RPF_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(rpf_last_error()) > 0);
  rpf_config_free(cfg);
  cfg = NULL;
  EXPECT(rpf_config_parse("{\"schema\": \"rpfield-config/1\", \"lattice\": {\"dim\": 1, \"sites\": 7}}", &cfg) ==
         RPF_ERR_CONFIG);
  EXPECT(strcmp(rpf_last_error_path(), "/lattice/sites") == 0);
  EXPECT(cfg == NULL);
  EXPECT(rpf_config_parse("not json", &cfg) == RPF_ERR_CONFIG);
  EXPECT(rpf_config_parse(NULL, &cfg) == RPF_ERR_INVALID_ARGUMENT);

  /* a failing verdict is a successful run with pass == 0 */
  EXPECT(rpf_config_parse(kFailingSchedule, &cfg) == RPF_OK);
  opt.write_files = 0;
  EXPECT(rpf_run("schedule-check", cfg, &opt, &rep) == RPF_OK);
  EXPECT(rpf_report_pass(rep, &pass) == RPF_OK && pass == 0);
  size_t count = 0;
  EXPECT(rpf_report_verdict_count(rep, &count) == RPF_OK && count == 1);
  const char* check = NULL;
  double stat = 0.0, thr = 0.0;
  EXPECT(rpf_report_verdict(rep, 0, &check, &stat, &thr, &pass) == RPF_OK);
  EXPECT(check != NULL && pass == 0);
  EXPECT(rpf_report_verdict(rep, 5, &check, &stat, &thr, &pass) == RPF_ERR_INVALID_ARGUMENT);
  rpf_report_free(rep);
  rpf_config_free(cfg);

  /* sampling and covariances */
  rpf_lattice* lat = NULL;
  EXPECT(rpf_lattice_create(2, 8, 4.0, 1, &lat) == RPF_OK);
  EXPECT(rpf_lattice_size(lat) == 64);
  double a[64], b[64], c[64];
  EXPECT(rpf_sample_gff(lat, 42, a, 64) == RPF_OK);
  EXPECT(rpf_sample_gff(lat, 42, b, 64) == RPF_OK);
  EXPECT(rpf_sample_gff(lat, 43, c, 64) == RPF_OK);
  EXPECT(memcmp(a, b, sizeof a) == 0);
  EXPECT(memcmp(a, c, sizeof a) != 0);
  EXPECT(rpf_sample_gff(lat, 42, a, 10) == RPF_ERR_INVALID_ARGUMENT);
  rpf_lattice* odd = NULL;
  EXPECT(rpf_lattice_create(2, 7, 4.0, 1, &odd) == RPF_ERR_INVALID_ARGUMENT);

  const double center[1] = {0.0}, comp[1] = {1.0};
  rpf_test_function* g = NULL;
  EXPECT(rpf_test_function_gaussian(1, center, 1.0, 1.0, 1, comp, &g) == RPF_OK);
  double value = 0.0, err = 1.0;
  EXPECT(rpf_free_covariance(g, g, 1e-13, 1e-11, &value, &err) == RPF_OK);
  const double ref = 3.14159265358979323846 * exp(1.0) * erfc(1.0);
  EXPECT(fabs(value - ref) <= 1e-10);
  EXPECT(rpf_lattice_covariance(lat, g, g, &value) == RPF_ERR_INVALID_ARGUMENT);  /* dimension mismatch */
  rpf_lattice* line = NULL;
  EXPECT(rpf_lattice_create(1, 512, 32.0, 1, &line) == RPF_OK);
  EXPECT(rpf_lattice_covariance(line, g, g, &value) == RPF_OK);
  EXPECT(fabs(value - ref) <= 1e-6);
  rpf_test_function_free(g);
  rpf_lattice_free(line);
  rpf_lattice_free(lat);

  if (failures) {
    fprintf(stderr, "%d C API checks failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}
