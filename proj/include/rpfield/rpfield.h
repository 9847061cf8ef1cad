#ifndef RPFIELD_RPFIELD_H
#define RPFIELD_RPFIELD_H

#include <stddef.h>
#include <stdint.h>

#if defined(RPF_BUILDING_LIBRARY)
#define RPF_API __attribute__((visibility("default")))
#else
#define RPF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returns a status; on failure a message is available from
   rpf_last_error() on the calling thread until its next failing call. */
typedef enum rpf_status {
  RPF_OK = 0,
  RPF_ERR_INVALID_ARGUMENT = 1,
  RPF_ERR_CONFIG = 2,
  RPF_ERR_QUADRATURE = 3,
  RPF_ERR_SOLVER = 4,
  RPF_ERR_DEGENERATE_WEIGHTS = 5,
  RPF_ERR_SUPPORT = 6,
  RPF_ERR_BUDGET = 7,
  RPF_ERR_IO = 8,
  RPF_ERR_INTERNAL = 9
} rpf_status;

typedef struct rpf_config rpf_config;
typedef struct rpf_report rpf_report;
typedef struct rpf_lattice rpf_lattice;
typedef struct rpf_test_function rpf_test_function;

RPF_API const char* rpf_version(void);
RPF_API const char* rpf_status_name(rpf_status status);
RPF_API const char* rpf_last_error(void);
/* JSON pointer of the offending field after RPF_ERR_CONFIG, else "". */
RPF_API const char* rpf_last_error_path(void);
/* Releases strings returned through char** out parameters. */
RPF_API void rpf_string_free(char* s);

/* Run configuration (JSON text, schema "rpfield-config/1"). */
RPF_API rpf_status rpf_config_parse(const char* json, rpf_config** out);
RPF_API rpf_status rpf_config_emit(const rpf_config* config, char** out_json);
RPF_API void rpf_config_free(rpf_config* config);

typedef enum rpf_format { RPF_FORMAT_CONFIG = -1, RPF_FORMAT_JSON = 0, RPF_FORMAT_CSV = 1, RPF_FORMAT_BOTH = 2 } rpf_format;

typedef struct rpf_run_options {
  int has_seed;         /* nonzero: seed overrides the config */
  uint64_t seed;
  const char* out_dir;  /* NULL keeps the config value */
  int threads;          /* < 0 keeps the config value, 0 = all cores */
  rpf_format format;
  int write_files;      /* zero: build the report in memory only */
} rpf_run_options;

/* Defaults: no overrides, files written. */
RPF_API void rpf_run_options_init(rpf_run_options* options);

/* command is one of covariance, sample, estimate, constrain-sweep, verify-rp,
   verify-invariance, verify-markov, schedule-check. options may be NULL. */
RPF_API rpf_status rpf_run(const char* command, const rpf_config* config, const rpf_run_options* options,
                           rpf_report** out);
RPF_API rpf_status rpf_report_json(const rpf_report* report, char** out_json);
/* Payload that is identical across reruns (results, verdicts, tables). */
RPF_API rpf_status rpf_report_payload(const rpf_report* report, char** out_json);
RPF_API rpf_status rpf_report_pass(const rpf_report* report, int* pass);
RPF_API rpf_status rpf_report_verdict_count(const rpf_report* report, size_t* count);
/* check stays valid while the report lives. */
RPF_API rpf_status rpf_report_verdict(const rpf_report* report, size_t index, const char** check, double* statistic,
                                      double* threshold, int* pass);
RPF_API void rpf_report_free(rpf_report* report);

/* Periodic lattice with N sites per axis (N even), side L and K components. */
RPF_API rpf_status rpf_lattice_create(int dim, int sites, double length, int components, rpf_lattice** out);
RPF_API size_t rpf_lattice_size(const rpf_lattice* lattice);
RPF_API void rpf_lattice_free(rpf_lattice* lattice);

/* One free-field sample into out[0 .. K N^D), component-major with the last
   axis fastest. Bit-identical for equal seeds. */
RPF_API rpf_status rpf_sample_gff(const rpf_lattice* lattice, uint64_t seed, double* out, size_t length);
RPF_API rpf_status rpf_write_snapshot(const rpf_lattice* lattice, const double* data, size_t length, uint64_t seed,
                                      const char* base_path);

/* A * exp(-|x-c|^2 / (2 w^2)) e. center has dim entries, component K. */
RPF_API rpf_status rpf_test_function_gaussian(int dim, const double* center, double width, double amplitude,
                                              int components, const double* component, rpf_test_function** out);
RPF_API void rpf_test_function_free(rpf_test_function* tf);

/* Continuum free covariance (2 pi)^-D int conj(f^) g^ / (p^2 + 1) dp. */
RPF_API rpf_status rpf_free_covariance(const rpf_test_function* f, const rpf_test_function* g, double abs_tol,
                                       double rel_tol, double* value, double* error);
/* Exact covariance of the lattice pairings under rpf_sample_gff. */
RPF_API rpf_status rpf_lattice_covariance(const rpf_lattice* lattice, const rpf_test_function* f,
                                          const rpf_test_function* g, double* value);

#ifdef __cplusplus
}
#endif

#endif
