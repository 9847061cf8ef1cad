#include "rpfield/rpfield.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "rpfield/error.hpp"
#include "rpfield/run.hpp"

struct rpf_config {
  rpf::RunConfig value;
};
struct rpf_report {
  rpf::Report value;
};
struct rpf_lattice {
  rpf::LatticeSpec value;
};
struct rpf_test_function {
  rpf::TestFunction value;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_error_path;

rpf_status fail(rpf_status s, const std::string& what, const std::string& path = {}) {
  last_error = what;
  last_error_path = path;
  return s;
}

template <class F>
rpf_status guard(F&& f) {
  try {
    f();
    return RPF_OK;
  } catch (const rpf::ConfigError& e) {
    return fail(RPF_ERR_CONFIG, e.what(), e.path());
  } catch (const rpf::Error& e) {
    return fail(static_cast<rpf_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RPF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RPF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RPF_ERR_INTERNAL, "unknown exception");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

#define RPF_REQUIRE(cond, msg) \
  if (!(cond)) return fail(RPF_ERR_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

RPF_API const char* rpf_version(void) { return "0.1.0"; }

RPF_API const char* rpf_status_name(rpf_status s) {
  switch (s) {
    case RPF_OK: return "ok";
    case RPF_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case RPF_ERR_CONFIG: return "config";
    case RPF_ERR_QUADRATURE: return "quadrature";
    case RPF_ERR_SOLVER: return "solver";
    case RPF_ERR_DEGENERATE_WEIGHTS: return "degenerate_weights";
    case RPF_ERR_SUPPORT: return "support";
    case RPF_ERR_BUDGET: return "budget";
    case RPF_ERR_IO: return "io";
    case RPF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

RPF_API const char* rpf_last_error(void) { return last_error.c_str(); }
RPF_API const char* rpf_last_error_path(void) { return last_error_path.c_str(); }
RPF_API void rpf_string_free(char* s) { std::free(s); }

RPF_API rpf_status rpf_config_parse(const char* json, rpf_config** out) {
  RPF_REQUIRE(json && out, "rpf_config_parse: null argument");
  *out = nullptr;
  return guard([&] { *out = new rpf_config{rpf::parse_config(json)}; });
}

RPF_API rpf_status rpf_config_emit(const rpf_config* config, char** out_json) {
  RPF_REQUIRE(config && out_json, "rpf_config_emit: null argument");
  return guard([&] { *out_json = copy_string(rpf::emit_config(config->value)); });
}

RPF_API void rpf_config_free(rpf_config* config) { delete config; }

RPF_API void rpf_run_options_init(rpf_run_options* o) {
  if (!o) return;
  o->has_seed = 0;
  o->seed = 0;
  o->out_dir = nullptr;
  o->threads = -1;
  o->format = RPF_FORMAT_CONFIG;
  o->write_files = 1;
}

RPF_API rpf_status rpf_run(const char* command, const rpf_config* config, const rpf_run_options* options,
                           rpf_report** out) {
  RPF_REQUIRE(command && config && out, "rpf_run: null argument");
  *out = nullptr;
  if (!rpf::is_command(command)) return fail(RPF_ERR_INVALID_ARGUMENT, std::string("unknown command '") + command + "'");
  rpf::RunOptions opt;
  if (options) {
    if (options->has_seed) opt.seed = options->seed;
    if (options->out_dir) opt.out_dir = options->out_dir;
    if (options->threads >= 0) opt.threads = options->threads;
    switch (options->format) {
      case RPF_FORMAT_JSON: opt.format = rpf::OutputFormat::json; break;
      case RPF_FORMAT_CSV: opt.format = rpf::OutputFormat::csv; break;
      case RPF_FORMAT_BOTH: opt.format = rpf::OutputFormat::both; break;
      case RPF_FORMAT_CONFIG: break;
      default: return fail(RPF_ERR_INVALID_ARGUMENT, "rpf_run: unknown format");
    }
    opt.write_files = options->write_files != 0;
  }
  return guard([&] { *out = new rpf_report{rpf::run(command, config->value, opt)}; });
}

RPF_API rpf_status rpf_report_json(const rpf_report* report, char** out_json) {
  RPF_REQUIRE(report && out_json, "rpf_report_json: null argument");
  return guard([&] { *out_json = copy_string(rpf::report_to_json(report->value)); });
}

RPF_API rpf_status rpf_report_payload(const rpf_report* report, char** out_json) {
  RPF_REQUIRE(report && out_json, "rpf_report_payload: null argument");
  return guard([&] { *out_json = copy_string(rpf::report_payload(report->value)); });
}

RPF_API rpf_status rpf_report_pass(const rpf_report* report, int* pass) {
  RPF_REQUIRE(report && pass, "rpf_report_pass: null argument");
  *pass = report->value.pass() ? 1 : 0;
  return RPF_OK;
}

RPF_API rpf_status rpf_report_verdict_count(const rpf_report* report, size_t* count) {
  RPF_REQUIRE(report && count, "rpf_report_verdict_count: null argument");
  *count = report->value.verdicts.size();
  return RPF_OK;
}

RPF_API rpf_status rpf_report_verdict(const rpf_report* report, size_t index, const char** check, double* statistic,
                                      double* threshold, int* pass) {
  RPF_REQUIRE(report, "rpf_report_verdict: null report");
  RPF_REQUIRE(index < report->value.verdicts.size(), "rpf_report_verdict: index out of range");
  const auto& v = report->value.verdicts[index];
  if (check) *check = v.check.c_str();
  if (statistic) *statistic = v.statistic;
  if (threshold) *threshold = v.threshold;
  if (pass) *pass = v.pass ? 1 : 0;
  return RPF_OK;
}

RPF_API void rpf_report_free(rpf_report* report) { delete report; }

RPF_API rpf_status rpf_lattice_create(int dim, int sites, double length, int components, rpf_lattice** out) {
  RPF_REQUIRE(out, "rpf_lattice_create: null argument");
  *out = nullptr;
  return guard([&] { *out = new rpf_lattice{rpf::LatticeSpec::build(dim, sites, length, components)}; });
}

RPF_API size_t rpf_lattice_size(const rpf_lattice* lattice) { return lattice ? lattice->value.size() : 0; }

RPF_API void rpf_lattice_free(rpf_lattice* lattice) { delete lattice; }

RPF_API rpf_status rpf_sample_gff(const rpf_lattice* lattice, uint64_t seed, double* out, size_t length) {
  RPF_REQUIRE(lattice && out, "rpf_sample_gff: null argument");
  RPF_REQUIRE(length == lattice->value.size(), "rpf_sample_gff: buffer length must be K N^D");
  return guard([&] {
    const auto field = rpf::sample_gff(lattice->value, seed);
    std::memcpy(out, field.data().data(), length * sizeof(double));
  });
}

RPF_API rpf_status rpf_write_snapshot(const rpf_lattice* lattice, const double* data, size_t length, uint64_t seed,
                                      const char* base_path) {
  RPF_REQUIRE(lattice && data && base_path, "rpf_write_snapshot: null argument");
  RPF_REQUIRE(length == lattice->value.size(), "rpf_write_snapshot: buffer length must be K N^D");
  return guard([&] {
    rpf::LatticeField field(lattice->value);
    std::memcpy(field.data().data(), data, length * sizeof(double));
    rpf::write_snapshot(field, seed, base_path);
  });
}

RPF_API rpf_status rpf_test_function_gaussian(int dim, const double* center, double width, double amplitude,
                                              int components, const double* component, rpf_test_function** out) {
  RPF_REQUIRE(center && component && out, "rpf_test_function_gaussian: null argument");
  RPF_REQUIRE(dim >= 1 && components >= 1, "rpf_test_function_gaussian: dim and components must be >= 1");
  *out = nullptr;
  return guard([&] {
    *out = new rpf_test_function{rpf::TestFunction::gaussian(std::vector<double>(center, center + dim), width, amplitude,
                                                             std::vector<double>(component, component + components))};
  });
}

RPF_API void rpf_test_function_free(rpf_test_function* tf) { delete tf; }

RPF_API rpf_status rpf_free_covariance(const rpf_test_function* f, const rpf_test_function* g, double abs_tol,
                                       double rel_tol, double* value, double* error) {
  RPF_REQUIRE(f && g && value, "rpf_free_covariance: null argument");
  return guard([&] {
    const auto q = rpf::free_covariance(f->value, g->value, rpf::QuadratureConfig::radial(abs_tol, rel_tol));
    *value = q.value;
    if (error) *error = q.error;
  });
}

RPF_API rpf_status rpf_lattice_covariance(const rpf_lattice* lattice, const rpf_test_function* f,
                                          const rpf_test_function* g, double* value) {
  RPF_REQUIRE(lattice && f && g && value, "rpf_lattice_covariance: null argument");
  return guard([&] { *value = rpf::lattice_covariance(f->value, g->value, lattice->value); });
}

}  // extern "C"
