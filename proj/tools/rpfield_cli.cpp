#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "rpfield/rpfield.h"

namespace {

// exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or config error, 3 compute error
constexpr int kVerdictFailed = 1;
constexpr int kConfigError = 2;
constexpr int kComputeError = 3;

int report_error(rpf_status s) {
  std::fprintf(stderr, "rpfield: %s error: %s\n", rpf_status_name(s), rpf_last_error());
  return s == RPF_ERR_CONFIG || s == RPF_ERR_INVALID_ARGUMENT ? kConfigError : kComputeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized reflection-positive field measures: sampling, estimation and verification"};
  app.set_version_flag("--version", std::string(rpf_version()));

  std::string command, config_path, out_dir, format;
  std::uint64_t seed = 0;
  int threads = -1;
  bool print = false;

  app.add_option("command", command, "Command to run")
      ->required()
      ->check(CLI::IsMember({"covariance", "sample", "estimate", "constrain-sweep", "verify-rp", "verify-invariance",
                             "verify-markov", "schedule-check"}));
  app.add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Root seed, overrides the config");
  app.add_option("--out", out_dir, "Output directory, overrides the config");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--format", format, "Output files")->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_flag("--print", print, "Also print the JSON report to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  std::ifstream in(config_path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  if (!in) {
    std::fprintf(stderr, "rpfield: cannot read %s\n", config_path.c_str());
    return kConfigError;
  }

  rpf_config* config = nullptr;
  if (rpf_status s = rpf_config_parse(text.str().c_str(), &config); s != RPF_OK) return report_error(s);

  rpf_run_options options;
  rpf_run_options_init(&options);
  if (*seed_opt) {
    options.has_seed = 1;
    options.seed = seed;
  }
  if (!out_dir.empty()) options.out_dir = out_dir.c_str();
  options.threads = threads;
  if (format == "json") options.format = RPF_FORMAT_JSON;
  else if (format == "csv") options.format = RPF_FORMAT_CSV;
  else if (format == "both") options.format = RPF_FORMAT_BOTH;

  rpf_report* report = nullptr;
  const rpf_status s = rpf_run(command.c_str(), config, &options, &report);
  rpf_config_free(config);
  if (s != RPF_OK) return report_error(s);

  size_t count = 0;
  rpf_report_verdict_count(report, &count);
  for (size_t i = 0; i < count; ++i) {
    const char* check = nullptr;
    double statistic = 0.0, threshold = 0.0;
    int pass = 0;
    rpf_report_verdict(report, i, &check, &statistic, &threshold, &pass);
    std::fprintf(stderr, "%s %s statistic=%.6g threshold=%.6g\n", pass ? "PASS" : "FAIL", check, statistic, threshold);
  }
  if (print) {
    char* json = nullptr;
    if (rpf_report_json(report, &json) == RPF_OK) {
      std::fputs(json, stdout);
      rpf_string_free(json);
    }
  }
  int pass = 0;
  rpf_report_pass(report, &pass);
  rpf_report_free(report);
  return pass ? 0 : kVerdictFailed;
}
