#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rpfield/constraints.hpp"
#include "rpfield/estimator.hpp"
#include "rpfield/verifiers.hpp"

namespace rpf {

inline constexpr const char* kConfigSchema = "rpfield-config/1";

enum class OutputFormat { json, csv, both };

/// Per-command options. Unused blocks keep their defaults.
struct CovarianceOptions {
  std::vector<std::pair<std::string, std::string>> pairs;  ///< test-function names
  bool operator==(const CovarianceOptions&) const = default;
};

struct SampleOptions {
  std::size_t snapshots = 0;          ///< fields written to disk
  std::vector<std::string> probes;    ///< empirical covariance check against the lattice sum
  double sigmas = 4.0;                ///< per-entry tolerance in standard errors
  std::size_t allowed_failures = 2;
  bool operator==(const SampleOptions&) const = default;
};

struct EstimateOptions {
  std::vector<std::string> observables;
  double limit_tolerance = 1e-3;
  bool operator==(const EstimateOptions&) const = default;
};

struct SweepOptions {
  std::string f, g;
  double limit_tolerance = 1e-6;
  PenalizedSolveOptions::Method method = PenalizedSolveOptions::Method::automatic;
  std::size_t dense_limit = 2048;
  double solver_tolerance = 1e-12;
  bool operator==(const SweepOptions&) const = default;
};

struct RpOptions {
  std::vector<std::string> observables;
  double sigmas = 4.0;           ///< min eigenvalue >= -sigmas * stderr
  double free_tolerance = 1e-12; ///< closed-form free Gram, cosine outers only
  bool cross_check = false;      ///< also run the split-region form
  bool operator==(const RpOptions&) const = default;
};

struct InvarianceOptions {
  std::string observable;
  EuclideanTransform transform;
  int calibration_index = 1;
  double sigmas = 3.0;
  std::optional<double> c0;  ///< skips calibration when given
  bool operator==(const InvarianceOptions&) const = default;
};

struct MarkovOptions {
  int band_width = 1;
  int band_offset = 0;
  double tolerance = 1e-10;
  bool operator==(const MarkovOptions&) const = default;
};

struct ScheduleCheckOptions {
  int scan_limit = 10000;
  bool operator==(const ScheduleCheckOptions&) const = default;
};

struct OutputConfig {
  std::string directory = ".";
  std::string prefix = "rpfield";
  OutputFormat format = OutputFormat::json;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  LatticeSpec lattice;
  QuadratureConfig quadrature;
  std::size_t samples = 1000;
  double min_ess = 2.0;
  std::size_t max_samples = 1u << 20;

  std::map<std::string, TestFunction> test_functions;
  std::map<std::string, CylindricalFunction> observables;
  /// Names of each observable's inner functions, kept for the echo.
  std::map<std::string, std::vector<std::string>> observable_inner;
  Lagrangian lagrangian = Lagrangian::zero();
  ConstraintSet constraints;
  bool has_constraints = false;  ///< a constraints block was present
  CutoffSchedule schedule;
  std::vector<int> indices = {1};

  CovarianceOptions covariance;
  SampleOptions sample;
  EstimateOptions estimate;
  SweepOptions sweep;
  RpOptions rp;
  InvarianceOptions invariance;
  MarkovOptions markov;
  ScheduleCheckOptions schedule_check;

  OutputConfig output;

  MonteCarloConfig monte_carlo(std::uint64_t seed) const;
  bool operator==(const RunConfig&) const = default;
};

/// The eight command names in dispatch order.
const std::vector<std::string>& command_names();
bool is_command(const std::string& name);

/// Parses a JSON document. Structural errors throw ConfigError with the JSON
/// pointer of the field.
RunConfig parse_config(const std::string& json_text);
/// Canonical JSON text; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

/// Command-specific checks done before any compute: catalog membership, guard
/// margins (supports inside the torus, 1/Lambda_n < L/2, r_n < L/2, upper
/// half-space supports for RP) and the schedule condition for the commands
/// that rely on it.
void validate_config(const RunConfig& config, const std::string& command);

}  // namespace rpf
