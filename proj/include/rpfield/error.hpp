#pragma once

#include <stdexcept>
#include <string>

namespace rpf {

enum class ErrorCode {
  invalid_argument = 1,
  config = 2,
  quadrature = 3,
  solver = 4,
  degenerate_weights = 5,
  support = 6,
  budget = 7,
  io = 8,
  internal = 9,
};

/// Base of every error thrown by the library. The code survives the trip
/// through the C API as an rpf_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

/// Config validation failure; `path` is the JSON pointer of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(ErrorCode::config, path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Quadrature that did not reach its tolerance. Carries the best estimate.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double estimate, double achieved_error)
      : Error(ErrorCode::quadrature, what), estimate_(estimate), achieved_error_(achieved_error) {}
  double estimate() const noexcept { return estimate_; }
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double estimate_;
  double achieved_error_;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ErrorCode::solver, what) {}
};

/// Importance weights collapsed; the reweighting estimator cannot be trusted.
class DegenerateWeightsError : public Error {
 public:
  DegenerateWeightsError(const std::string& what, double ess)
      : Error(ErrorCode::degenerate_weights, what), ess_(ess) {}
  double effective_sample_size() const noexcept { return ess_; }

 private:
  double ess_;
};

/// A test function, region or transform leaves its admissible domain.
class SupportError : public Error {
 public:
  explicit SupportError(const std::string& what) : Error(ErrorCode::support, what) {}
};

class BudgetError : public Error {
 public:
  explicit BudgetError(const std::string& what) : Error(ErrorCode::budget, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

}  // namespace rpf
