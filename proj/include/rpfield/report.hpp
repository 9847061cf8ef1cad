#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace rpf {

inline constexpr const char* kReportSchema = "rpfield-report/1";

using Parameter = std::variant<double, std::int64_t, std::string>;
using Parameters = std::map<std::string, Parameter>;

/// A numeric result. `exact` results carry no sampling or quadrature error;
/// all others report `error` (a standard error or an error estimate).
struct ResultItem {
  std::string name;
  double value = 0.0;
  double error = 0.0;
  bool exact = false;
  std::size_t samples = 0;  ///< 0 when not sampled
  double ess = 0.0;
  Parameters parameters;
};

/// pass == (statistic <relation> threshold), decided by the producer.
struct Verdict {
  std::string check;
  Parameters parameters;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string relation = "<=";
  bool pass = false;
};

struct SeedChain {
  std::string name;
  std::uint64_t seed = 0;
  std::string derivation;  ///< e.g. "derive_seed(root, 3)"
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  std::string command;
  std::string config;  ///< canonical config echo (JSON text)
  std::vector<ResultItem> results;
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  std::vector<std::string> files;  ///< outputs written by the run
  std::uint64_t root_seed = 0;
  std::vector<SeedChain> chains;
  std::string started;  ///< UTC, ISO 8601
  double wall_clock_seconds = 0.0;
  int threads = 1;

  /// Conjunction of all verdicts (true when there are none).
  bool pass() const;
};

/// JSON document with the versioned schema tag. Tables are embedded.
std::string report_to_json(const Report& report);

/// The part of the report that must be identical across reruns with the same
/// config and seed: results, verdicts and tables.
std::string report_payload(const Report& report);

/// RFC 4180 style CSV: header row, '.' decimal point, shortest round-trip
/// number formatting independent of the locale.
std::string table_to_csv(const Table& table);

/// Locale-free shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace rpf
