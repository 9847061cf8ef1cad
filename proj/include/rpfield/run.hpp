#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rpfield/config.hpp"
#include "rpfield/report.hpp"

namespace rpf {

/// Command-line style overrides; the config itself is never modified.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<OutputFormat> format;
  bool write_files = true;
};

/// Applies the overrides to a copy of the config.
RunConfig effective_config(const RunConfig& config, const RunOptions& options);

/// Validates, dispatches and (unless write_files is off) writes the JSON
/// report, CSV tables and snapshots atomically into the output directory.
Report run(const std::string& command, const RunConfig& config, const RunOptions& options = {});
Report run(const std::string& command, const std::string& config_json, const RunOptions& options = {});

}  // namespace rpf
