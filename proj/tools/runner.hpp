#pragma once

// Subcommand execution and run-directory persistence.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "run_config.hpp"

namespace polyharm::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitStatus { kOk = 0, kValidation = 2, kNumerical = 3, kHypothesis = 4 };

struct RunResult {
  int status = kOk;
  nlohmann::ordered_json report;  // deterministic: no timings, no paths
  std::vector<std::pair<std::string, GridField>> fields;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::string summary;                                     // one line for stdout
};

/// Runs the configured subcommand. Library exceptions propagate.
RunResult execute(const RunConfig& cfg);

/// First free <out>/<subcommand>-NNN, created; never reuses a directory.
std::filesystem::path make_run_directory(const std::filesystem::path& out, const std::string& subcommand);

/// Writes report.json, the CSV fields and extra files into dir.
std::vector<std::string> write_run(const std::filesystem::path& dir, const RunResult& result);

std::string dump(const nlohmann::ordered_json& j);

}  // namespace polyharm::cli
