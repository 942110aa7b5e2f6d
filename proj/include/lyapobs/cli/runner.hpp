#pragma once

#include "lyapobs/cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lyapobs::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitError = 1,
  kExitFail = 2,
  kExitRefused = 3,
  kExitUsage = 4,
};

struct RunRecord {
  json config;
  std::string status;  // passed | failed | refused | error
  std::string reason;
  json results = json::object();
  // expectation outcomes, one per key of config.expect
  json checks = json::array();
  double wall_time_s = 0.0;

  // Everything except the wall time is a function of the config.
  json to_json() const;
  int exit_code() const;
};

RunRecord run(const ExperimentConfig& cfg);

struct SuiteEntry {
  std::string file;
  std::string status;
  std::string expected;
  std::string reason;
  bool ok = false;
};

struct SuiteSummary {
  std::vector<SuiteEntry> entries;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t refused = 0;
  std::size_t errors = 0;
  std::size_t unexpected = 0;
  json to_json() const;
  int exit_code() const { return unexpected == 0 ? kExitPass : kExitFail; }
};

// Runs every *.json in `dir` in name order. A run is as expected when its
// status equals expect.status (default "passed").
SuiteSummary run_suite(const std::filesystem::path& dir);

// Command-line entry point.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lyapobs::cli
