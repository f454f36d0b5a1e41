#pragma once

// Command-line front end and artifact writers.
//
//   smst <experiment> [--preset P] [--set path=value]... [--out DIR]
//        [--format csv,json] [--config FILE]
//   smst list experiments|presets
//
// Exit codes: 0 success, 1 experiment failure, 2 usage or configuration error.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "smst/experiments/experiments.hpp"

namespace smst::cli {

using experiments::Json;

inline constexpr int kArtifactVersion = 1;

/// Shortest-safe round-trip text for a double: 17 significant digits.
[[nodiscard]] std::string format_number(double value);

/// Header row of column labels, then one line per row.
[[nodiscard]] std::string table_csv(const experiments::Table& table);

/// Metrics, solver reports, echoed inputs and artifact version.
[[nodiscard]] Json summary_json(const experiments::ExperimentResult& result, double runtime_seconds);

struct Formats {
    bool csv = true;
    bool json = true;
};

/// Writes <name>.csv per table and summary.json into dir (created if missing).
/// Returns the written paths.
std::vector<std::filesystem::path> write_artifacts(const experiments::ExperimentResult& result,
                                                   const std::filesystem::path& dir, const Formats& formats,
                                                   double runtime_seconds);

/// Machine-readable error object {"error": {kind, message, ...}}.
[[nodiscard]] Json error_json(const std::string& kind, const std::string& message,
                              const std::vector<std::string>& candidates = {});

/// Full command-line entry point; `env_out` stands in for $SMST_OUT when non-empty.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::string& env_out = "");

}  // namespace smst::cli
