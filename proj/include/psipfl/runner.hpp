// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psipfl/experiment.hpp"

// Writes experiment outputs. Every CSV is UTF-8 with a header row and '.'
// decimals; numbers use the shortest round-trip form, so a fixed config and
// seed set always yields byte-identical files. manifest.json is written last;
// a directory without one holds partial output.

namespace psipfl {

inline constexpr int kSchemaVersion = 1;

namespace files {
inline constexpr const char* kMetrics = "metrics.csv";
inline constexpr const char* kRounds = "rounds.csv";
inline constexpr const char* kResults = "results.csv";
inline constexpr const char* kFairness = "fairness.csv";
inline constexpr const char* kEcdf = "ecdf.csv";
inline constexpr const char* kTauReport = "tau_report.csv";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kSummary = "summary.csv";
}  // namespace files

void write_metrics_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_rounds_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_results_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_fairness_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_ecdf_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_tau_report_csv(const std::filesystem::path& path, const ExperimentResult& result);

/// Hex FNV-1a-64 of a file's bytes.
std::string file_hash(const std::filesystem::path& path);

/// Manifest with schema_version, command, config echo, per-file hashes and a
/// content hash over all of them.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const ExperimentConfig& config, const std::vector<std::string>& written);

enum class Command { run, tune_tau, metrics };

/// Executes a command against config.output_dir and returns the names of
/// the files written (manifest last).
std::vector<std::string> execute(Command command, const ExperimentConfig& config);

/// Aggregates results.csv across seeds into summary.csv; returns its path.
/// Throws Error when the directory has no manifest.
std::filesystem::path summarize(const std::filesystem::path& dir);

}  // namespace psipfl
