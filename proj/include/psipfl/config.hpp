// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "psipfl/experiment.hpp"

// Experiment configuration files.
//
//   # comment (also allowed after a value)
//   [dataset]            source = synthetic | csv, plus generator or csv keys
//   [partition]          alpha = 0.3, 1, 50    clients = 10, 50   ...
//   [run]                rounds, seeds, epsilon, output_dir, parallel
//   [strategy.<name>]    one section per strategy, in run order
//
// Lists are comma separated. Every key is optional except that at least one
// strategy section must exist; unknown sections and keys are errors. The
// full key table lives in README.md.

namespace psipfl {

/// Command-line values that beat the file. The output directory can also come
/// from the PSIPFL_OUTPUT_DIR environment variable (flag > env > file).
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> parallel;
};

inline constexpr const char* kOutputDirEnv = "PSIPFL_OUTPUT_DIR";

/// Parses and validates. Errors carry "<source>:<line>:" context for syntax
/// problems and the offending key for validation problems. Relative csv
/// dataset paths are resolved against `base_dir`.
ExperimentConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides = {},
                                   const std::filesystem::path& base_dir = {},
                                   std::string_view source_name = "<config>");

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// Canonical text form; parsing it yields an equivalent config.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace psipfl
