// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "psipfl/config.hpp"
#include "psipfl/error.hpp"
#include "psipfl/runner.hpp"

namespace {

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::string> out;
  std::optional<int> parallel;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Run a single seed instead of the configured list");
  cmd->add_option("--rounds", f.rounds, "Communication rounds")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory (overrides PSIPFL_OUTPUT_DIR and the file)");
  cmd->add_option("--parallel", f.parallel, "Worker threads for grid cells")->check(CLI::PositiveNumber);
}

psipfl::ConfigOverrides to_overrides(const Flags& f) {
  psipfl::ConfigOverrides o;
  o.seed = f.seed;
  o.rounds = f.rounds;
  if (f.out) o.output_dir = *f.out;
  o.parallel = f.parallel;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-skew federated learning simulator with PSI-based client selection"};
  app.require_subcommand(1);

  std::string config_path;
  std::string summary_dir;
  Flags run_flags, tune_flags, metrics_flags;

  auto* run = app.add_subcommand("run", "Train every strategy on every (alpha, K, seed) cell");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  add_flags(run, run_flags);

  auto* tune = app.add_subcommand("tune-tau", "Sweep PSI percentile thresholds for psi_tau strategies");
  tune->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  add_flags(tune, tune_flags);

  auto* metrics = app.add_subcommand("metrics", "Partition and dump heterogeneity metrics without training");
  metrics->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  add_flags(metrics, metrics_flags);

  auto* summarize = app.add_subcommand("summarize", "Aggregate results.csv across seeds");
  summarize->add_option("dir", summary_dir, "Output directory of a finished run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (summarize->parsed()) {
      std::cout << psipfl::summarize(summary_dir).string() << '\n';
      return 0;
    }
    psipfl::Command command = psipfl::Command::run;
    const Flags* flags = &run_flags;
    if (tune->parsed()) {
      command = psipfl::Command::tune_tau;
      flags = &tune_flags;
    } else if (metrics->parsed()) {
      command = psipfl::Command::metrics;
      flags = &metrics_flags;
    }
    const auto config = psipfl::parse_config(config_path, to_overrides(*flags));
    for (const auto& name : psipfl::execute(command, config))
      std::cout << (config.output_dir / name).string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "psipfl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
