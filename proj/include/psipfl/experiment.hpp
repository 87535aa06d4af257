// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psipfl/datagen.hpp"
#include "psipfl/eval.hpp"
#include "psipfl/flcore.hpp"
#include "psipfl/metrics.hpp"
#include "psipfl/model.hpp"
#include "psipfl/selection.hpp"

namespace psipfl {

enum class SelectionKind { all, psi_tau, power_of_choice, haccs_lite, fedcls_lite };

std::string_view to_string(SelectionKind k) noexcept;
SelectionKind parse_selection_kind(std::string_view name);  // throws ConfigError

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::all;
  // psi_tau: a fixed tau, a fixed percentile, or (neither) tuned over
  // tune_percentiles.
  std::optional<double> tau;
  std::optional<double> percentile;
  std::vector<double> tune_percentiles = kDefaultPercentiles;
  // Zero means "derive from K": poc_d = K, everything else ceil(K/2).
  int poc_d = 0;
  int poc_m = 0;
  int n_clusters = 0;
  int fedcls_m = 0;

  bool tuned() const noexcept { return kind == SelectionKind::psi_tau && !tau && !percentile; }
  void validate() const;
};

struct StrategySpec {
  std::string name;
  SelectionStrategy selection;
  ServerStrategy server;
  LocalHyper local;
};

struct DatasetSource {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  SyntheticSpec synthetic;
  std::uint64_t seed = 0;  // synthetic generator seed; partitions use the run seeds
  std::filesystem::path csv_path;
  std::string label_column = "label";
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<double> alphas{0.3};
  std::vector<int> clients{10};
  std::size_t min_per_client = 10;
  double test_fraction = 0.2;
  int max_redraws = 1000;
  std::vector<StrategySpec> strategies;
  int rounds = 30;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double epsilon = kDefaultEpsilon;
  std::filesystem::path output_dir = "results";
  int parallel = 1;

  void validate() const;  // throws ConfigError naming the field
};

Dataset load_dataset(const DatasetSource& source);

/// One (alpha, K, seed) partition and its label-divergence statistics.
struct PartitionRecord {
  std::string id;
  double alpha = 0.0;
  int clients = 0;
  std::uint64_t seed = 0;
  FederationReport report;
};

struct RunRecord {
  std::string run_id;
  std::string partition_id;
  std::string strategy;
  double alpha = 0.0;
  int clients = 0;
  std::uint64_t seed = 0;
  std::optional<double> tau;   // psi_tau only
  std::string percentile;      // label of the percentile used, psi_tau only
  std::vector<int> selected;   // last round's participants
  double global_accuracy = 0.0;
  FairnessReport fairness;
  std::vector<RoundRecord> rounds;
  std::map<int, LocalEval> final_evals;
  ModelParams final_params;
  std::optional<TauReport> tau_report;
};

struct ExperimentResult {
  std::vector<PartitionRecord> partitions;
  std::vector<RunRecord> runs;  // order: alpha, K, seed, strategy
};

/// Chooses participants for a round given the current global model.
using Selector = std::function<std::vector<int>(int round, const ModelParams& global)>;

struct SimulationOutput {
  ModelParams final_params;
  std::vector<RoundRecord> rounds;
  std::map<int, LocalEval> final_evals;
  double global_accuracy = 0.0;
};

/// `rounds` federated rounds from zero parameters, then evaluation of the
/// final model on every client.
SimulationOutput simulate(const std::vector<ClientShard>& shards, const Selector& selector,
                          const LocalHyper& hyper, const ServerStrategy& server, int rounds,
                          std::uint64_t seed);

/// Runs `count` independent jobs on up to `threads` workers; results come
/// back in index order and the first failing index's exception is rethrown.
template <typename T>
std::vector<T> parallel_map(int threads, std::size_t count, const std::function<T(std::size_t)>& job);

std::string partition_id(double alpha, int clients, std::uint64_t seed);

/// Partitions and divergence statistics only; no training.
ExperimentResult run_partitions(const ExperimentConfig& config);

/// Full grid: every strategy on every (alpha, K, seed) partition.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace psipfl

#include "psipfl/detail/parallel.hpp"
