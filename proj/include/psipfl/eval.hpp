// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "psipfl/datagen.hpp"
#include "psipfl/model.hpp"

namespace psipfl {

/// Test-size-weighted mean of client accuracies.
double global_accuracy(const std::map<int, LocalEval>& evals);

/// (max_i,j |a_i - a_j|) / min_i a_i. Empty when the smallest accuracy is
/// below 1e-9, where the ratio carries no information.
std::optional<double> client_parity(const std::map<int, double>& accuracies);

struct TargetDistance {
  double ad = 0.0;    // mean |a_i - target|
  double sdad = 0.0;  // mean (a_i - target)^2, no square root
};
TargetDistance distance_to_target(const std::map<int, double>& accuracies, double target);

struct FairnessReport {
  std::optional<double> cp;
  double ad = 0.0;
  double sdad = 0.0;
  std::map<int, double> per_client_accuracy;
  double target_accuracy = 0.0;
};
FairnessReport fairness_report(const std::map<int, LocalEval>& evals, double target);

struct EcdfPoint {
  double value;
  double cumfrac;
  bool operator==(const EcdfPoint&) const = default;
};
/// Sorted distinct values with the fraction of samples <= value.
std::vector<EcdfPoint> ecdf(std::vector<double> values);

/// Concatenates the train splits and the test splits of all shards.
std::pair<Dataset, Dataset> pool_shards(const std::vector<ClientShard>& shards);

/// Accuracy on `test` of the same linear model trained with SGD on the pooled
/// `train` set for `epoch_budget` epochs (zero epochs = zero parameters).
double centralized_target(const Dataset& train, const Dataset& test, const LocalHyper& hyper,
                          int epoch_budget, std::uint64_t seed);

}  // namespace psipfl
