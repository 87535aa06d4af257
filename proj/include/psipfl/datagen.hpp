// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psipfl/matrix.hpp"
#include "psipfl/metrics.hpp"

namespace psipfl {

/// A centralized labelled dataset.
struct Dataset {
  Matrix features;          // rows = examples
  std::vector<int> labels;  // each in [0, classes)
  int classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.cols(); }

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

struct SyntheticSpec {
  std::size_t n_examples = 2000;
  int classes = 2;
  std::size_t features = 2;
  double class_separation = 4.0;
  double noise_sd = 1.0;

  void validate() const;
};

/// Gaussian blobs: class c is centred at (separation / sqrt 2) * e_c so all
/// class means are pairwise `class_separation` apart; requires
/// features >= classes. Class sizes differ by at most one.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Reads a headered, comma-separated file. The label column may hold any
/// text; labels are numbered by first appearance. Every other column must be
/// a finite decimal number.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

struct PartitionSpec {
  int clients = 10;
  double alpha = 1.0;
  std::uint64_t seed = 1;
  std::size_t min_per_client = 10;
  double test_fraction = 0.2;
  int max_redraws = 1000;

  void validate(std::size_t n_examples) const;
};

/// One client's local data, split into train and test.
struct ClientShard {
  int client_id = 0;
  int classes = 0;
  Matrix train_features;
  std::vector<int> train_labels;
  Matrix test_features;
  std::vector<int> test_labels;
  // Row indices into the parent Dataset, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;

  std::size_t n_train() const noexcept { return train_labels.size(); }
  std::size_t n_test() const noexcept { return test_labels.size(); }
  bool operator==(const ClientShard&) const = default;
};

/// Number of test examples a client of size `n` keeps under the stratified
/// split: round(test_fraction * n), but at least one.
std::size_t test_count_for(std::size_t n, double test_fraction);

/// Label-skew partition. For every class an independent Dirichlet(alpha)
/// vector over clients decides how that class's examples are dealt out
/// (largest-remainder rounding). Draws that leave a client with fewer than
/// min_per_client training examples are rejected and redrawn from the same
/// advancing stream. Each client is then split into train/test per class.
/// Throws PartitionInfeasibleError when max_redraws is exhausted.
std::vector<ClientShard> partition_dirichlet(const Dataset& data, const PartitionSpec& spec);

/// Class counts of the shard's training split.
LabelHistogram label_histogram(const ClientShard& shard);

/// Debug export: client_id,split,label,f0..f{d-1}, one row per example.
void write_shards_csv(const std::filesystem::path& path, const std::vector<ClientShard>& shards);

/// Largest-remainder apportionment of `total` units by non-negative weights.
/// Ties on the fractional part go to the lower index. Sums exactly to total.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights);

}  // namespace psipfl
