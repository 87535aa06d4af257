// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "psipfl/datagen.hpp"
#include "psipfl/matrix.hpp"

namespace psipfl {

/// Parameters of a C-class linear softmax classifier over d features.
/// Flat layout: weights row-major (class-major, C x d) followed by C biases.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(int classes, std::size_t features);
  /// Adopts a flat vector; throws ShapeError if its length is not C*d + C.
  static ModelParams from_flat(int classes, std::size_t features, std::vector<double> flat);

  int classes() const noexcept { return classes_; }
  std::size_t features() const noexcept { return features_; }
  std::size_t size() const noexcept { return flat_.size(); }

  std::span<double> flat() noexcept { return flat_; }
  std::span<const double> flat() const noexcept { return flat_; }
  std::span<double> weights(int c) noexcept {
    return {flat_.data() + static_cast<std::size_t>(c) * features_, features_};
  }
  std::span<const double> weights(int c) const noexcept {
    return {flat_.data() + static_cast<std::size_t>(c) * features_, features_};
  }
  std::span<double> biases() noexcept {
    return {flat_.data() + static_cast<std::size_t>(classes_) * features_,
            static_cast<std::size_t>(classes_)};
  }
  std::span<const double> biases() const noexcept {
    return {flat_.data() + static_cast<std::size_t>(classes_) * features_,
            static_cast<std::size_t>(classes_)};
  }

  bool same_shape(const ModelParams& o) const noexcept {
    return classes_ == o.classes_ && features_ == o.features_;
  }
  bool operator==(const ModelParams&) const = default;

 private:
  int classes_ = 0;
  std::size_t features_ = 0;
  std::vector<double> flat_;
};

struct LocalHyper {
  double learning_rate = 0.05;
  int epochs = 1;
  std::size_t batch_size = 32;
  double prox_mu = 0.0;

  void validate() const;
};

struct LocalEval {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
};

/// A view of labelled examples. `rows`, when non-empty, selects a subset of
/// the matrix rows (in that order); otherwise every row is used.
struct Batch {
  const Matrix& features;
  std::span<const int> labels;
  std::span<const std::size_t> rows = {};

  std::size_t size() const noexcept { return rows.empty() ? labels.size() : rows.size(); }
  std::size_t row_index(std::size_t i) const noexcept { return rows.empty() ? i : rows[i]; }
};

/// Proximal anchor for FedProx-style objectives. mu == 0 disables it.
struct Proximal {
  const ModelParams* anchor = nullptr;
  double mu = 0.0;
};

ModelParams init_params(std::size_t features, int classes);

/// Softmax class probabilities, one row per input row.
Matrix forward(const ModelParams& params, const Matrix& features);

/// Mean cross-entropy over the batch plus (mu/2) * ||w - anchor||^2.
double loss(const ModelParams& params, const Batch& batch, Proximal prox = {});

/// Gradient of `loss` with respect to the flat parameter vector.
ModelParams gradient(const ModelParams& params, const Batch& batch, Proximal prox = {});

/// Client update: `epochs` passes of minibatch SGD over seeded shuffles of the
/// shard's training split, anchored at `start` when hyper.prox_mu > 0.
ModelParams local_train(const ModelParams& start, const ClientShard& shard,
                        const LocalHyper& hyper, std::uint64_t seed);

/// Same as local_train on an arbitrary training set.
ModelParams sgd_train(const ModelParams& start, const Matrix& features,
                      std::span<const int> labels, const LocalHyper& hyper, std::uint64_t seed);

/// Argmax accuracy (ties go to the lowest class index) and mean cross-entropy.
LocalEval evaluate(const ModelParams& params, const Matrix& features, std::span<const int> labels);

/// Index of the largest entry; first index wins ties.
std::size_t argmax(std::span<const double> v) noexcept;

/// Checkpoint: int32 C, int32 d, then C*d + C little-endian float64 values.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace psipfl
