// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "psipfl/datagen.hpp"
#include "psipfl/model.hpp"

namespace psipfl {

enum class ServerKind { fedavg, fedavgm, fedadagrad, fedyogi, fedadam };

std::string_view to_string(ServerKind k) noexcept;
ServerKind parse_server_kind(std::string_view name);  // throws ConfigError

/// Server-side optimizer applied to the round pseudo-gradient
/// (aggregated - current). fedavg ignores every other field.
struct ServerStrategy {
  ServerKind kind = ServerKind::fedavg;
  double server_lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adapt_tau = 1e-3;

  void validate() const;
  bool adaptive() const noexcept {
    return kind == ServerKind::fedadagrad || kind == ServerKind::fedyogi || kind == ServerKind::fedadam;
  }
};

struct ServerState {
  std::vector<double> momentum;       // m_t
  std::vector<double> second_moment;  // v_t
  int round_index = 0;

  /// Zero momentum; second moment starts at adapt_tau^2 for adaptive kinds.
  static ServerState initial(const ServerStrategy& strategy, std::size_t n_params);
};

struct ClientUpdate {
  int client_id = 0;
  ModelParams params;
  std::uint64_t n = 0;
};

/// sum_i (n_i / N) * w_i, accumulated in ascending client id. Throws
/// AggregationError on an empty set, ShapeError on mixed shapes.
ModelParams aggregate_weighted(std::vector<ClientUpdate> updates);

struct ServerStepResult {
  ModelParams global;
  ServerState state;
};

ServerStepResult server_step(const ServerStrategy& strategy, const ServerState& state,
                             const ModelParams& current, const ModelParams& aggregated);

struct RoundRecord {
  int round = 0;
  std::vector<int> selected_clients;
  double global_accuracy = 0.0;
  double mean_local_loss = 0.0;  // mean training loss of the returned local models
  std::chrono::duration<double> wall_time{};
};

struct RoundResult {
  ModelParams global;
  ServerState state;
  RoundRecord record;
  std::map<int, LocalEval> evals;  // new global model on every client's test split
};

/// Seed for client `client_id` in round `round` of a run.
std::uint64_t client_train_seed(std::uint64_t run_seed, int round, int client_id) noexcept;

/// One round: broadcast, train the selected clients, aggregate, apply the
/// server optimizer, then evaluate on every client (selected or not).
RoundResult run_round(const ModelParams& global, const std::vector<ClientShard>& shards,
                      std::span<const int> selected, const LocalHyper& hyper,
                      const ServerStrategy& strategy, const ServerState& state,
                      std::uint64_t run_seed, int round);

/// Evaluation of `params` on each shard's test split.
std::map<int, LocalEval> evaluate_all(const ModelParams& params, const std::vector<ClientShard>& shards);

}  // namespace psipfl
