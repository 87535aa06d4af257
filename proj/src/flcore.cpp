// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/flcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psipfl/error.hpp"
#include "psipfl/eval.hpp"
#include "psipfl/kernels.hpp"
#include "psipfl/rng.hpp"

namespace psipfl {

std::string_view to_string(ServerKind k) noexcept {
  switch (k) {
    case ServerKind::fedavg: return "fedavg";
    case ServerKind::fedavgm: return "fedavgm";
    case ServerKind::fedadagrad: return "fedadagrad";
    case ServerKind::fedyogi: return "fedyogi";
    case ServerKind::fedadam: return "fedadam";
  }
  return "unknown";
}

ServerKind parse_server_kind(std::string_view name) {
  for (ServerKind k : {ServerKind::fedavg, ServerKind::fedavgm, ServerKind::fedadagrad,
                       ServerKind::fedyogi, ServerKind::fedadam})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown server optimizer '" + std::string(name) + "'");
}

void ServerStrategy::validate() const {
  if (kind == ServerKind::fedavg) return;
  if (!(server_lr > 0.0)) throw ConfigError("server_lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(adapt_tau > 0.0)) throw ConfigError("adapt_tau must be > 0");
}

ServerState ServerState::initial(const ServerStrategy& strategy, std::size_t n_params) {
  ServerState s;
  s.momentum.assign(n_params, 0.0);
  s.second_moment.assign(n_params, strategy.adaptive() ? strategy.adapt_tau * strategy.adapt_tau : 0.0);
  return s;
}

ModelParams aggregate_weighted(std::vector<ClientUpdate> updates) {
  if (updates.empty()) throw AggregationError("no client updates to aggregate");
  std::sort(updates.begin(), updates.end(),
            [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });
  const ModelParams& first = updates.front().params;
  double total = 0.0;
  for (const auto& u : updates) {
    if (!u.params.same_shape(first)) throw ShapeError("client updates have different shapes");
    if (u.n == 0) throw AggregationError("client " + std::to_string(u.client_id) + " reported n = 0");
    total += static_cast<double>(u.n);
  }
  ModelParams out(first.classes(), first.features());
  for (const auto& u : updates)
    kernels::axpy(static_cast<double>(u.n) / total, u.params.flat(), out.flat());
  return out;
}

ServerStepResult server_step(const ServerStrategy& strategy, const ServerState& state,
                             const ModelParams& current, const ModelParams& aggregated) {
  if (!current.same_shape(aggregated)) throw ShapeError("server step: shape mismatch");
  if (strategy.kind == ServerKind::fedavg) return {aggregated, state};
  const std::size_t n = current.size();
  if (state.momentum.size() != n || state.second_moment.size() != n)
    throw ShapeError("server state does not match the parameter count");

  ServerStepResult r{current, state};
  auto& m = r.state.momentum;
  auto& v = r.state.second_moment;
  const auto x = current.flat();
  const auto a = aggregated.flat();
  auto out = r.global.flat();
  const double lr = strategy.server_lr;
  const double b1 = strategy.beta1;
  const double b2 = strategy.beta2;

  for (std::size_t i = 0; i < n; ++i) {
    const double delta = a[i] - x[i];
    if (strategy.kind == ServerKind::fedavgm) {
      m[i] = b1 * m[i] + delta;
      // x + lr*m, written relative to the aggregate so that beta1 = 0,
      // lr = 1 lands exactly on it.
      out[i] = a[i] + (lr * m[i] - delta);
      continue;
    }
    m[i] = b1 * m[i] + (1.0 - b1) * delta;
    const double d2 = delta * delta;
    switch (strategy.kind) {
      case ServerKind::fedadagrad:
        v[i] = v[i] + d2;
        break;
      case ServerKind::fedyogi: {
        const double diff = v[i] - d2;
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        v[i] = v[i] - (1.0 - b2) * d2 * sign;
        break;
      }
      case ServerKind::fedadam:
        v[i] = b2 * v[i] + (1.0 - b2) * d2;
        break;
      default:
        break;
    }
    out[i] = x[i] + lr * m[i] / (std::sqrt(v[i]) + strategy.adapt_tau);
  }
  ++r.state.round_index;
  return r;
}

std::uint64_t client_train_seed(std::uint64_t run_seed, int round, int client_id) noexcept {
  return stream_seed(run_seed, "model",
                     {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(client_id)});
}

std::map<int, LocalEval> evaluate_all(const ModelParams& params, const std::vector<ClientShard>& shards) {
  std::map<int, LocalEval> out;
  for (const auto& s : shards) out[s.client_id] = evaluate(params, s.test_features, s.test_labels);
  return out;
}

RoundResult run_round(const ModelParams& global, const std::vector<ClientShard>& shards,
                      std::span<const int> selected, const LocalHyper& hyper,
                      const ServerStrategy& strategy, const ServerState& state,
                      std::uint64_t run_seed, int round) {
  if (selected.empty()) throw ParameterError("round with no selected clients");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<int> ids(selected.begin(), selected.end());
  std::sort(ids.begin(), ids.end());
  std::vector<ClientUpdate> updates;
  updates.reserve(ids.size());
  double loss_sum = 0.0;
  for (int id : ids) {
    const auto it = std::find_if(shards.begin(), shards.end(),
                                 [id](const ClientShard& s) { return s.client_id == id; });
    if (it == shards.end()) throw ParameterError("selected client " + std::to_string(id) + " does not exist");
    ModelParams local = local_train(global, *it, hyper, client_train_seed(run_seed, round, id));
    loss_sum += loss(local, Batch{it->train_features, it->train_labels});
    updates.push_back({id, std::move(local), it->n_train()});
  }

  const ModelParams aggregated = aggregate_weighted(std::move(updates));
  auto [next, next_state] = server_step(strategy, state, global, aggregated);

  RoundResult r{std::move(next), std::move(next_state), {}, {}};
  r.evals = evaluate_all(r.global, shards);
  r.record.round = round;
  r.record.selected_clients = std::move(ids);
  r.record.global_accuracy = global_accuracy(r.evals);
  r.record.mean_local_loss = loss_sum / static_cast<double>(r.record.selected_clients.size());
  r.record.wall_time = std::chrono::steady_clock::now() - t0;
  return r;
}

}  // namespace psipfl
