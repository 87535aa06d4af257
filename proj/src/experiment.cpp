// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/experiment.hpp"

#include <cmath>
#include <set>

#include "psipfl/csv.hpp"
#include "psipfl/error.hpp"
#include "psipfl/rng.hpp"

namespace psipfl {

std::string_view to_string(SelectionKind k) noexcept {
  switch (k) {
    case SelectionKind::all: return "all";
    case SelectionKind::psi_tau: return "psi_tau";
    case SelectionKind::power_of_choice: return "power_of_choice";
    case SelectionKind::haccs_lite: return "haccs_lite";
    case SelectionKind::fedcls_lite: return "fedcls_lite";
  }
  return "unknown";
}

SelectionKind parse_selection_kind(std::string_view name) {
  for (SelectionKind k : {SelectionKind::all, SelectionKind::psi_tau, SelectionKind::power_of_choice,
                          SelectionKind::haccs_lite, SelectionKind::fedcls_lite})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown selection strategy '" + std::string(name) + "'");
}

void SelectionStrategy::validate() const {
  if (tau && percentile) throw ConfigError("set either tau or percentile, not both");
  if ((tau || percentile) && kind != SelectionKind::psi_tau)
    throw ConfigError("tau/percentile only apply to psi_tau selection");
  if (tau && !(*tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (percentile && !(*percentile > 0.0 && *percentile <= 100.0))
    throw ConfigError("percentile must lie in (0, 100]");
  if (tuned() && tune_percentiles.empty()) throw ConfigError("tune_percentiles is empty");
  for (double p : tune_percentiles)
    if (!(p > 0.0 && p <= 100.0)) throw ConfigError("tune_percentiles entries must lie in (0, 100]");
  if (poc_d < 0 || poc_m < 0 || n_clusters < 0 || fedcls_m < 0)
    throw ConfigError("selection sizes must be >= 0");
}

void ExperimentConfig::validate() const {
  if (dataset.kind == DatasetSource::Kind::synthetic) dataset.synthetic.validate();
  else if (dataset.csv_path.empty()) throw ConfigError("dataset.path is required for csv datasets");
  if (alphas.empty()) throw ConfigError("partition.alpha needs at least one value");
  for (double a : alphas)
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("partition.alpha values must be > 0");
  if (clients.empty()) throw ConfigError("partition.clients needs at least one value");
  for (int k : clients)
    if (k < 1) throw ConfigError("partition.clients values must be >= 1");
  if (strategies.empty()) throw ConfigError("at least one [strategy.<name>] section is required");
  std::set<std::string> names;
  for (const auto& s : strategies) {
    if (s.name.empty()) throw ConfigError("strategy name is empty");
    if (!names.insert(s.name).second) throw ConfigError("duplicate strategy '" + s.name + "'");
    try {
      s.selection.validate();
      s.server.validate();
      s.local.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("strategy." + s.name + ": " + e.what());
    }
  }
  if (rounds < 0) throw ConfigError("run.rounds must be >= 0");
  if (seeds.empty()) throw ConfigError("run.seeds needs at least one seed");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("run.epsilon must lie in (0, 0.5)");
  if (parallel < 1) throw ConfigError("run.parallel must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("partition.test_fraction must lie in (0, 1)");
  if (min_per_client < 1) throw ConfigError("partition.min_per_client must be >= 1");
}

Dataset load_dataset(const DatasetSource& source) {
  Dataset ds = source.kind == DatasetSource::Kind::synthetic
                   ? generate_synthetic(source.synthetic, source.seed)
                   : load_csv(source.csv_path, source.label_column);
  ds.validate();
  return ds;
}

std::string partition_id(double alpha, int clients, std::uint64_t seed) {
  return "a" + csv::format_double(alpha) + "_k" + std::to_string(clients) + "_s" + std::to_string(seed);
}

SimulationOutput simulate(const std::vector<ClientShard>& shards, const Selector& selector,
                          const LocalHyper& hyper, const ServerStrategy& server, int rounds,
                          std::uint64_t seed) {
  if (shards.empty()) throw ParameterError("simulation without clients");
  ModelParams global = init_params(shards.front().train_features.cols(), shards.front().classes);
  ServerState state = ServerState::initial(server, global.size());
  SimulationOutput out;
  for (int r = 0; r < rounds; ++r) {
    const std::vector<int> selected = selector(r, global);
    RoundResult res = run_round(global, shards, selected, hyper, server, state, seed, r);
    global = std::move(res.global);
    state = std::move(res.state);
    out.rounds.push_back(std::move(res.record));
    if (r + 1 == rounds) out.final_evals = std::move(res.evals);
  }
  if (rounds == 0) out.final_evals = evaluate_all(global, shards);
  out.global_accuracy = global_accuracy(out.final_evals);
  out.final_params = std::move(global);
  return out;
}

namespace {

int half_up(int k) { return (k + 1) / 2; }

std::map<int, LabelHistogram> histograms_of(const std::vector<ClientShard>& shards) {
  std::map<int, LabelHistogram> h;
  for (const auto& s : shards) h[s.client_id] = label_histogram(s);
  return h;
}

Selector fixed(std::vector<int> ids) {
  return [ids = std::move(ids)](int, const ModelParams&) { return ids; };
}

struct Cell {
  double alpha;
  int clients;
  std::uint64_t seed;
};

std::vector<Cell> cells_of(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (double a : cfg.alphas)
    for (int k : cfg.clients)
      for (std::uint64_t s : cfg.seeds) cells.push_back({a, k, s});
  return cells;
}

PartitionSpec partition_spec(const ExperimentConfig& cfg, const Cell& cell) {
  PartitionSpec p;
  p.alpha = cell.alpha;
  p.clients = cell.clients;
  p.seed = cell.seed;
  p.min_per_client = cfg.min_per_client;
  p.test_fraction = cfg.test_fraction;
  p.max_redraws = cfg.max_redraws;
  return p;
}

PartitionRecord describe(const Cell& cell, const std::vector<ClientShard>& shards, double epsilon) {
  PartitionRecord rec;
  rec.id = partition_id(cell.alpha, cell.clients, cell.seed);
  rec.alpha = cell.alpha;
  rec.clients = cell.clients;
  rec.seed = cell.seed;
  rec.report = federation_report(histograms_of(shards), epsilon);
  return rec;
}

struct CellOutput {
  PartitionRecord partition;
  std::vector<RunRecord> runs;
};

RunRecord run_strategy(const ExperimentConfig& cfg, const Cell& cell, const StrategySpec& strat,
                       const std::vector<ClientShard>& shards, const PartitionRecord& part,
                       const std::pair<Dataset, Dataset>& pooled) {
  const int k = cell.clients;
  const auto hist = histograms_of(shards);
  const SelectionStrategy& sel = strat.selection;

  RunRecord rec;
  rec.partition_id = part.id;
  rec.run_id = strat.name + "_" + part.id;
  rec.strategy = strat.name;
  rec.alpha = cell.alpha;
  rec.clients = k;
  rec.seed = cell.seed;

  auto train = [&](const Selector& selector) {
    return simulate(shards, selector, strat.local, strat.server, cfg.rounds, cell.seed);
  };

  std::optional<SimulationOutput> sim;
  switch (sel.kind) {
    case SelectionKind::all: {
      std::vector<int> ids;
      for (const auto& s : shards) ids.push_back(s.client_id);
      sim = train(fixed(ids));
      break;
    }
    case SelectionKind::psi_tau: {
      const auto psis = part.report.psi_report().per_client;
      if (sel.tuned()) {
        // Keep each candidate's run so the winner is not trained twice.
        std::vector<SimulationOutput> trials;
        TauReport report = tune_tau(psis, candidate_taus(psis, sel.tune_percentiles),
                                    [&](const std::vector<int>& ids) {
                                      trials.push_back(train(fixed(ids)));
                                      return trials.back().global_accuracy;
                                    });
        // tune_tau evaluates candidates in ascending percentile order, which
        // is the order of `trials`.
        sim = std::move(trials[report.chosen]);
        rec.tau = report.chosen_tau();
        rec.percentile = report.chosen_percentile();
        rec.tau_report = std::move(report);
      } else {
        double tau = 0.0;
        if (sel.tau) {
          tau = *sel.tau;
        } else {
          const auto c = candidate_taus(psis, {*sel.percentile});
          tau = c.front().tau;
          rec.percentile = c.front().label;
        }
        rec.tau = tau;
        sim = train(fixed(select_by_tau(psis, tau)));
      }
      break;
    }
    case SelectionKind::power_of_choice: {
      const int d = sel.poc_d > 0 ? sel.poc_d : k;
      const int m = sel.poc_m > 0 ? sel.poc_m : half_up(k);
      sim = train([&, d, m](int round, const ModelParams& global) {
        std::map<int, double> losses;
        for (const auto& s : shards) losses[s.client_id] = loss(global, Batch{s.train_features, s.train_labels});
        return select_power_of_choice(losses, d, m, stream_seed(cell.seed, "poc", {static_cast<std::uint64_t>(round)}));
      });
      break;
    }
    case SelectionKind::haccs_lite: {
      const int c = sel.n_clusters > 0 ? sel.n_clusters : half_up(k);
      sim = train(fixed(select_haccs_lite(hist, c, stream_seed(cell.seed, "haccs"), cfg.epsilon)));
      break;
    }
    case SelectionKind::fedcls_lite: {
      const int m = sel.fedcls_m > 0 ? sel.fedcls_m : half_up(k);
      sim = train(fixed(select_fedcls_lite(hist, m)));
      break;
    }
  }

  const double target = centralized_target(pooled.first, pooled.second, strat.local,
                                           cfg.rounds * strat.local.epochs,
                                           stream_seed(cell.seed, "centralized"));
  rec.global_accuracy = sim->global_accuracy;
  rec.fairness = fairness_report(sim->final_evals, target);
  if (!sim->rounds.empty()) rec.selected = sim->rounds.back().selected_clients;
  rec.rounds = std::move(sim->rounds);
  rec.final_evals = std::move(sim->final_evals);
  rec.final_params = std::move(sim->final_params);
  return rec;
}

template <typename F>
ExperimentResult run_cells(const ExperimentConfig& config, F&& per_cell) {
  config.validate();
  const Dataset data = load_dataset(config.dataset);
  const auto cells = cells_of(config);
  auto outputs = parallel_map<CellOutput>(config.parallel, cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    std::vector<ClientShard> shards;
    try {
      shards = partition_dirichlet(data, partition_spec(config, cell));
    } catch (const Error& e) {
      throw Error(partition_id(cell.alpha, cell.clients, cell.seed) + ": " + e.what());
    }
    CellOutput out;
    out.partition = describe(cell, shards, config.epsilon);
    per_cell(cell, shards, out);
    return out;
  });
  ExperimentResult result;
  for (auto& o : outputs) {
    result.partitions.push_back(std::move(o.partition));
    for (auto& r : o.runs) result.runs.push_back(std::move(r));
  }
  return result;
}

}  // namespace

ExperimentResult run_partitions(const ExperimentConfig& config) {
  return run_cells(config, [](const Cell&, const std::vector<ClientShard>&, CellOutput&) {});
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_cells(config, [&](const Cell& cell, const std::vector<ClientShard>& shards, CellOutput& out) {
    const auto pooled = pool_shards(shards);
    for (const auto& strat : config.strategies) {
      try {
        out.runs.push_back(run_strategy(config, cell, strat, shards, out.partition, pooled));
      } catch (const Error& e) {
        throw Error(strat.name + "_" + out.partition.id + ": " + e.what());
      }
    }
  });
}

}  // namespace psipfl
