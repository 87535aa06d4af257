// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "psipfl/detail/parallel.hpp"
#include "psipfl/error.hpp"
#include "psipfl/experiment.hpp"

using namespace psipfl;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.dataset.synthetic.n_examples = 1200;
  c.dataset.synthetic.classes = 3;
  c.dataset.synthetic.features = 3;
  c.dataset.synthetic.class_separation = 3.0;
  c.alphas = {0.5, 5};
  c.clients = {6};
  c.seeds = {1, 2, 3, 4, 5};
  c.rounds = 3;
  StrategySpec a{"fedavg", {}, {}, {}};
  StrategySpec b{"psi", {}, {}, {}};
  b.selection.kind = SelectionKind::psi_tau;
  c.strategies = {a, b};
  return c;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("parallel_map keeps index order and rethrows") {
  const auto out = parallel_map<int>(4, 50, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 50; ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK(parallel_map<int>(3, 0, [](std::size_t) { return 1; }).empty());
  CHECK_THROWS_AS(parallel_map<int>(2, 10,
                                    [](std::size_t i) -> int {
                                      if (i == 7) throw ParameterError("boom");
                                      return 0;
                                    }),
                  ParameterError);
}

TEST_CASE("grid produces one record per cell and strategy, in order") {
  const auto cfg = small_config();
  const auto res = run_experiment(cfg);
  CHECK(res.partitions.size() == 10);
  REQUIRE(res.runs.size() == 20);
  CHECK(res.runs[0].run_id == "fedavg_a0.5_k6_s1");
  CHECK(res.runs[1].run_id == "psi_a0.5_k6_s1");
  CHECK(res.runs[19].run_id == "psi_a5_k6_s5");
  for (const auto& r : res.runs) {
    CHECK(r.rounds.size() == 3);
    CHECK(r.final_evals.size() == 6);
    CHECK(r.global_accuracy >= 0.0);
    CHECK(r.global_accuracy <= 1.0);
    if (r.strategy == "psi") {
      REQUIRE(r.tau_report.has_value());
      CHECK(r.tau_report->entries.size() == 5);
      CHECK(r.tau == r.tau_report->chosen_tau());
      CHECK(r.global_accuracy == r.tau_report->entries[r.tau_report->chosen].accuracy);
    } else {
      CHECK_FALSE(r.tau.has_value());
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  auto cfg = small_config();
  cfg.seeds = {1, 2};
  const auto serial = run_experiment(cfg);
  cfg.parallel = 3;
  const auto threaded = run_experiment(cfg);
  REQUIRE(serial.runs.size() == threaded.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i) {
    CHECK(serial.runs[i].run_id == threaded.runs[i].run_id);
    CHECK(serial.runs[i].final_params == threaded.runs[i].final_params);
    CHECK(serial.runs[i].global_accuracy == threaded.runs[i].global_accuracy);
  }
}

TEST_CASE("every strategy kind runs and selects valid client sets") {
  auto cfg = small_config();
  cfg.seeds = {3};
  cfg.alphas = {0.5};
  cfg.strategies.clear();
  for (auto kind : {SelectionKind::all, SelectionKind::psi_tau, SelectionKind::power_of_choice,
                    SelectionKind::haccs_lite, SelectionKind::fedcls_lite}) {
    StrategySpec s{std::string(to_string(kind)), {}, {}, {}};
    s.selection.kind = kind;
    if (kind == SelectionKind::psi_tau) s.selection.percentile = 50;
    cfg.strategies.push_back(s);
  }
  const auto res = run_experiment(cfg);
  REQUIRE(res.runs.size() == 5);
  for (const auto& r : res.runs) {
    for (const auto& round : r.rounds) {
      CHECK_FALSE(round.selected_clients.empty());
      CHECK(std::set<int>(round.selected_clients.begin(), round.selected_clients.end()).size() ==
            round.selected_clients.size());
    }
  }
  CHECK(res.runs[0].selected.size() == 6);
  CHECK(res.runs[1].percentile == "Medium");
  CHECK(res.runs[2].selected.size() == 3);
  CHECK(res.runs[3].selected.size() == 3);
  CHECK(res.runs[4].selected.size() == 3);
}

TEST_CASE("zero rounds report the zero model") {
  auto cfg = small_config();
  cfg.rounds = 0;
  cfg.seeds = {1};
  cfg.alphas = {1};
  const auto res = run_experiment(cfg);
  for (const auto& r : res.runs) {
    CHECK(r.rounds.empty());
    for (double v : r.final_params.flat()) CHECK(v == 0.0);
  }
}

TEST_CASE("configuration validation") {
  auto cfg = small_config();
  cfg.strategies.clear();
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  cfg = small_config();
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.strategies[1].selection.tau = 0.1;
  cfg.strategies[1].selection.percentile = 50;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.strategies[0].selection.tau = 0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("infeasible partitions name the cell") {
  auto cfg = small_config();
  cfg.clients = {60};
  cfg.alphas = {0.01};
  cfg.seeds = {1};
  cfg.max_redraws = 5;
  try {
    run_partitions(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("a0.01_k60_s1") != std::string::npos);
  }
}

}  // TEST_SUITE
