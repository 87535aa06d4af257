// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/eval.hpp"

#include <algorithm>
#include <cmath>

#include "psipfl/error.hpp"

namespace psipfl {

double global_accuracy(const std::map<int, LocalEval>& evals) {
  if (evals.empty()) throw ParameterError("global accuracy of an empty federation");
  double correct = 0.0;
  double n = 0.0;
  for (const auto& [id, ev] : evals) {
    if (ev.n == 0) throw ParameterError("client " + std::to_string(id) + " has an empty test set");
    correct += static_cast<double>(ev.n) * ev.accuracy;
    n += static_cast<double>(ev.n);
  }
  return correct / n;
}

std::optional<double> client_parity(const std::map<int, double>& accuracies) {
  if (accuracies.size() < 2) throw ParameterError("client parity needs at least two clients");
  const auto [lo, hi] = std::minmax_element(
      accuracies.begin(), accuracies.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  if (lo->second < 1e-9) return std::nullopt;
  return (hi->second - lo->second) / lo->second;
}

TargetDistance distance_to_target(const std::map<int, double>& accuracies, double target) {
  if (accuracies.empty()) throw ParameterError("distance to target of an empty federation");
  TargetDistance d;
  for (const auto& [id, a] : accuracies) {
    const double diff = a - target;
    d.ad += std::abs(diff);
    d.sdad += diff * diff;
  }
  const auto k = static_cast<double>(accuracies.size());
  d.ad /= k;
  d.sdad /= k;
  return d;
}

FairnessReport fairness_report(const std::map<int, LocalEval>& evals, double target) {
  FairnessReport r;
  for (const auto& [id, ev] : evals) r.per_client_accuracy[id] = ev.accuracy;
  if (r.per_client_accuracy.size() >= 2) r.cp = client_parity(r.per_client_accuracy);
  const auto d = distance_to_target(r.per_client_accuracy, target);
  r.ad = d.ad;
  r.sdad = d.sdad;
  r.target_accuracy = target;
  return r;
}

std::vector<EcdfPoint> ecdf(std::vector<double> values) {
  if (values.empty()) throw ParameterError("ecdf of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  std::vector<EcdfPoint> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

std::pair<Dataset, Dataset> pool_shards(const std::vector<ClientShard>& shards) {
  if (shards.empty()) throw ParameterError("no shards to pool");
  const std::size_t d = shards.front().train_features.cols();
  Dataset train, test;
  train.classes = test.classes = shards.front().classes;
  train.features = Matrix(0, d);
  test.features = Matrix(0, d);
  for (const auto& s : shards) {
    for (std::size_t r = 0; r < s.n_train(); ++r) train.features.append_row(s.train_features.row(r));
    train.labels.insert(train.labels.end(), s.train_labels.begin(), s.train_labels.end());
    for (std::size_t r = 0; r < s.n_test(); ++r) test.features.append_row(s.test_features.row(r));
    test.labels.insert(test.labels.end(), s.test_labels.begin(), s.test_labels.end());
  }
  return {std::move(train), std::move(test)};
}

double centralized_target(const Dataset& train, const Dataset& test, const LocalHyper& hyper,
                          int epoch_budget, std::uint64_t seed) {
  ModelParams w = init_params(train.dims(), train.classes);
  if (epoch_budget > 0) {
    LocalHyper h = hyper;
    h.epochs = epoch_budget;
    h.prox_mu = 0.0;
    w = sgd_train(w, train.features, train.labels, h, seed);
  }
  return evaluate(w, test.features, test.labels).accuracy;
}

}  // namespace psipfl
