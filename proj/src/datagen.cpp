// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>

#include "psipfl/csv.hpp"
#include "psipfl/error.hpp"
#include "psipfl/rng.hpp"

namespace psipfl {

void Dataset::validate() const {
  if (classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (features.rows() != labels.size())
    throw ConfigError("feature rows (" + std::to_string(features.rows()) +
                      ") do not match label count (" + std::to_string(labels.size()) + ")");
  for (int y : labels)
    if (y < 0 || y >= classes) throw ConfigError("label " + std::to_string(y) + " out of range");
  for (double v : features.data())
    if (!std::isfinite(v)) throw ConfigError("dataset contains a non-finite feature value");
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw ConfigError("synthetic: classes must be >= 2");
  if (n_examples < static_cast<std::size_t>(classes))
    throw ConfigError("synthetic: n_examples must be >= classes");
  if (features < static_cast<std::size_t>(classes))
    throw ConfigError("synthetic: features must be >= classes to place equidistant means");
  if (!(class_separation > 0.0)) throw ConfigError("synthetic: class_separation must be > 0");
  if (!(noise_sd > 0.0)) throw ConfigError("synthetic: noise_sd must be > 0");
}

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size(), 0);
  if (weights.empty() || !(wsum > 0.0)) {
    if (total != 0) throw ParameterError("cannot apportion units over zero weight");
    return out;
  }
  std::vector<double> frac(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double q = static_cast<double>(total) * (weights[i] / wsum);
    const double f = std::floor(q);
    out[i] = static_cast<std::size_t>(f);
    frac[i] = q - f;
    assigned += out[i];
  }
  while (assigned > total) {  // rounding overshoot; take from the largest
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++out[order[r % order.size()]];
  return out;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Engine rng = make_engine(seed, "synthetic");
  const auto per_class =
      apportion(spec.n_examples, std::vector<double>(static_cast<std::size_t>(spec.classes), 1.0));

  Dataset ds;
  ds.classes = spec.classes;
  ds.labels.reserve(spec.n_examples);
  for (int c = 0; c < spec.classes; ++c)
    ds.labels.insert(ds.labels.end(), per_class[static_cast<std::size_t>(c)], c);
  std::shuffle(ds.labels.begin(), ds.labels.end(), rng);

  const double offset = spec.class_separation / std::sqrt(2.0);
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  ds.features = Matrix(spec.n_examples, spec.features);
  for (std::size_t i = 0; i < spec.n_examples; ++i) {
    auto row = ds.features.row(i);
    for (double& v : row) v = noise(rng);
    row[static_cast<std::size_t>(ds.labels[i])] += offset;
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  if (!std::filesystem::exists(path)) throw IngestionError("no such file: " + path.string());
  const csv::Table table = csv::read_table(path);
  const std::size_t label_idx = table.column(label_column);
  if (table.rows.empty()) throw IngestionError(path.string() + ": no data rows");

  Dataset ds;
  const std::size_t d = table.header.size() - 1;
  ds.features = Matrix(table.rows.size(), d);
  std::unordered_map<std::string, int> codes;
  ds.labels.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& rec = table.rows[r];
    std::string_view label = rec[label_idx];
    while (!label.empty() && (label.front() == ' ' || label.front() == '\t')) label.remove_prefix(1);
    while (!label.empty() && (label.back() == ' ' || label.back() == '\t')) label.remove_suffix(1);
    auto [it, inserted] = codes.try_emplace(std::string(label), static_cast<int>(codes.size()));
    ds.labels.push_back(it->second);
    std::size_t j = 0;
    for (std::size_t col = 0; col < rec.size(); ++col) {
      if (col == label_idx) continue;
      const auto v = csv::parse_double(rec[col]);
      if (!v || !std::isfinite(*v))
        throw IngestionError(path.string() + ":" + std::to_string(r + 2) + ": column '" +
                             table.header[col] + "' is not a finite number: '" + rec[col] + "'");
      ds.features(r, j++) = *v;
    }
  }
  ds.classes = static_cast<int>(codes.size());
  if (ds.classes < 2)
    throw IngestionError(path.string() + ": label column '" + label_column +
                         "' has a single distinct value");
  return ds;
}

void PartitionSpec::validate(std::size_t n_examples) const {
  if (clients < 1) throw ConfigError("partition: K must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("partition: alpha must be > 0");
  if (min_per_client < 1) throw ConfigError("partition: min_per_client must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("partition: test_fraction must lie in (0, 1)");
  if (max_redraws < 1) throw ConfigError("partition: max_redraws must be >= 1");
  if (min_per_client * static_cast<std::size_t>(clients) > n_examples)
    throw ConfigError("partition: min_per_client * K exceeds the dataset size");
}

std::size_t test_count_for(std::size_t n, double test_fraction) {
  const auto t = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  return std::max<std::size_t>(1, t);
}

namespace {

std::vector<double> draw_dirichlet(Engine& rng, int k, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  for (;;) {
    double sum = 0.0;
    for (double& x : w) sum += (x = gamma(rng));
    // Tiny alpha can underflow every component to zero.
    if (sum > 0.0) {
      for (double& x : w) x /= sum;
      return w;
    }
  }
}

ClientShard split_client(const Dataset& data, int client_id, std::vector<std::size_t> rows,
                         const PartitionSpec& spec) {
  std::sort(rows.begin(), rows.end());
  const auto n_classes = static_cast<std::size_t>(data.classes);
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t r : rows) by_class[static_cast<std::size_t>(data.labels[r])].push_back(r);

  std::vector<double> class_sizes(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) class_sizes[c] = static_cast<double>(by_class[c].size());
  const auto test_per_class =
      apportion(test_count_for(rows.size(), spec.test_fraction), class_sizes);

  Engine rng = make_engine(spec.seed, "split", {static_cast<std::uint64_t>(client_id)});
  ClientShard shard;
  shard.client_id = client_id;
  shard.classes = data.classes;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    shard.test_rows.insert(shard.test_rows.end(), members.begin(),
                           members.begin() + static_cast<std::ptrdiff_t>(test_per_class[c]));
    shard.train_rows.insert(shard.train_rows.end(),
                            members.begin() + static_cast<std::ptrdiff_t>(test_per_class[c]),
                            members.end());
  }
  std::sort(shard.train_rows.begin(), shard.train_rows.end());
  std::sort(shard.test_rows.begin(), shard.test_rows.end());

  const std::size_t d = data.dims();
  shard.train_features = Matrix(0, d);
  shard.train_features.reserve_rows(shard.train_rows.size());
  for (std::size_t r : shard.train_rows) {
    shard.train_features.append_row(data.features.row(r));
    shard.train_labels.push_back(data.labels[r]);
  }
  shard.test_features = Matrix(0, d);
  shard.test_features.reserve_rows(shard.test_rows.size());
  for (std::size_t r : shard.test_rows) {
    shard.test_features.append_row(data.features.row(r));
    shard.test_labels.push_back(data.labels[r]);
  }
  return shard;
}

}  // namespace

std::vector<ClientShard> partition_dirichlet(const Dataset& data, const PartitionSpec& spec) {
  data.validate();
  spec.validate(data.size());
  const auto k = static_cast<std::size_t>(spec.clients);
  const auto n_classes = static_cast<std::size_t>(data.classes);

  std::vector<std::vector<std::size_t>> class_rows(n_classes);
  for (std::size_t r = 0; r < data.size(); ++r)
    class_rows[static_cast<std::size_t>(data.labels[r])].push_back(r);

  Engine rng = make_engine(spec.seed, "partition");
  std::vector<std::vector<std::size_t>> alloc(n_classes);
  bool feasible = false;
  for (int attempt = 0; attempt < spec.max_redraws && !feasible; ++attempt) {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t c = 0; c < n_classes; ++c) {
      alloc[c] = apportion(class_rows[c].size(), draw_dirichlet(rng, spec.clients, spec.alpha));
      for (std::size_t i = 0; i < k; ++i) sizes[i] += alloc[c][i];
    }
    feasible = std::all_of(sizes.begin(), sizes.end(), [&](std::size_t n) {
      return n > spec.min_per_client &&
             n - test_count_for(n, spec.test_fraction) >= spec.min_per_client;
    });
  }
  if (!feasible) throw PartitionInfeasibleError(spec.alpha, spec.clients, spec.max_redraws);

  std::vector<std::vector<std::size_t>> client_rows(k);
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto rows = class_rows[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < k; ++i) {
      client_rows[i].insert(client_rows[i].end(), rows.begin() + static_cast<std::ptrdiff_t>(pos),
                            rows.begin() + static_cast<std::ptrdiff_t>(pos + alloc[c][i]));
      pos += alloc[c][i];
    }
  }

  std::vector<ClientShard> shards;
  shards.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    shards.push_back(split_client(data, static_cast<int>(i), std::move(client_rows[i]), spec));
  return shards;
}

LabelHistogram label_histogram(const ClientShard& shard) {
  LabelHistogram h{std::vector<std::uint64_t>(static_cast<std::size_t>(shard.classes), 0)};
  for (int y : shard.train_labels) ++h.counts[static_cast<std::size_t>(y)];
  return h;
}

void write_shards_csv(const std::filesystem::path& path, const std::vector<ClientShard>& shards) {
  std::vector<std::string> header{"client_id", "split", "label"};
  const std::size_t d = shards.empty() ? 0 : shards.front().train_features.cols();
  for (std::size_t j = 0; j < d; ++j) header.push_back("f" + std::to_string(j));
  csv::Writer w(path, header);
  auto emit = [&](const ClientShard& s, const char* split, const Matrix& x,
                  const std::vector<int>& y) {
    for (std::size_t r = 0; r < y.size(); ++r) {
      std::vector<std::string> f{std::to_string(s.client_id), split, std::to_string(y[r])};
      for (double v : x.row(r)) f.push_back(csv::format_double(v));
      w.row(f);
    }
  };
  for (const auto& s : shards) {
    emit(s, "train", s.train_features, s.train_labels);
    emit(s, "test", s.test_features, s.test_labels);
  }
}

}  // namespace psipfl
