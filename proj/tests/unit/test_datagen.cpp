// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "psipfl/datagen.hpp"
#include "psipfl/error.hpp"
#include "psipfl/rng.hpp"

using namespace psipfl;

namespace {

Dataset blobs(std::size_t n, int classes, std::uint64_t seed = 1) {
  SyntheticSpec s;
  s.n_examples = n;
  s.classes = classes;
  s.features = static_cast<std::size_t>(std::max(2, classes));
  return generate_synthetic(s, seed);
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("psipfl_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("apportion uses largest remainders and conserves the total") {
  CHECK(apportion(10, {1, 1, 1}) == std::vector<std::size_t>{4, 3, 3});
  CHECK(apportion(7, {0.5, 0.25, 0.25}) == std::vector<std::size_t>{3, 2, 2});
  CHECK(apportion(5, {0.5, 0.3, 0.2}) == std::vector<std::size_t>{3, 1, 1});
  CHECK(apportion(5, {0, 1}) == std::vector<std::size_t>{0, 5});
  CHECK(apportion(0, {}).empty());
  CHECK_THROWS_AS(apportion(3, {0, 0}), ParameterError);

  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> w(1 + static_cast<std::size_t>(i % 17));
    for (auto& x : w) x = u(g);
    const std::size_t total = static_cast<std::size_t>(i * 7);
    const auto out = apportion(total, w);
    CHECK(std::accumulate(out.begin(), out.end(), std::size_t{0}) == total);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t k = 0; k < w.size(); ++k)
      CHECK(std::abs(static_cast<double>(out[k]) - static_cast<double>(total) * w[k] / wsum) < 1.0 + 1e-9);
  }
}

TEST_CASE("synthetic data is balanced, deterministic, and validated") {
  SyntheticSpec s;
  s.n_examples = 100;
  const auto a = generate_synthetic(s, 7);
  CHECK(a.size() == 100);
  CHECK(a.classes == 2);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 0) == 50);
  CHECK(a == generate_synthetic(s, 7));
  CHECK_FALSE(a == generate_synthetic(s, 8));

  s.n_examples = 1;
  CHECK_THROWS_AS(generate_synthetic(s, 7), ConfigError);
  s.n_examples = 100;
  s.classes = 3;
  s.features = 2;
  CHECK_THROWS_AS(generate_synthetic(s, 7), ConfigError);
}

TEST_CASE("csv loading encodes labels by first appearance") {
  const auto p = temp_file("ok.csv", "x,label,y\n1.5,hi,2\n-3,lo,4e1\n0, hi ,+5\n");
  const auto d = load_csv(p, "label");
  CHECK(d.classes == 2);
  CHECK(d.labels == std::vector<int>{0, 1, 0});
  CHECK(d.dims() == 2);
  CHECK(d.features(1, 1) == 40.0);
  CHECK(d.features(2, 1) == 5.0);

  CHECK_THROWS_AS(load_csv(temp_file("one.csv", "x,label\n1,a\n2,a\n"), "label"), IngestionError);
  CHECK_THROWS_AS(load_csv(temp_file("nan.csv", "x,label\n1,a\nnan,b\n"), "label"), IngestionError);
  CHECK_THROWS_AS(load_csv(temp_file("text.csv", "x,label\n1,a\nfoo,b\n"), "label"), IngestionError);
  CHECK_THROWS_AS(load_csv(temp_file("ok2.csv", "x,label\n1,a\n2,b\n"), "target"), IngestionError);
  CHECK_THROWS_AS(load_csv("/nonexistent/data.csv", "label"), IngestionError);
}

TEST_CASE("test split size rule") {
  CHECK(test_count_for(10, 0.2) == 2);
  CHECK(test_count_for(2, 0.2) == 1);
  CHECK(test_count_for(13, 0.2) == 3);
}

TEST_CASE("a single client receives the whole dataset") {
  const auto data = blobs(200, 2);
  PartitionSpec ps;
  ps.clients = 1;
  ps.alpha = 0.05;
  const auto shards = partition_dirichlet(data, ps);
  REQUIRE(shards.size() == 1);
  CHECK(shards[0].n_train() + shards[0].n_test() == 200);
  CHECK(shards[0].n_test() == 40);
}

TEST_CASE("partitions conserve the dataset, respect the minimum, and are deterministic") {
  const auto data = blobs(3000, 4, 2);
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> la(std::log(0.2), std::log(100.0));
  std::uniform_int_distribution<int> kd(1, 15);
  for (int trial = 0; trial < 20; ++trial) {
    PartitionSpec ps;
    ps.alpha = std::exp(la(g));
    ps.clients = kd(g);
    ps.seed = g();
    CAPTURE(ps.alpha);
    CAPTURE(ps.clients);
    const auto shards = partition_dirichlet(data, ps);
    REQUIRE(shards.size() == static_cast<std::size_t>(ps.clients));

    std::vector<int> hits(data.size(), 0);
    std::vector<std::size_t> per_class(4, 0);
    for (const auto& s : shards) {
      CHECK(s.n_train() >= ps.min_per_client);
      CHECK(s.n_test() == test_count_for(s.n_train() + s.n_test(), ps.test_fraction));
      for (std::size_t i = 0; i < s.n_train(); ++i) {
        const auto r = s.train_rows[i];
        ++hits[r];
        CHECK(s.train_labels[i] == data.labels[r]);
        CHECK(std::equal(s.train_features.row(i).begin(), s.train_features.row(i).end(),
                         data.features.row(r).begin()));
        ++per_class[static_cast<std::size_t>(s.train_labels[i])];
      }
      for (std::size_t i = 0; i < s.n_test(); ++i) {
        ++hits[s.test_rows[i]];
        CHECK(s.test_labels[i] == data.labels[s.test_rows[i]]);
        ++per_class[static_cast<std::size_t>(s.test_labels[i])];
      }

      // Stratified split: per-class test counts follow the class mix.
      const double n = static_cast<double>(s.n_train() + s.n_test());
      for (int c = 0; c < 4; ++c) {
        const auto te = static_cast<double>(std::count(s.test_labels.begin(), s.test_labels.end(), c));
        const auto tr = static_cast<double>(std::count(s.train_labels.begin(), s.train_labels.end(), c));
        CHECK(std::abs(te - static_cast<double>(s.n_test()) * (te + tr) / n) < 1.0);
      }
    }
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    for (int c = 0; c < 4; ++c)
      CHECK(per_class[static_cast<std::size_t>(c)] ==
            static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), c)));

    CHECK(shards == partition_dirichlet(data, ps));
  }
}

TEST_CASE("label histograms count the training split") {
  ClientShard s;
  s.classes = 2;
  s.train_labels = {0, 0, 1};
  CHECK(label_histogram(s).counts == std::vector<std::uint64_t>{2, 1});
  s.classes = 3;
  s.train_labels = {0, 0, 0, 0};
  CHECK(label_histogram(s).counts == std::vector<std::uint64_t>{4, 0, 0});

  const auto data = blobs(1000, 3);
  PartitionSpec ps;
  ps.clients = 5;
  for (const auto& sh : partition_dirichlet(data, ps)) CHECK(label_histogram(sh).total() == sh.n_train());
}

TEST_CASE("near-iid alpha keeps every client close to balanced") {
  const auto data = blobs(4000, 2);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    PartitionSpec ps;
    ps.clients = 10;
    ps.alpha = 100.0;
    ps.seed = seed;
    for (const auto& s : partition_dirichlet(data, ps)) {
      const auto h = label_histogram(s);
      CHECK(std::abs(static_cast<double>(h.counts[0]) / static_cast<double>(h.total()) - 0.5) <= 0.1);
    }
  }
}

TEST_CASE("client class shares follow the Dirichlet moments") {
  // For one class split over K clients by Dirichlet(alpha), each share has
  // mean 1/K and variance (1/K)(1 - 1/K)/(K alpha + 1). Compare against a
  // direct simulation of the same draws.
  const int k = 5;
  const double alpha = 0.5;
  const auto data = blobs(5000, 2);
  std::vector<double> shares;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    PartitionSpec ps;
    ps.clients = k;
    ps.alpha = alpha;
    ps.seed = seed;
    ps.min_per_client = 1;
    for (const auto& s : partition_dirichlet(data, ps)) {
      const auto h = label_histogram(s);
      const auto test0 = std::count(s.test_labels.begin(), s.test_labels.end(), 0);
      shares.push_back((static_cast<double>(h.counts[0]) + static_cast<double>(test0)) / 2500.0);
    }
  }
  auto moments = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, var / static_cast<double>(v.size() - 1)};
  };

  std::mt19937_64 g(7);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> sim;
  for (int i = 0; i < 20000; ++i) {
    std::vector<double> w(k);
    double sum = 0.0;
    for (auto& x : w) sum += (x = gamma(g));
    for (double x : w) sim.push_back(x / sum);
  }
  const auto [m, v] = moments(shares);
  const auto [ms, vs] = moments(sim);
  const double v_theory = (1.0 / k) * (1.0 - 1.0 / k) / (k * alpha + 1.0);
  CHECK(m == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(ms == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(vs == doctest::Approx(v_theory).epsilon(0.05));
  CHECK(v == doctest::Approx(vs).epsilon(0.2));
}

TEST_CASE("infeasible partitions fail after the redraw budget") {
  const auto data = blobs(200, 2);
  PartitionSpec ps;
  ps.clients = 15;
  ps.alpha = 0.01;
  ps.min_per_client = 10;
  ps.max_redraws = 20;
  CHECK_THROWS_AS(partition_dirichlet(data, ps), PartitionInfeasibleError);

  ps.clients = 30;
  CHECK_THROWS_AS(partition_dirichlet(data, ps), ConfigError);
  ps.clients = 0;
  CHECK_THROWS_AS(partition_dirichlet(data, ps), ConfigError);
  ps.clients = 2;
  ps.alpha = 0.0;
  CHECK_THROWS_AS(partition_dirichlet(data, ps), ConfigError);
}

TEST_CASE("shard export") {
  const auto data = blobs(100, 2);
  PartitionSpec ps;
  ps.clients = 3;
  const auto shards = partition_dirichlet(data, ps);
  const auto path = std::filesystem::temp_directory_path() / "psipfl_shards.csv";
  write_shards_csv(path, shards);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "client_id,split,label,f0,f1");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 100);
}

}  // TEST_SUITE
