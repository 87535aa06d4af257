// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "psipfl/error.hpp"
#include "psipfl/kernels.hpp"
#include "psipfl/rng.hpp"

namespace psipfl {

ModelParams::ModelParams(int classes, std::size_t features)
    : classes_(classes),
      features_(features),
      flat_(static_cast<std::size_t>(classes) * features + static_cast<std::size_t>(classes), 0.0) {}

ModelParams ModelParams::from_flat(int classes, std::size_t features, std::vector<double> flat) {
  ModelParams p(classes, features);
  if (flat.size() != p.size())
    throw ShapeError("flat parameter vector has length " + std::to_string(flat.size()) +
                     ", expected " + std::to_string(p.size()));
  p.flat_ = std::move(flat);
  return p;
}

void LocalHyper::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(prox_mu >= 0.0)) throw ConfigError("prox_mu must be >= 0");
}

ModelParams init_params(std::size_t features, int classes) {
  if (features < 1) throw ShapeError("model needs at least one feature");
  if (classes < 2) throw ShapeError("model needs at least two classes");
  return ModelParams(classes, features);
}

std::size_t argmax(std::span<const double> v) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

namespace {

void check_features(const ModelParams& params, const Matrix& features) {
  if (features.cols() != params.features() && !features.empty())
    throw ShapeError("feature width " + std::to_string(features.cols()) +
                     " does not match model width " + std::to_string(params.features()));
}

void check_batch(const ModelParams& params, const Batch& batch) {
  check_features(params, batch.features);
  if (batch.size() == 0) throw ShapeError("empty batch");
  if (batch.rows.empty() && batch.labels.size() != batch.features.rows())
    throw ShapeError("label count does not match feature rows");
}

void check_prox(const ModelParams& params, const Proximal& prox) {
  if (prox.mu < 0.0) throw ParameterError("prox mu must be >= 0");
  if (prox.mu > 0.0 && (prox.anchor == nullptr || !prox.anchor->same_shape(params)))
    throw ShapeError("proximal term needs an anchor of the model's shape");
}

// Writes logits of x into z, then turns them into probabilities in place and
// returns log-sum-exp (shifted back), so callers can form -log p_y cheaply.
double softmax_row(const ModelParams& params, std::span<const double> x, std::span<double> z) {
  const auto b = params.biases();
  for (int c = 0; c < params.classes(); ++c)
    z[static_cast<std::size_t>(c)] = kernels::dot(params.weights(c), x) + b[static_cast<std::size_t>(c)];
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - zmax));
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

}  // namespace

Matrix forward(const ModelParams& params, const Matrix& features) {
  check_features(params, features);
  Matrix out(features.rows(), static_cast<std::size_t>(params.classes()));
  for (std::size_t r = 0; r < features.rows(); ++r) softmax_row(params, features.row(r), out.row(r));
  return out;
}

double loss(const ModelParams& params, const Batch& batch, Proximal prox) {
  check_batch(params, batch);
  check_prox(params, prox);
  std::vector<double> z(static_cast<std::size_t>(params.classes()));
  double ce = 0.0;
  const auto b = params.biases();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t r = batch.row_index(i);
    const auto x = batch.features.row(r);
    const auto y = static_cast<std::size_t>(batch.labels[r]);
    const double lse = softmax_row(params, x, z);
    ce += lse - (kernels::dot(params.weights(static_cast<int>(y)), x) + b[y]);
  }
  double total = ce / static_cast<double>(batch.size());
  if (prox.mu > 0.0)
    total += 0.5 * prox.mu * kernels::squared_distance(params.flat(), prox.anchor->flat());
  return total;
}

ModelParams gradient(const ModelParams& params, const Batch& batch, Proximal prox) {
  check_batch(params, batch);
  check_prox(params, prox);
  ModelParams g(params.classes(), params.features());
  std::vector<double> p(static_cast<std::size_t>(params.classes()));
  auto gb = g.biases();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t r = batch.row_index(i);
    const auto x = batch.features.row(r);
    softmax_row(params, x, p);
    p[static_cast<std::size_t>(batch.labels[r])] -= 1.0;
    for (int c = 0; c < params.classes(); ++c) {
      kernels::axpy(p[static_cast<std::size_t>(c)], x, g.weights(c));
      gb[static_cast<std::size_t>(c)] += p[static_cast<std::size_t>(c)];
    }
  }
  kernels::scale(1.0 / static_cast<double>(batch.size()), g.flat());
  if (prox.mu > 0.0) {
    std::vector<double> diff(params.flat().begin(), params.flat().end());
    kernels::axpy(-1.0, prox.anchor->flat(), diff);
    kernels::axpy(prox.mu, diff, g.flat());
  }
  return g;
}

ModelParams sgd_train(const ModelParams& start, const Matrix& features, std::span<const int> labels,
                      const LocalHyper& hyper, std::uint64_t seed) {
  hyper.validate();
  if (labels.empty()) throw ShapeError("cannot train on an empty set");
  if (labels.size() != features.rows()) throw ShapeError("label count does not match feature rows");
  check_features(start, features);

  ModelParams w = start;
  const Proximal prox{hyper.prox_mu > 0.0 ? &start : nullptr, hyper.prox_mu};
  Engine rng(seed);
  std::vector<std::size_t> order(labels.size());
  for (int e = 0; e < hyper.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += hyper.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + hyper.batch_size);
      const Batch batch{features, labels, std::span<const std::size_t>(order).subspan(lo, hi - lo)};
      const ModelParams g = gradient(w, batch, prox);
      kernels::axpy(-hyper.learning_rate, g.flat(), w.flat());
    }
  }
  return w;
}

ModelParams local_train(const ModelParams& start, const ClientShard& shard, const LocalHyper& hyper,
                        std::uint64_t seed) {
  return sgd_train(start, shard.train_features, shard.train_labels, hyper, seed);
}

LocalEval evaluate(const ModelParams& params, const Matrix& features, std::span<const int> labels) {
  if (labels.empty()) throw ShapeError("cannot evaluate on an empty set");
  if (labels.size() != features.rows()) throw ShapeError("label count does not match feature rows");
  check_features(params, features);
  std::vector<double> z(static_cast<std::size_t>(params.classes()));
  LocalEval ev;
  ev.n = labels.size();
  double ce = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    softmax_row(params, features.row(r), z);
    const auto y = static_cast<std::size_t>(labels[r]);
    if (argmax(z) == y) ++ev.correct;
    ce -= std::log(std::max(z[y], std::numeric_limits<double>::min()));
  }
  ev.accuracy = static_cast<double>(ev.correct) / static_cast<double>(ev.n);
  ev.mean_loss = ce / static_cast<double>(ev.n);
  return ev;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw IngestionError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  put_le<std::int32_t>(out, params.classes());
  put_le<std::int32_t>(out, static_cast<std::int32_t>(params.features()));
  for (double v : params.flat()) put_le<double>(out, v);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  const auto c = get_le<std::int32_t>(in);
  const auto d = get_le<std::int32_t>(in);
  if (c < 2 || d < 1) throw IngestionError("checkpoint header has invalid shape");
  ModelParams p(c, static_cast<std::size_t>(d));
  for (double& v : p.flat()) v = get_le<double>(in);
  if (in.peek() != std::char_traits<char>::eof()) throw IngestionError("trailing bytes in checkpoint");
  return p;
}

}  // namespace psipfl
