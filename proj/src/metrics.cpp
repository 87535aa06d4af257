// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "psipfl/error.hpp"

namespace psipfl {
namespace {

void require_same_length(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw ShapeError("pmf length mismatch: " + std::to_string(p.size()) + " vs " +
                     std::to_string(q.size()));
}

}  // namespace

std::uint64_t LabelHistogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Pmf Pmf::smoothed(std::span<const double> weights, double epsilon) {
  const std::size_t c = weights.size();
  if (c < 2) throw ShapeError("a pmf needs at least 2 classes");
  if (!(epsilon > 0.0) || !(epsilon * static_cast<double>(c) < 1.0))
    throw ParameterError("smoothing epsilon must lie in (0, 1/C)");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("pmf weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw EmptyClientError("cannot build a pmf from an all-zero histogram");

  std::vector<double> p(c);
  for (std::size_t i = 0; i < c; ++i) p[i] = weights[i] / total;

  // Entries below the floor are pinned to it; the remaining mass is shared
  // among the free entries in proportion to their raw weight. Pinning can
  // push another entry below the floor, hence the loop (at most C passes).
  std::vector<bool> pinned(c, false);
  for (;;) {
    std::size_t n_pinned = 0;
    double free_raw = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      if (pinned[i]) ++n_pinned;
      else free_raw += weights[i];
    }
    const double free_mass = 1.0 - static_cast<double>(n_pinned) * epsilon;
    bool changed = false;
    for (std::size_t i = 0; i < c; ++i) {
      if (pinned[i]) {
        p[i] = epsilon;
        continue;
      }
      p[i] = weights[i] / free_raw * free_mass;
      if (p[i] < epsilon) {
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return Pmf(std::move(p), epsilon);
}

Pmf pmf_from_histogram(const LabelHistogram& hist, double epsilon) {
  std::vector<double> w(hist.counts.begin(), hist.counts.end());
  return Pmf::smoothed(w, epsilon);
}

LabelHistogram sum_histograms(std::span<const LabelHistogram> histograms) {
  if (histograms.empty()) throw ShapeError("no histograms to aggregate");
  LabelHistogram sum{std::vector<std::uint64_t>(histograms.front().classes(), 0)};
  for (const auto& h : histograms) {
    if (h.classes() != sum.classes()) throw ShapeError("histogram length mismatch");
    for (std::size_t c = 0; c < h.classes(); ++c) sum.counts[c] += h.counts[c];
  }
  return sum;
}

Pmf aggregate_global_pmf(std::span<const LabelHistogram> histograms, double epsilon) {
  return pmf_from_histogram(sum_histograms(histograms), epsilon);
}

double psi(std::span<const double> global, std::span<const double> client) {
  require_same_length(global, client);
  double s = 0.0;
  for (std::size_t c = 0; c < global.size(); ++c) {
    const double p = global[c];
    const double q = client[c];
    if (!(p > 0.0) || !(q > 0.0)) throw ParameterError("psi needs strictly positive pmfs");
    s += (p - q) * std::log(p / q);
  }
  // Each term is >= 0 analytically; only rounding could go below.
  return std::max(s, 0.0);
}

double hellinger(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double d = std::sqrt(p[c]) - std::sqrt(q[c]);
    s += d * d;
  }
  return std::min(1.0, std::sqrt(s) / std::sqrt(2.0));
}

double jsd(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double m = 0.5 * (p[c] + q[c]);
    if (p[c] > 0.0) s += 0.5 * p[c] * std::log2(p[c] / m);
    if (q[c] > 0.0) s += 0.5 * q[c] * std::log2(q[c] / m);
  }
  return std::min(1.0, std::sqrt(std::max(s, 0.0)));
}

double emd_1d(std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q);
  double cp = 0.0, cq = 0.0, s = 0.0;
  // The final CDF difference is 1 - 1 and is skipped.
  for (std::size_t c = 0; c + 1 < p.size(); ++c) {
    cp += p[c];
    cq += q[c];
    s += std::abs(cp - cq);
  }
  return s;
}

double wpsi(const std::map<int, double>& per_client, const std::map<int, std::uint64_t>& sizes) {
  if (per_client.size() != sizes.size()) throw ShapeError("psi and size maps differ in length");
  if (per_client.empty()) throw ShapeError("wpsi of an empty federation");
  double num = 0.0;
  double den = 0.0;
  auto it = sizes.begin();
  for (const auto& [id, value] : per_client) {
    if (it->first != id) throw ShapeError("client " + std::to_string(id) + " has no size entry");
    if (it->second == 0) throw ShapeError("client " + std::to_string(id) + " has zero examples");
    num += static_cast<double>(it->second) * value;
    den += static_cast<double>(it->second);
    ++it;
  }
  return num / den;
}

PsiReport FederationReport::psi_report() const {
  PsiReport r;
  for (const auto& c : clients) {
    r.per_client[c.client_id] = c.psi;
    r.sizes[c.client_id] = c.n;
  }
  r.wpsi = wpsi;
  return r;
}

FederationReport federation_report(const std::map<int, LabelHistogram>& histograms,
                                   double epsilon) {
  if (histograms.empty()) throw ShapeError("federation has no clients");
  std::vector<LabelHistogram> all;
  all.reserve(histograms.size());
  for (const auto& [id, h] : histograms) all.push_back(h);
  const Pmf global = aggregate_global_pmf(all, epsilon);

  FederationReport rep;
  rep.global_pmf.assign(global.probs().begin(), global.probs().end());
  double total = 0.0;
  for (const auto& [id, h] : histograms) {
    const Pmf local = pmf_from_histogram(h, epsilon);
    ClientDivergence d;
    d.client_id = id;
    d.n = h.total();
    d.psi = psi(global, local);
    d.hellinger = hellinger(global, local);
    d.jsd = jsd(global, local);
    d.emd = emd_1d(global, local);
    rep.clients.push_back(d);
    const double n = static_cast<double>(d.n);
    rep.wpsi += n * d.psi;
    rep.whellinger += n * d.hellinger;
    rep.wjsd += n * d.jsd;
    rep.wemd += n * d.emd;
    total += n;
  }
  rep.wpsi /= total;
  rep.whellinger /= total;
  rep.wjsd /= total;
  rep.wemd /= total;
  return rep;
}

}  // namespace psipfl
