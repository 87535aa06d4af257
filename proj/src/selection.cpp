// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "psipfl/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "psipfl/csv.hpp"
#include "psipfl/error.hpp"
#include "psipfl/rng.hpp"

namespace psipfl {

std::map<int, double> compute_client_psis(const std::map<int, LabelHistogram>& histograms,
                                          double epsilon) {
  if (histograms.empty()) throw ParameterError("cannot compute PSI for an empty federation");
  std::vector<LabelHistogram> all;
  all.reserve(histograms.size());
  for (const auto& [id, h] : histograms) all.push_back(h);
  const Pmf global = aggregate_global_pmf(all, epsilon);
  std::map<int, double> out;
  for (const auto& [id, h] : histograms) out[id] = psi(global, pmf_from_histogram(h, epsilon));
  return out;
}

std::string percentile_label(double p) {
  if (p == 10) return "Low";
  if (p == 25) return "Medium-low";
  if (p == 50) return "Medium";
  if (p == 75) return "Medium-high";
  if (p == 90) return "High";
  return "p" + csv::format_double(p);
}

std::vector<TauCandidate> candidate_taus(const std::map<int, double>& psis,
                                         const std::vector<double>& percentiles) {
  if (psis.empty()) throw ParameterError("no PSI values to take percentiles of");
  std::vector<double> sorted;
  sorted.reserve(psis.size());
  for (const auto& [id, v] : psis) sorted.push_back(v);
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<double>(sorted.size());

  std::vector<TauCandidate> out;
  for (double p : percentiles) {
    if (!(p > 0.0 && p <= 100.0)) throw ParameterError("percentile must lie in (0, 100]");
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * k));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    out.push_back({percentile_label(p), p, sorted[rank - 1]});
  }
  return out;
}

std::vector<int> select_by_tau(const std::map<int, double>& psis, double tau) {
  if (psis.empty()) throw ParameterError("no clients to select from");
  std::vector<int> out;
  for (const auto& [id, v] : psis)
    if (v <= tau) out.push_back(id);
  if (out.empty()) {
    const auto best = std::min_element(psis.begin(), psis.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;
    });
    out.push_back(best->first);
  }
  return out;
}

TauReport tune_tau(const std::map<int, double>& psis, std::vector<TauCandidate> candidates,
                   const std::function<double(const std::vector<int>&)>& train_and_score) {
  if (candidates.empty()) throw ParameterError("tau tuning needs at least one candidate");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const TauCandidate& a, const TauCandidate& b) { return a.percentile < b.percentile; });
  TauReport report;
  for (auto& c : candidates) {
    TauEntry e;
    e.selected = select_by_tau(psis, c.tau);
    e.accuracy = train_and_score(e.selected);
    e.candidate = std::move(c);
    report.entries.push_back(std::move(e));
  }
  for (std::size_t i = 1; i < report.entries.size(); ++i)
    if (report.entries[i].accuracy > report.entries[report.chosen].accuracy) report.chosen = i;
  return report;
}

std::vector<int> select_power_of_choice(const std::map<int, double>& client_losses, int d, int m,
                                        std::uint64_t seed) {
  const int k = static_cast<int>(client_losses.size());
  if (m < 1 || m > d || d > k)
    throw ParameterError("power-of-choice needs 1 <= m <= d <= K (m=" + std::to_string(m) +
                         ", d=" + std::to_string(d) + ", K=" + std::to_string(k) + ")");
  std::vector<std::pair<int, double>> pool(client_losses.begin(), client_losses.end());
  Engine rng(seed);
  // Partial Fisher-Yates: the first d entries become a uniform sample.
  for (int i = 0; i < d; ++i) {
    std::uniform_int_distribution<int> pick(i, k - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(d));
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<int> out;
  for (int i = 0; i < m; ++i) out.push_back(pool[static_cast<std::size_t>(i)].first);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct Clustering {
  std::vector<std::size_t> medoids;
  std::vector<std::size_t> assignment;
  double cost = std::numeric_limits<double>::infinity();
};

// A medoid always belongs to its own cluster, even when another medoid is
// equally close, so no cluster is ever empty.
void assign(const std::vector<std::vector<double>>& dist, Clustering& cl) {
  const std::size_t n = dist.size();
  cl.assignment.assign(n, 0);
  cl.cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    bool is_medoid = false;
    for (std::size_t j = 0; j < cl.medoids.size(); ++j) {
      if (cl.medoids[j] == i) {
        best = j;
        is_medoid = true;
        break;
      }
      if (dist[i][cl.medoids[j]] < dist[i][cl.medoids[best]]) best = j;
    }
    cl.assignment[i] = best;
    if (!is_medoid) cl.cost += dist[i][cl.medoids[best]];
  }
}

Clustering k_medoids(const std::vector<std::vector<double>>& dist, std::size_t k, Engine& rng) {
  const std::size_t n = dist.size();
  Clustering cl;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  cl.medoids.push_back(first(rng));
  std::vector<bool> chosen(n, false);
  chosen[cl.medoids[0]] = true;
  while (cl.medoids.size() < k) {
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t m : cl.medoids) dmin = std::min(dmin, dist[i][m]);
      total += (w[i] = dmin * dmin);
    }
    std::size_t next = 0;
    if (total > 0.0) {
      next = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    } else {
      // All remaining points coincide with a medoid; take the first unused.
      while (chosen[next]) ++next;
    }
    chosen[next] = true;
    cl.medoids.push_back(next);
  }

  assign(dist, cl);
  for (int iter = 0; iter < 100; ++iter) {
    bool moved = false;
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t best = cl.medoids[j];
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t cand = 0; cand < n; ++cand) {
        if (cl.assignment[cand] != j) continue;
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (cl.assignment[i] == j) c += dist[i][cand];
        if (c < best_cost) {
          best_cost = c;
          best = cand;
        }
      }
      if (best != cl.medoids[j]) {
        cl.medoids[j] = best;
        moved = true;
      }
    }
    if (!moved) break;
    assign(dist, cl);
  }
  return cl;
}

}  // namespace

std::vector<int> select_haccs_lite(const std::map<int, LabelHistogram>& histograms, int n_clusters,
                                   std::uint64_t seed, double epsilon) {
  const int k = static_cast<int>(histograms.size());
  if (n_clusters < 1 || n_clusters > k)
    throw ParameterError("haccs: need 1 <= n_clusters <= K (n_clusters=" + std::to_string(n_clusters) +
                         ", K=" + std::to_string(k) + ")");
  std::vector<int> ids;
  std::vector<std::uint64_t> sizes;
  std::vector<Pmf> pmfs;
  for (const auto& [id, h] : histograms) {
    ids.push_back(id);
    sizes.push_back(h.total());
    pmfs.push_back(pmf_from_histogram(h, epsilon));
  }
  const auto n = ids.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = hellinger(pmfs[i], pmfs[j]);

  constexpr int kRestarts = 10;
  Engine rng(seed);
  Clustering best;
  for (int r = 0; r < kRestarts; ++r) {
    Clustering cl = k_medoids(dist, static_cast<std::size_t>(n_clusters), rng);
    if (cl.cost < best.cost) best = std::move(cl);
  }

  std::vector<int> out;
  for (std::size_t j = 0; j < static_cast<std::size_t>(n_clusters); ++j) {
    std::size_t rep = n;
    for (std::size_t i = 0; i < n; ++i)
      if (best.assignment[i] == j && (rep == n || sizes[i] > sizes[rep])) rep = i;
    if (rep != n) out.push_back(ids[rep]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> select_fedcls_lite(const std::map<int, LabelHistogram>& histograms, int m) {
  const int k = static_cast<int>(histograms.size());
  if (m < 1 || m > k)
    throw ParameterError("fedcls: need 1 <= m <= K (m=" + std::to_string(m) + ", K=" + std::to_string(k) + ")");
  std::vector<int> ids;
  std::vector<std::vector<bool>> presence;
  for (const auto& [id, h] : histograms) {
    ids.push_back(id);
    std::vector<bool> bits;
    for (auto c : h.counts) bits.push_back(c > 0);
    presence.push_back(std::move(bits));
  }
  auto hamming = [&](std::size_t a, std::size_t b) {
    std::size_t d = 0;
    for (std::size_t c = 0; c < presence[a].size(); ++c) d += presence[a][c] != presence[b][c];
    return d;
  };

  const std::size_t n = ids.size();
  std::vector<bool> picked(n, false);
  std::size_t seed_idx = 0;
  auto present = [&](std::size_t i) { return std::count(presence[i].begin(), presence[i].end(), true); };
  for (std::size_t i = 1; i < n; ++i)
    if (present(i) > present(seed_idx)) seed_idx = i;
  picked[seed_idx] = true;
  std::vector<std::size_t> order{seed_idx};

  while (order.size() < static_cast<std::size_t>(m)) {
    std::size_t best = n;
    std::size_t best_score = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      std::size_t score = std::numeric_limits<std::size_t>::max();
      for (std::size_t j : order) score = std::min(score, hamming(i, j));
      if (best == n || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    picked[best] = true;
    order.push_back(best);
  }
  std::vector<int> out;
  for (std::size_t i : order) out.push_back(ids[i]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace psipfl
