// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "psipfl/metrics.hpp"

// Client selection. Every strategy here sees label histograms (plus, for
// Power-of-Choice, scalar losses) and nothing else about a client's data.

namespace psipfl {

/// PSI of each client's smoothed label pmf against the smoothed pmf of the
/// summed histograms. Throws ParameterError on an empty federation.
std::map<int, double> compute_client_psis(const std::map<int, LabelHistogram>& histograms,
                                          double epsilon = kDefaultEpsilon);

struct TauCandidate {
  std::string label;
  double percentile = 0.0;
  double tau = 0.0;
};

/// Low / Medium-low / Medium / Medium-high / High for 10/25/50/75/90,
/// "p<value>" otherwise.
std::string percentile_label(double percentile);

inline const std::vector<double> kDefaultPercentiles{10, 25, 50, 75, 90};

/// Nearest-rank percentiles: the ceil(p/100 * K)-th smallest PSI (at least
/// the first). Output follows the order of `percentiles`.
std::vector<TauCandidate> candidate_taus(const std::map<int, double>& psis,
                                         const std::vector<double>& percentiles = kDefaultPercentiles);

/// Clients with PSI <= tau in ascending id; when none qualifies, the single
/// client with the smallest PSI (lowest id on ties).
std::vector<int> select_by_tau(const std::map<int, double>& psis, double tau);

struct TauEntry {
  TauCandidate candidate;
  std::vector<int> selected;
  double accuracy = 0.0;
};

struct TauReport {
  std::vector<TauEntry> entries;  // ascending percentile
  std::size_t chosen = 0;

  const std::string& chosen_percentile() const { return entries.at(chosen).candidate.label; }
  double chosen_tau() const { return entries.at(chosen).candidate.tau; }
};

/// Trains once per candidate through `train_and_score` (which returns the
/// global test accuracy for a selected client set) and keeps the most
/// accurate; ties go to the lowest percentile.
TauReport tune_tau(const std::map<int, double>& psis, std::vector<TauCandidate> candidates,
                   const std::function<double(const std::vector<int>& selected)>& train_and_score);

/// Samples `d` candidates uniformly without replacement and keeps the `m`
/// with the highest loss (lower id on ties). Result in ascending id.
std::vector<int> select_power_of_choice(const std::map<int, double>& client_losses, int d, int m,
                                        std::uint64_t seed);

/// k-medoids over client pmfs under Hellinger distance (k-means++ style
/// seeding, best of several restarts), then the largest client of each
/// cluster. Result in ascending id.
std::vector<int> select_haccs_lite(const std::map<int, LabelHistogram>& histograms, int n_clusters,
                                   std::uint64_t seed, double epsilon = kDefaultEpsilon);

/// Greedy max-min Hamming selection over class-presence bit vectors, seeded
/// with the client holding the most classes. Result in ascending id.
std::vector<int> select_fedcls_lite(const std::map<int, LabelHistogram>& histograms, int m);

}  // namespace psipfl
