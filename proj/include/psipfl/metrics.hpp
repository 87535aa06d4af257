// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace psipfl {

inline constexpr double kDefaultEpsilon = 1e-6;

/// Per-class example counts; the only statistic a client reveals to the
/// server.
struct LabelHistogram {
  std::vector<std::uint64_t> counts;

  std::size_t classes() const noexcept { return counts.size(); }
  std::uint64_t total() const noexcept;
  bool operator==(const LabelHistogram&) const = default;
};

/// Probability mass function over class indices with a strictly positive
/// floor, so every divergence below is finite.
class Pmf {
 public:
  /// Normalizes non-negative weights, raises every entry to at least
  /// `epsilon` and rescales the unclamped entries so the total stays 1.
  /// Clamped entries are exactly `epsilon` afterwards.
  /// Throws EmptyClientError on a zero total, ParameterError when epsilon is
  /// outside (0, 1/C).
  static Pmf smoothed(std::span<const double> weights, double epsilon = kDefaultEpsilon);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t classes() const noexcept { return probs_.size(); }
  double epsilon() const noexcept { return epsilon_; }
  double operator[](std::size_t c) const noexcept { return probs_[c]; }

 private:
  Pmf(std::vector<double> probs, double epsilon) : probs_(std::move(probs)), epsilon_(epsilon) {}

  std::vector<double> probs_;
  double epsilon_ = 0.0;
};

Pmf pmf_from_histogram(const LabelHistogram& hist, double epsilon = kDefaultEpsilon);

/// Element-wise sum of the client histograms, then smoothed.
LabelHistogram sum_histograms(std::span<const LabelHistogram> histograms);
Pmf aggregate_global_pmf(std::span<const LabelHistogram> histograms,
                         double epsilon = kDefaultEpsilon);

// Divergences. The span overloads accept any pmf of equal length (zeros are
// allowed except for psi, which needs strictly positive entries); mismatched
// lengths throw ShapeError.

/// Population Stability Index: sum_c (P_c - Q_c) * ln(P_c / Q_c).
double psi(std::span<const double> global, std::span<const double> client);
inline double psi(const Pmf& global, const Pmf& client) { return psi(global.probs(), client.probs()); }

/// (1/sqrt 2) * || sqrt(p) - sqrt(q) ||_2, in [0, 1].
double hellinger(std::span<const double> p, std::span<const double> q);
inline double hellinger(const Pmf& p, const Pmf& q) { return hellinger(p.probs(), q.probs()); }

/// Jensen-Shannon distance: square root of the base-2 JS divergence.
double jsd(std::span<const double> p, std::span<const double> q);
inline double jsd(const Pmf& p, const Pmf& q) { return jsd(p.probs(), q.probs()); }

/// 1-D earth mover's distance with ordinal classes and unit spacing.
double emd_1d(std::span<const double> p, std::span<const double> q);
inline double emd_1d(const Pmf& p, const Pmf& q) { return emd_1d(p.probs(), q.probs()); }

/// n_i-weighted mean of per-client values. Key sets must match and every
/// size must be positive.
double wpsi(const std::map<int, double>& per_client, const std::map<int, std::uint64_t>& sizes);

struct PsiReport {
  std::map<int, double> per_client;
  double wpsi = 0.0;
  std::map<int, std::uint64_t> sizes;
};

struct ClientDivergence {
  int client_id = 0;
  std::uint64_t n = 0;
  double psi = 0.0;
  double hellinger = 0.0;
  double jsd = 0.0;
  double emd = 0.0;
};

/// All four divergences of every client against the aggregated pmf, plus
/// their n_i-weighted federation means.
struct FederationReport {
  std::vector<double> global_pmf;
  std::vector<ClientDivergence> clients;  // ascending client id
  double wpsi = 0.0;
  double whellinger = 0.0;
  double wjsd = 0.0;
  double wemd = 0.0;

  PsiReport psi_report() const;
};

FederationReport federation_report(const std::map<int, LabelHistogram>& histograms,
                                   double epsilon = kDefaultEpsilon);

}  // namespace psipfl
