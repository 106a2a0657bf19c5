#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gpba/updating.hpp"

namespace gpba {

/// Sufficient statistics of one query batch at a single location.
///
/// `k` is the number of sign responses and `calls` the number of raw oracle
/// draws behind them; the two differ only under pre-averaging. The functional
/// sums always cover every raw draw.
struct BatchStats {
  std::int64_t k = 0;
  std::int64_t b_k = 0;
  std::int64_t calls = 0;
  bool has_functional = false;
  double sum_z = 0.0;
  double sum_z_sq = 0.0;

  double mean_z() const { return sum_z / static_cast<double>(calls); }
  /// Unbiased sample variance of the raw draws; 0 when calls < 2.
  double variance_z() const;
};

enum class EstimatorKind { kBar, kMode, kMedian, kMean, kBoost, kClt, kExact };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view name);

/// Whether the estimator drives a batched (counts) update.
bool uses_counts(EstimatorKind kind);

/// max(b/k, 1 - b/k).
double empirical_majority(const BatchStats& stats);

/// Minority count min(b, k - b).
std::int64_t minority_count(std::int64_t b_k, std::int64_t k);

/// P(majority proportion = (k - j)/k) for minority count j in [0, k/2].
double majority_likelihood(std::int64_t j, std::int64_t k, double p);

/// Unnormalized posterior of p on (1/2, 1) under a uniform prior.
double posterior_pdf_unnorm(double p, std::int64_t j, std::int64_t k);

/// Posterior CDF on [1/2, 1], I_m(a, b) + I_m(b, a) - 1 with a = j+1, b = k-j+1.
double posterior_cdf(double m, std::int64_t j, std::int64_t k);

double posterior_mode(std::int64_t j, std::int64_t k);
double posterior_median(std::int64_t j, std::int64_t k);
double posterior_mean(std::int64_t j, std::int64_t k);

/// P(strict majority of k votes is correct) at per-vote accuracy p_hat.
/// A tie at even k counts as incorrect.
double boost_majority(double p_hat, std::int64_t k);

struct DirectedProb {
  int direction = 1;
  double prob = 0.5;
};

/// Phi(sqrt(n) |h| / sigma) from the functional sums, with the sign of the
/// sample mean as direction. A zero sample variance gives probability 1 and
/// a zero mean gives 1/2; fewer than two draws are treated as uninformative.
DirectedProb clt_signal(const BatchStats& stats);
double clt_prob(const BatchStats& stats);

/// E[majority proportion] - p for a batch of k >= 3.
double exact_bias(double p, std::int64_t k);

/// sigma * sqrt((k+1)(ln(k+1) - 2 ln alpha)).
double tpo_boundary(std::int64_t k, double sigma, double alpha);

/// min(max(p_hat, 1/2), 1 - 1/(2k)).
double clamp_estimate(double p_hat, std::int64_t k);

/// Turns batch statistics into the update signal for the chosen estimator.
/// kExact needs `true_p`; kClt needs functional sums.
UpdateSignal estimate_signal(EstimatorKind kind, const BatchStats& stats, std::optional<double> true_p = std::nullopt);

}  // namespace gpba
