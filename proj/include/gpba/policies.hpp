#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gpba/density.hpp"
#include "gpba/estimators.hpp"
#include "gpba/oracle.hpp"
#include "gpba/rng.hpp"

namespace gpba {

enum class PolicyKind { kDetIds, kRandIds, kSystQ, kRandQ, kTpo, kTrueIds, kMedian, kUniform };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::kRandQ;
  std::vector<double> quantiles{0.25, 0.75};
  int m_candidates = 2;
  double tpo_alpha = 0.05;
  int grid_size = 1001;

  /// Throws kConfig if the fields are inconsistent with `kind`.
  void validate() const;
  bool is_ids() const { return kind == PolicyKind::kDetIds || kind == PolicyKind::kRandIds; }
  /// Candidates queried per macro-iteration: the quantile count for det-ids,
  /// m_candidates for rand-ids, 1 otherwise.
  std::int64_t candidate_count() const;
};

/// H(gamma) - H(p) in nats.
double info_gain(const PiecewiseDensity& f, double x, double p);

/// Moves x into the positive-mass region of f, 1e-9 inside its nearest edge
/// (or half an interval for intervals narrower than that). Points already
/// inside are returned unchanged.
double ensure_interior(const PiecewiseDensity& f, double x);

/// Det-IDS: the fixed quantiles of f. Rand-IDS: quantiles at fresh uniform
/// levels, redrawn when two candidates coincide.
std::vector<double> ids_candidates(const PiecewiseDensity& f, const PolicySpec& spec, Rng& rng);

/// Candidates at explicitly given quantile levels.
std::vector<double> ids_candidates_at(const PiecewiseDensity& f, std::span<const double> levels);

struct Candidate {
  double x = 0.0;
  double p_hat = 0.5;
  BatchStats stats;
};

/// Index maximizing info_gain(f, x_i, p_hat_i); ties go to the lowest index.
std::size_t ids_select(const PiecewiseDensity& f, std::span<const Candidate> candidates);

/// Quantile of f at level quantiles[n mod M].
double syst_q_next(const PiecewiseDensity& f, const PolicySpec& spec, std::int64_t n);

/// Quantile of f at a uniform level, i.e. a draw from f.
double rand_q_next(const PiecewiseDensity& f, Rng& rng);

struct TpoResult {
  int direction = 1;
  std::int64_t k_used = 0;
  BatchStats stats;
};

/// Samples x one draw at a time until |S_k| >= tpo_boundary(k, sigma, alpha)
/// or budget_left draws are spent.
TpoResult tpo_query(Oracle& oracle, double x, double sigma, double alpha, std::int64_t budget_left);

/// Known-accuracy baselines: true-ids (grid argmax of the gain under the true
/// accuracy), median, uniform.
double baseline_next(const PiecewiseDensity& f_true, const PolicySpec& spec, const Oracle& oracle, Rng& rng);

}  // namespace gpba
