#pragma once

#include <cstdint>

#include "gpba/density.hpp"

namespace gpba {

/// Input to one knowledge-state transition.
///
/// kBatchedCounts carries (b_k, k, p_hat) for the batched update; kBoostedBinary
/// carries a single direction with its probability of being correct.
struct UpdateSignal {
  enum class Kind { kBatchedCounts, kBoostedBinary };

  Kind kind = Kind::kBatchedCounts;
  std::int64_t b_k = 0;
  std::int64_t k = 1;
  int direction = 1;
  double p_hat = 0.5;

  static UpdateSignal batched(std::int64_t b_k, std::int64_t k, double p_hat) {
    return {Kind::kBatchedCounts, b_k, k, 1, p_hat};
  }
  static UpdateSignal boosted(int direction, double p_hat) { return {Kind::kBoostedBinary, 0, 1, direction, p_hat}; }
};

/// gamma = p (1 - F(x)) + (1 - p) F(x): probability of a +1 response at x.
double gamma_prob(const PiecewiseDensity& f, double x, double p);

/// Single-response update. y = +1 is evidence the root lies right of x.
PiecewiseDensity step_update(const PiecewiseDensity& f, double x, int y, double p);

/// Batched update from (b_k, k, p_hat); equivalent to k single-response
/// updates with b_k positives in any order.
PiecewiseDensity batched_update(const PiecewiseDensity& f, double x, const UpdateSignal& signal);

/// R = rho / c, the factor applied right of x by batched_update.
double right_scaling_factor(const PiecewiseDensity& f, double x, const UpdateSignal& signal);

/// Single-response update driven by a boosted direction.
PiecewiseDensity boosted_update(const PiecewiseDensity& f, double x, const UpdateSignal& signal);

/// Dispatches on signal.kind.
PiecewiseDensity apply_update(const PiecewiseDensity& f, double x, const UpdateSignal& signal);

}  // namespace gpba
