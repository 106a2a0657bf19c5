#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "gpba/density.hpp"
#include "gpba/estimators.hpp"
#include "gpba/oracle.hpp"
#include "gpba/policies.hpp"

namespace gpba {

struct RunConfig {
  PolicySpec policy;
  EstimatorKind estimator = EstimatorKind::kBar;
  std::int64_t batch_k = 250;
  std::int64_t budget_t = 20000;
  std::int64_t preavg_a = 1;
  double alpha_ci = 0.05;
  /// Budget values at which metrics are recorded. Need not be sorted.
  std::vector<std::int64_t> checkpoints;
  std::uint64_t seed = 0;

  /// Throws kConfig if the configuration cannot run against `oracle`.
  void validate(const Oracle& oracle) const;
};

struct MetricsRecord {
  std::int64_t checkpoint = 0;
  std::int64_t budget_used = 0;
  std::int64_t n_macro = 0;
  double root_estimate = 0.0;
  double residual = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double ci_length = 0.0;
  bool covered = false;
};

/// One record per macro-iteration.
struct TraceRecord {
  std::int64_t n = 0;
  double x = 0.0;
  std::int64_t b_k = 0;
  std::int64_t n_signs = 0;
  std::int64_t k_used = 0;
  std::int64_t budget_used = 0;
  double p_hat = 0.5;
  double root_estimate = 0.0;
};

struct RunResult {
  PiecewiseDensity density = PiecewiseDensity::uniform(0.0, 1.0);
  std::vector<MetricsRecord> metrics;
  std::vector<TraceRecord> trace;
  std::int64_t calls = 0;
};

/// Residual, credible interval and coverage of f against x_star. The budget
/// fields are left at zero.
MetricsRecord metrics_snapshot(const PiecewiseDensity& f, double x_star, double alpha);

/// Propose, query, estimate, update until the budget is spent. Metrics are
/// recorded only when the oracle knows its root.
RunResult run_gpba(const RunConfig& config, Oracle& oracle);

/// Median sampling with adaptive batches from the TPO stopping rule.
RunResult run_tpo_pba(const RunConfig& config, Oracle& oracle);

/// Replays the design in `trace` with the same responses but the true
/// accuracy, returning the exact-p posterior after each record.
std::vector<PiecewiseDensity> replay_exact(const std::vector<TraceRecord>& trace, const Oracle& oracle);

/// Metrics of a replayed sequence at the given checkpoints, using the state
/// after the last record whose budget does not exceed each checkpoint.
std::vector<MetricsRecord> replay_metrics(const std::vector<TraceRecord>& trace,
                                          const std::vector<PiecewiseDensity>& states, const Oracle& oracle,
                                          std::vector<std::int64_t> checkpoints, double alpha);

/// Whitespace-separated columns: n x b_k n_signs k_used budget_used p_hat root_estimate.
void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out);

}  // namespace gpba
