#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpba/bermudan_oracle.hpp"
#include "gpba/driver.hpp"
#include "gpba/estimators.hpp"
#include "gpba/policies.hpp"

namespace gpba {

enum class Mode { kSynthetic, kFinance, kTpoTable, kDesignQuality };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct ExperimentConfig {
  Mode mode = Mode::kSynthetic;
  std::vector<PolicyKind> policies;
  std::vector<EstimatorKind> estimators;
  std::vector<std::int64_t> batch_sizes;
  /// Policy parameters shared by every scheme.
  PolicySpec policy_params;
  /// "h1", "h2", "h3" or "const".
  std::string function = "h1";
  /// Accuracy of the "const" function.
  double const_p = 0.9;
  BermudanParams finance;
  std::int64_t budget = 0;
  std::int64_t reps = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::int64_t preavg_a = 1;
  double alpha_ci = 0.05;
  /// Empty means default_checkpoints(budget, ...).
  std::vector<std::int64_t> checkpoints;
  /// tpo-table grid.
  std::vector<double> tpo_p{0.52, 0.55, 0.60, 0.70};
  std::vector<double> tpo_alphas{0.05, 0.10, 0.20, 0.40};
  /// Output locations; empty paths are not written. Relative paths resolve
  /// against output_dir.
  std::string output_dir = ".";
  std::string csv_path;
  std::string json_path;
  std::string curves_path;

  /// Throws kConfig on invalid combinations, before anything runs.
  void validate() const;
};

/// Parses a JSON config object. Unknown keys and missing required fields
/// raise kParse naming the key.
ExperimentConfig config_from_json(const nlohmann::json& j, Mode mode);

/// args[0] is the mode; the rest are flags. `--config FILE` is read first and
/// every other flag overrides it. Default output_dir comes from
/// GPBA_OUTPUT_DIR when set.
ExperimentConfig parse_config(const std::vector<std::string>& args);

/// Ten log-spaced budgets from one macro-iteration up to budget, rounded down
/// to whole macro-iterations.
std::vector<std::int64_t> default_checkpoints(std::int64_t budget, std::int64_t step);

/// One replication row, or the aggregate over a scheme's replications when
/// `aggregate` is set (then `covered` is the coverage rate).
struct ResultRow {
  std::string scheme;
  std::string policy;
  std::string estimator;
  std::int64_t k = 0;
  std::int64_t t = 0;
  std::int64_t rep = 0;
  bool aggregate = false;
  double budget_used = 0.0;
  double root_est = 0.0;
  double residual = 0.0;
  double ci_len = 0.0;
  double covered = 0.0;
};

/// Aggregate row over per-replication rows of one scheme: means of every
/// metric, with `covered` becoming the coverage rate.
ResultRow aggregate_rows(const std::vector<ResultRow>& rows);

/// Learning-curve point for one scheme at one checkpoint.
struct CurvePoint {
  std::string scheme;
  std::int64_t checkpoint = 0;
  double mean_residual = 0.0;
  double median_residual = 0.0;
  double mean_ci_len = 0.0;
  double coverage = 0.0;
  double mean_n_macro = 0.0;
};

struct TpoTableRow {
  double p = 0.0;
  double alpha = 0.0;
  double mean_k = 0.0;
  double sd_k = 0.0;
  std::int64_t reps = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<CurvePoint> curves;
  std::vector<TpoTableRow> tpo_table;
  /// Ground-truth root used for residuals.
  double root = 0.0;
};

std::string scheme_name(PolicyKind policy, EstimatorKind estimator, std::int64_t k);

/// Builds the oracle of replication seed `seed`.
std::unique_ptr<Oracle> make_oracle(const ExperimentConfig& cfg, std::uint64_t seed,
                                    std::shared_ptr<const BoundaryTable> table = nullptr);

/// Runs every scheme for every replication.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Replays each recorded design under the true accuracy and reports metrics
/// of the exact posterior, together with the known-accuracy baselines.
ExperimentResult run_design_quality(const ExperimentConfig& cfg);

/// Mean TPO hitting time at x = x* - sigma * Phi^{-1}(p) for every (p, alpha).
ExperimentResult run_tpo_table(const ExperimentConfig& cfg);

/// Dispatches on cfg.mode.
ExperimentResult run(const ExperimentConfig& cfg);

/// Header: scheme,policy,estimator,K,T,rep,budget_used,root_est,residual,ci_len,covered.
/// Aggregate rows carry rep "mean".
void write_records(const std::vector<ResultRow>& rows, std::ostream& out);
void write_curves(const std::vector<CurvePoint>& curves, std::ostream& out);
void write_tpo_table(const std::vector<TpoTableRow>& rows, std::ostream& out);

nlohmann::json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);
void write_summary(const ExperimentConfig& cfg, const ExperimentResult& result, std::ostream& out);
/// Reads aggregate rows, curves and tpo rows back from a summary.
ExperimentResult read_summary(std::istream& in);

/// Writes the configured output files.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace gpba
