#include "gpba/driver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>

#include "gpba/error.hpp"
#include "gpba/updating.hpp"

namespace gpba {

namespace {

// Snapshots the state at the last update whose budget does not exceed each
// checkpoint.
class CheckpointRecorder {
 public:
  CheckpointRecorder(std::vector<std::int64_t> checkpoints, std::optional<double> root, double alpha)
      : checkpoints_(std::move(checkpoints)), root_(root), alpha_(alpha) {
    std::sort(checkpoints_.begin(), checkpoints_.end());
    checkpoints_.erase(std::unique(checkpoints_.begin(), checkpoints_.end()), checkpoints_.end());
  }

  void before_update(const PiecewiseDensity& f, std::int64_t used, std::int64_t n, std::int64_t used_after) {
    while (next_ < checkpoints_.size() && checkpoints_[next_] < used_after) record(f, used, n);
  }

  void finish(const PiecewiseDensity& f, std::int64_t used, std::int64_t n) {
    while (next_ < checkpoints_.size()) record(f, used, n);
  }

  std::vector<MetricsRecord> take() { return std::move(records_); }

 private:
  void record(const PiecewiseDensity& f, std::int64_t used, std::int64_t n) {
    const std::int64_t cp = checkpoints_[next_++];
    if (!root_) return;
    MetricsRecord m = metrics_snapshot(f, *root_, alpha_);
    m.checkpoint = cp;
    m.budget_used = used;
    m.n_macro = n;
    records_.push_back(m);
  }

  std::vector<std::int64_t> checkpoints_;
  std::optional<double> root_;
  double alpha_;
  std::size_t next_ = 0;
  std::vector<MetricsRecord> records_;
};

std::optional<double> accuracy_for(EstimatorKind kind, const Oracle& oracle, double x) {
  if (kind != EstimatorKind::kExact) return std::nullopt;
  return oracle.accuracy(x);
}

}  // namespace

void RunConfig::validate(const Oracle& oracle) const {
  policy.validate();
  if (batch_k < 1) throw Error(ErrorCode::kConfig, "batch size must be positive");
  if (estimator != EstimatorKind::kExact && policy.kind != PolicyKind::kTpo && batch_k < 2) {
    throw Error(ErrorCode::kConfig, "estimating the accuracy needs a batch of at least 2");
  }
  if (preavg_a < 1 || batch_k % preavg_a != 0) {
    throw Error(ErrorCode::kConfig, "pre-averaging size must divide the batch size");
  }
  if (budget_t < batch_k * policy.candidate_count()) throw Error(ErrorCode::kConfig, "budget smaller than one macro-iteration");
  if (!(alpha_ci > 0.0 && alpha_ci < 1.0)) throw Error(ErrorCode::kConfig, "alpha_ci must lie in (0, 1)");
  const double mid = 0.5 * (oracle.lo() + oracle.hi());
  if (estimator == EstimatorKind::kClt && !oracle.exposes_functional()) {
    throw Error(ErrorCode::kConfig, "clt estimator needs functional responses");
  }
  if ((estimator == EstimatorKind::kExact || policy.kind == PolicyKind::kTrueIds) && !oracle.accuracy(mid)) {
    throw Error(ErrorCode::kConfig, "oracle accuracy is unknown");
  }
  if (policy.kind == PolicyKind::kTpo && (!oracle.exposes_functional() || !oracle.noise_scale(mid))) {
    throw Error(ErrorCode::kConfig, "tpo needs functional responses and a known noise scale");
  }
}

MetricsRecord metrics_snapshot(const PiecewiseDensity& f, double x_star, double alpha) {
  MetricsRecord m;
  m.root_estimate = f.median();
  m.residual = std::abs(m.root_estimate - x_star);
  const CredibleInterval ci = f.credible_interval(alpha);
  m.ci_lo = ci.lo;
  m.ci_hi = ci.hi;
  m.ci_length = ci.length();
  m.covered = ci.contains(x_star);
  return m;
}

RunResult run_gpba(const RunConfig& config, Oracle& oracle) {
  if (config.policy.kind == PolicyKind::kTpo) return run_tpo_pba(config, oracle);
  config.validate(oracle);

  const PolicySpec& spec = config.policy;
  Rng rng(stream_seed(config.seed, Stream::kPolicy));
  PiecewiseDensity f = PiecewiseDensity::uniform(oracle.lo(), oracle.hi());
  CheckpointRecorder recorder(config.checkpoints, oracle.root(), config.alpha_ci);
  RunResult result;
  const std::int64_t k = config.batch_k;
  const std::int64_t a = config.preavg_a;
  std::int64_t used = 0;
  std::int64_t n = 0;

  while (true) {
    double x = 0.0;
    BatchStats stats;
    UpdateSignal signal;
    std::int64_t consumed = 0;
    if (spec.is_ids()) {
      consumed = k * spec.candidate_count();
      if (config.budget_t - used < consumed) break;
      std::vector<Candidate> candidates;
      std::vector<UpdateSignal> signals;
      for (double cx : ids_candidates(f, spec, rng)) {
        BatchStats s = preaveraged_batch(oracle, cx, k, a);
        signals.push_back(estimate_signal(config.estimator, s, accuracy_for(config.estimator, oracle, cx)));
        candidates.push_back({cx, signals.back().p_hat, s});
      }
      const std::size_t pick = ids_select(f, candidates);
      x = candidates[pick].x;
      stats = candidates[pick].stats;
      signal = signals[pick];
    } else {
      std::int64_t batch = std::min(k, config.budget_t - used);
      batch -= batch % a;
      if (batch < 1) break;
      consumed = batch;
      switch (spec.kind) {
        case PolicyKind::kSystQ: x = syst_q_next(f, spec, n); break;
        case PolicyKind::kRandQ: x = rand_q_next(f, rng); break;
        default: x = baseline_next(f, spec, oracle, rng); break;
      }
      stats = preaveraged_batch(oracle, x, batch, a);
      signal = estimate_signal(config.estimator, stats, accuracy_for(config.estimator, oracle, x));
    }
    recorder.before_update(f, used, n, used + consumed);
    f = apply_update(f, x, signal);
    used += consumed;
    ++n;
    result.trace.push_back({n, x, stats.b_k, stats.k, stats.calls, used, signal.p_hat, f.median()});
  }
  recorder.finish(f, used, n);
  result.metrics = recorder.take();
  result.density = std::move(f);
  result.calls = used;
  return result;
}

RunResult run_tpo_pba(const RunConfig& config, Oracle& oracle) {
  config.validate(oracle);
  PiecewiseDensity f = PiecewiseDensity::uniform(oracle.lo(), oracle.hi());
  CheckpointRecorder recorder(config.checkpoints, oracle.root(), config.alpha_ci);
  RunResult result;
  std::int64_t used = 0;
  std::int64_t n = 0;
  while (used < config.budget_t) {
    const double x = ensure_interior(f, f.median());
    const double sigma = *oracle.noise_scale(x);
    const TpoResult tpo = tpo_query(oracle, x, sigma, config.policy.tpo_alpha, config.budget_t - used);
    const DirectedProb clt = clt_signal(tpo.stats);
    const double p = clamp_estimate(clt.prob, std::max<std::int64_t>(tpo.k_used, 2));
    const UpdateSignal signal = UpdateSignal::boosted(tpo.direction, p);
    recorder.before_update(f, used, n, used + tpo.k_used);
    f = apply_update(f, x, signal);
    used += tpo.k_used;
    ++n;
    result.trace.push_back({n, x, tpo.stats.b_k, tpo.stats.k, tpo.k_used, used, p, f.median()});
  }
  recorder.finish(f, used, n);
  result.metrics = recorder.take();
  result.density = std::move(f);
  result.calls = used;
  return result;
}

std::vector<PiecewiseDensity> replay_exact(const std::vector<TraceRecord>& trace, const Oracle& oracle) {
  std::vector<PiecewiseDensity> states;
  states.reserve(trace.size());
  PiecewiseDensity g = PiecewiseDensity::uniform(oracle.lo(), oracle.hi());
  for (const TraceRecord& r : trace) {
    const auto p = oracle.accuracy(r.x);
    if (!p) throw Error(ErrorCode::kConfig, "replay needs the true accuracy");
    g = batched_update(g, r.x, UpdateSignal::batched(r.b_k, r.n_signs, *p));
    states.push_back(g);
  }
  return states;
}

std::vector<MetricsRecord> replay_metrics(const std::vector<TraceRecord>& trace,
                                          const std::vector<PiecewiseDensity>& states, const Oracle& oracle,
                                          std::vector<std::int64_t> checkpoints, double alpha) {
  const auto root = oracle.root();
  if (!root) throw Error(ErrorCode::kConfig, "replay metrics need the true root");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  const PiecewiseDensity prior = PiecewiseDensity::uniform(oracle.lo(), oracle.hi());
  std::vector<MetricsRecord> out;
  std::size_t i = 0;
  for (std::int64_t cp : checkpoints) {
    while (i < trace.size() && trace[i].budget_used <= cp) ++i;
    const PiecewiseDensity& g = i == 0 ? prior : states[i - 1];
    MetricsRecord m = metrics_snapshot(g, *root, alpha);
    m.checkpoint = cp;
    m.budget_used = i == 0 ? 0 : trace[i - 1].budget_used;
    m.n_macro = static_cast<std::int64_t>(i);
    out.push_back(m);
  }
  return out;
}

void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out) {
  out << "# n x b_k n_signs k_used budget_used p_hat root_estimate\n" << std::setprecision(17);
  for (const TraceRecord& r : trace) {
    out << r.n << ' ' << r.x << ' ' << r.b_k << ' ' << r.n_signs << ' ' << r.k_used << ' ' << r.budget_used << ' '
        << r.p_hat << ' ' << r.root_estimate << '\n';
  }
}

}  // namespace gpba
