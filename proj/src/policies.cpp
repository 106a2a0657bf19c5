#include "gpba/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gpba/error.hpp"
#include "gpba/numeric.hpp"
#include "gpba/updating.hpp"

namespace gpba {

namespace {

constexpr double kNudge = 1e-9;
constexpr double kCoincide = 1e-12;

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kDetIds: return "det-ids";
    case PolicyKind::kRandIds: return "rand-ids";
    case PolicyKind::kSystQ: return "syst-q";
    case PolicyKind::kRandQ: return "rand-q";
    case PolicyKind::kTpo: return "tpo";
    case PolicyKind::kTrueIds: return "true-ids";
    case PolicyKind::kMedian: return "median";
    case PolicyKind::kUniform: return "uniform";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view name) {
  for (auto kind : {PolicyKind::kDetIds, PolicyKind::kRandIds, PolicyKind::kSystQ, PolicyKind::kRandQ,
                    PolicyKind::kTpo, PolicyKind::kTrueIds, PolicyKind::kMedian, PolicyKind::kUniform}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kConfig, "unknown policy '" + std::string(name) + "'");
}

void PolicySpec::validate() const {
  if (kind == PolicyKind::kDetIds || kind == PolicyKind::kSystQ) {
    if (quantiles.empty()) throw Error(ErrorCode::kConfig, "quantile list is empty");
    for (std::size_t i = 0; i < quantiles.size(); ++i) {
      if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0)) throw Error(ErrorCode::kConfig, "quantiles must lie in (0, 1)");
      if (i > 0 && !(quantiles[i - 1] < quantiles[i])) {
        throw Error(ErrorCode::kConfig, "quantiles must be strictly increasing");
      }
    }
  }
  if (kind == PolicyKind::kDetIds && quantiles.size() < 2) throw Error(ErrorCode::kConfig, "det-ids needs M >= 2");
  if (kind == PolicyKind::kRandIds && m_candidates < 2) throw Error(ErrorCode::kConfig, "rand-ids needs M >= 2");
  if (kind == PolicyKind::kTpo && !(tpo_alpha > 0.0 && tpo_alpha < 1.0)) {
    throw Error(ErrorCode::kConfig, "tpo alpha must lie in (0, 1)");
  }
  if (kind == PolicyKind::kTrueIds && grid_size < 1) throw Error(ErrorCode::kConfig, "grid size must be positive");
}

std::int64_t PolicySpec::candidate_count() const {
  if (kind == PolicyKind::kDetIds) return static_cast<std::int64_t>(quantiles.size());
  if (kind == PolicyKind::kRandIds) return m_candidates;
  return 1;
}

double info_gain(const PiecewiseDensity& f, double x, double p) {
  return numeric::binary_entropy(gamma_prob(f, x, p)) - numeric::binary_entropy(p);
}

double ensure_interior(const PiecewiseDensity& f, double x) {
  const auto knots = f.knots();
  const auto heights = f.log_heights();
  const std::size_t n = heights.size();
  auto positive = [&](std::size_t i) { return heights[i] != numeric::kNegInf; };
  auto inset = [&](std::size_t i) { return std::min(kNudge, 0.5 * (knots[i + 1] - knots[i])); };

  double best = x;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive(i)) continue;
    const double a = knots[i] + inset(i);
    const double b = knots[i + 1] - inset(i);
    if (x >= a && x <= b) return x;
    const double candidate = x < a ? a : b;
    const double dist = std::abs(candidate - x);
    if (dist < best_dist) {
      best_dist = dist;
      best = candidate;
    }
  }
  return best;
}

std::vector<double> ids_candidates_at(const PiecewiseDensity& f, std::span<const double> levels) {
  std::vector<double> xs;
  xs.reserve(levels.size());
  for (double q : levels) xs.push_back(ensure_interior(f, f.quantile(q)));
  return xs;
}

std::vector<double> ids_candidates(const PiecewiseDensity& f, const PolicySpec& spec, Rng& rng) {
  if (spec.kind == PolicyKind::kDetIds) return ids_candidates_at(f, spec.quantiles);
  if (spec.kind != PolicyKind::kRandIds) throw Error(ErrorCode::kConfig, "not an IDS policy");
  std::vector<double> xs;
  constexpr int kMaxRedraws = 1000;
  for (int m = 0; m < spec.m_candidates; ++m) {
    double x = 0.0;
    for (int attempt = 0;; ++attempt) {
      x = ensure_interior(f, f.quantile(open_unit(rng)));
      const bool clash = std::any_of(xs.begin(), xs.end(), [&](double y) { return std::abs(x - y) <= kCoincide; });
      if (!clash || attempt >= kMaxRedraws) break;
    }
    xs.push_back(x);
  }
  return xs;
}

std::size_t ids_select(const PiecewiseDensity& f, std::span<const Candidate> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::kConfig, "no candidates to select from");
  std::size_t best = 0;
  double best_gain = info_gain(f, candidates[0].x, candidates[0].p_hat);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double g = info_gain(f, candidates[i].x, candidates[i].p_hat);
    if (g > best_gain) {
      best_gain = g;
      best = i;
    }
  }
  return best;
}

double syst_q_next(const PiecewiseDensity& f, const PolicySpec& spec, std::int64_t n) {
  if (spec.quantiles.empty()) throw Error(ErrorCode::kConfig, "quantile list is empty");
  const auto m = static_cast<std::int64_t>(spec.quantiles.size());
  return ensure_interior(f, f.quantile(spec.quantiles[static_cast<std::size_t>(n % m)]));
}

double rand_q_next(const PiecewiseDensity& f, Rng& rng) { return ensure_interior(f, f.quantile(open_unit(rng))); }

TpoResult tpo_query(Oracle& oracle, double x, double sigma, double alpha, std::int64_t budget_left) {
  if (budget_left < 1) throw Error(ErrorCode::kInvalidCount, "no budget left");
  TpoResult result;
  BatchStats& s = result.stats;
  s.has_functional = true;
  while (true) {
    const double z = oracle.sample(x);
    ++s.k;
    ++s.calls;
    if (z > 0.0) ++s.b_k;
    s.sum_z += z;
    s.sum_z_sq += z * z;
    if (std::abs(s.sum_z) >= tpo_boundary(s.k, sigma, alpha) || s.k >= budget_left) break;
  }
  result.k_used = s.k;
  result.direction = s.sum_z > 0.0 ? 1 : -1;
  return result;
}

double baseline_next(const PiecewiseDensity& f_true, const PolicySpec& spec, const Oracle& oracle, Rng& rng) {
  switch (spec.kind) {
    case PolicyKind::kMedian: return ensure_interior(f_true, f_true.median());
    case PolicyKind::kUniform:
      return ensure_interior(f_true, oracle.lo() + (oracle.hi() - oracle.lo()) * open_unit(rng));
    case PolicyKind::kTrueIds: {
      const double lo = oracle.lo();
      const double w = oracle.hi() - oracle.lo();
      double best_x = lo + w / (spec.grid_size + 1);
      double best_gain = -1.0;
      for (int i = 1; i <= spec.grid_size; ++i) {
        const double x = lo + w * i / (spec.grid_size + 1);
        const auto p = oracle.accuracy(x);
        if (!p) throw Error(ErrorCode::kConfig, "true-ids needs the true accuracy");
        const double g = info_gain(f_true, x, *p);
        if (g > best_gain) {
          best_gain = g;
          best_x = x;
        }
      }
      return ensure_interior(f_true, best_x);
    }
    default: throw Error(ErrorCode::kConfig, "not a baseline policy");
  }
}

}  // namespace gpba
