#include "gpba/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "gpba/error.hpp"
#include "gpba/numeric.hpp"

namespace gpba {

namespace {

using numeric::count_log;

void check_minority(std::int64_t j, std::int64_t k) {
  if (k < 1 || j < 0 || j > k / 2) throw Error(ErrorCode::kInvalidCount, "minority count must lie in [0, k/2]");
}

double log_pdf_unnorm(double p, std::int64_t j, std::int64_t k) {
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const auto jd = static_cast<double>(j);
  const auto rd = static_cast<double>(k - j);
  const double first = count_log(jd, lp) + count_log(rd, lq);
  if (2 * j == k) return first;
  return numeric::log_add(first, count_log(jd, lq) + count_log(rd, lp));
}

}  // namespace

double BatchStats::variance_z() const {
  if (calls < 2) return 0.0;
  const double n = static_cast<double>(calls);
  const double h = sum_z / n;
  return std::max(0.0, (sum_z_sq - n * h * h) / (n - 1.0));
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kBar: return "bar";
    case EstimatorKind::kMode: return "mode";
    case EstimatorKind::kMedian: return "median";
    case EstimatorKind::kMean: return "mean";
    case EstimatorKind::kBoost: return "boost";
    case EstimatorKind::kClt: return "clt";
    case EstimatorKind::kExact: return "exact";
  }
  return "?";
}

EstimatorKind parse_estimator(std::string_view name) {
  for (auto kind : {EstimatorKind::kBar, EstimatorKind::kMode, EstimatorKind::kMedian, EstimatorKind::kMean,
                    EstimatorKind::kBoost, EstimatorKind::kClt, EstimatorKind::kExact}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kConfig, "unknown estimator '" + std::string(name) + "'");
}

bool uses_counts(EstimatorKind kind) { return kind != EstimatorKind::kBoost && kind != EstimatorKind::kClt; }

double empirical_majority(const BatchStats& stats) {
  if (stats.k < 1) throw Error(ErrorCode::kInvalidCount, "empty batch");
  const double frac = static_cast<double>(stats.b_k) / static_cast<double>(stats.k);
  return std::max(frac, 1.0 - frac);
}

std::int64_t minority_count(std::int64_t b_k, std::int64_t k) { return std::min(b_k, k - b_k); }

double majority_likelihood(std::int64_t j, std::int64_t k, double p) {
  check_minority(j, k);
  if (2 * j == k) return numeric::binomial_pmf(j, k, p);
  return numeric::binomial_pmf(j, k, p) + numeric::binomial_pmf(j, k, 1.0 - p);
}

double posterior_pdf_unnorm(double p, std::int64_t j, std::int64_t k) {
  check_minority(j, k);
  return std::exp(log_pdf_unnorm(p, j, k));
}

double posterior_cdf(double m, std::int64_t j, std::int64_t k) {
  check_minority(j, k);
  if (m <= 0.5) return 0.0;
  if (m >= 1.0) return 1.0;
  const auto a = static_cast<double>(j + 1);
  const auto b = static_cast<double>(k - j + 1);
  const double v = boost::math::ibeta(a, b, m) + boost::math::ibeta(b, a, m) - 1.0;
  return std::clamp(v, 0.0, 1.0);
}

double posterior_mode(std::int64_t j, std::int64_t k) {
  check_minority(j, k);
  constexpr int kGrid = 1001;
  auto score = [&](double p) { return log_pdf_unnorm(p, j, k); };
  int best = 0;
  double best_val = score(0.5);
  for (int i = 1; i < kGrid; ++i) {
    const double v = score(0.5 + 0.5 * i / (kGrid - 1));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double step = 0.5 / (kGrid - 1);
  double a = std::max(0.5, 0.5 + step * (best - 1));
  double b = std::min(1.0, 0.5 + step * (best + 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = score(c);
  double fd = score(d);
  while (b - a > 1e-10) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = score(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = score(d);
    }
  }
  double result = 0.5 * (a + b);
  double result_val = score(result);
  for (double edge : {0.5, 1.0}) {
    const double v = score(edge);
    if (v >= result_val) {
      result = edge;
      result_val = v;
    }
  }
  return result;
}

double posterior_median(std::int64_t j, std::int64_t k) {
  check_minority(j, k);
  double lo = 0.5;
  double hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (posterior_cdf(mid, j, k) < 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double posterior_mean(std::int64_t j, std::int64_t k) {
  check_minority(j, k);
  const auto jd = static_cast<double>(j);
  const auto kd = static_cast<double>(k);
  auto log_beta = [](double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); };
  const double log_norm = log_beta(jd + 1.0, kd - jd + 1.0);
  const double t1 = std::exp(log_beta(jd + 2.0, kd - jd + 1.0) - log_norm) *
                    boost::math::ibetac(jd + 2.0, kd - jd + 1.0, 0.5);
  const double t2 = std::exp(log_beta(kd - jd + 2.0, jd + 1.0) - log_norm) *
                    boost::math::ibetac(kd - jd + 2.0, jd + 1.0, 0.5);
  return t1 + t2;
}

double boost_majority(double p_hat, std::int64_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidCount, "k must be positive");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw Error(ErrorCode::kInvalidAccuracy, "p_hat must lie in [0, 1]");
  const std::int64_t need = k / 2 + 1;
  if (p_hat == 0.0) return 0.0;
  if (p_hat == 1.0) return 1.0;
  // P(Bin(k, p) >= need) = I_p(need, k - need + 1).
  return boost::math::ibeta(static_cast<double>(need), static_cast<double>(k - need + 1), p_hat);
}

DirectedProb clt_signal(const BatchStats& stats) {
  if (!stats.has_functional) throw Error(ErrorCode::kConfig, "functional responses are not available");
  if (stats.calls < 2) return {1, 0.5};
  const double h = stats.mean_z();
  if (h == 0.0) return {1, 0.5};
  const int direction = h > 0.0 ? 1 : -1;
  const double var = stats.variance_z();
  if (var <= 0.0) return {direction, 1.0};
  const double z = std::sqrt(static_cast<double>(stats.calls)) * std::abs(h) / std::sqrt(var);
  return {direction, numeric::normal_cdf(z)};
}

double clt_prob(const BatchStats& stats) { return clt_signal(stats).prob; }

double exact_bias(double p, std::int64_t k) {
  if (k < 3) throw Error(ErrorCode::kUnsupportedBatch, "bias formula needs k >= 3");
  if (!(p > 0.5 && p <= 1.0)) throw Error(ErrorCode::kInvalidAccuracy, "p must lie in (1/2, 1]");
  const std::int64_t half_up = (k + 1) / 2;
  return numeric::binomial_cdf(half_up - 1, k, p) - 2.0 * p * numeric::binomial_cdf(half_up - 2, k - 1, p);
}

double tpo_boundary(std::int64_t k, double sigma, double alpha) {
  if (k < 1) throw Error(ErrorCode::kInvalidCount, "k must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidProbability, "alpha must lie in (0, 1]");
  const double n1 = static_cast<double>(k) + 1.0;
  return sigma * std::sqrt(n1 * (std::log(n1) - 2.0 * std::log(alpha)));
}

double clamp_estimate(double p_hat, std::int64_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidCount, "k must be positive");
  return std::min(std::max(p_hat, 0.5), 1.0 - 0.5 / static_cast<double>(k));
}

UpdateSignal estimate_signal(EstimatorKind kind, const BatchStats& stats, std::optional<double> true_p) {
  const std::int64_t k = stats.k;
  if (k < 1) throw Error(ErrorCode::kInvalidCount, "empty batch");
  const std::int64_t j = minority_count(stats.b_k, k);
  switch (kind) {
    case EstimatorKind::kBar: return UpdateSignal::batched(stats.b_k, k, clamp_estimate(empirical_majority(stats), k));
    case EstimatorKind::kMode: return UpdateSignal::batched(stats.b_k, k, clamp_estimate(posterior_mode(j, k), k));
    case EstimatorKind::kMedian: return UpdateSignal::batched(stats.b_k, k, clamp_estimate(posterior_median(j, k), k));
    case EstimatorKind::kMean: return UpdateSignal::batched(stats.b_k, k, clamp_estimate(posterior_mean(j, k), k));
    case EstimatorKind::kExact:
      if (!true_p) throw Error(ErrorCode::kConfig, "exact estimator needs the true accuracy");
      return UpdateSignal::batched(stats.b_k, k, *true_p);
    case EstimatorKind::kBoost: {
      const int direction = 2 * stats.b_k > k ? 1 : -1;
      const double p = boost_majority(empirical_majority(stats), k);
      return UpdateSignal::boosted(direction, clamp_estimate(p, k));
    }
    case EstimatorKind::kClt: {
      const DirectedProb s = clt_signal(stats);
      return UpdateSignal::boosted(s.direction, clamp_estimate(s.prob, std::max<std::int64_t>(stats.calls, 2)));
    }
  }
  throw Error(ErrorCode::kConfig, "unknown estimator");
}

}  // namespace gpba
