#include "gpba/updating.hpp"

#include <cmath>

#include "gpba/error.hpp"
#include "gpba/numeric.hpp"

namespace gpba {

namespace {

using numeric::count_log;
using numeric::kNegInf;

void check_accuracy(double p) {
  if (!(p >= 0.5 && p <= 1.0)) throw Error(ErrorCode::kInvalidAccuracy, "accuracy must lie in [1/2, 1]");
}

void check_interior(const PiecewiseDensity& f, double x) {
  if (!(x > f.lo() && x < f.hi())) throw Error(ErrorCode::kInvalidSplit, "query point must lie inside the support");
}

struct LogFactors {
  double log_right;
  double log_left;
};

// Log scaling factors (right, left) for b positives out of k at accuracy p.
LogFactors batched_log_factors(const PiecewiseDensity& f, double x, std::int64_t b, std::int64_t k, double p) {
  check_accuracy(p);
  check_interior(f, x);
  if (k < 1 || b < 0 || b > k) throw Error(ErrorCode::kInvalidCount, "need 0 <= b_k <= k and k >= 1");
  const auto [log_f, log_not_f] = f.log_split_masses(x);
  if (log_f == kNegInf || log_not_f == kNegInf) throw Error(ErrorCode::kDegenerateUpdate, "query point outside the positive-mass region");
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const auto bd = static_cast<double>(b);
  const auto md = static_cast<double>(k - b);
  const double log_rho = count_log(bd, lp) + count_log(md, lq);
  const double log_rho_prime = count_log(bd, lq) + count_log(md, lp);
  if (log_rho == kNegInf && log_rho_prime == kNegInf) {
    throw Error(ErrorCode::kDegenerateUpdate, "responses contradict a perfect oracle");
  }
  const double log_c = numeric::log_add(log_rho_prime + log_f, log_rho + log_not_f);
  return {log_rho - log_c, log_rho_prime - log_c};
}

}  // namespace

double gamma_prob(const PiecewiseDensity& f, double x, double p) {
  const double F = f.cdf(x);
  return p * (1.0 - F) + (1.0 - p) * F;
}

PiecewiseDensity step_update(const PiecewiseDensity& f, double x, int y, double p) {
  if (y != 1 && y != -1) throw Error(ErrorCode::kInvalidCount, "response must be +1 or -1");
  return batched_update(f, x, UpdateSignal::batched(y == 1 ? 1 : 0, 1, p));
}

PiecewiseDensity batched_update(const PiecewiseDensity& f, double x, const UpdateSignal& signal) {
  const LogFactors lf = batched_log_factors(f, x, signal.b_k, signal.k, signal.p_hat);
  return apply_split_scaling(f, x, lf.log_right, lf.log_left);
}

double right_scaling_factor(const PiecewiseDensity& f, double x, const UpdateSignal& signal) {
  return std::exp(batched_log_factors(f, x, signal.b_k, signal.k, signal.p_hat).log_right);
}

PiecewiseDensity boosted_update(const PiecewiseDensity& f, double x, const UpdateSignal& signal) {
  return step_update(f, x, signal.direction, signal.p_hat);
}

PiecewiseDensity apply_update(const PiecewiseDensity& f, double x, const UpdateSignal& signal) {
  if (signal.kind == UpdateSignal::Kind::kBoostedBinary) return boosted_update(f, x, signal);
  return batched_update(f, x, signal);
}

}  // namespace gpba
