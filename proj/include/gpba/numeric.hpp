#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace gpba::numeric {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double q);

/// log(exp(a) + exp(b)), exact when either argument is -inf.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> values);

/// count * log(p) with the convention 0 * log(0) = 0.
inline double count_log(double count, double log_p) { return count == 0.0 ? 0.0 : count * log_p; }

/// Natural-log binary entropy; H(0) = H(1) = 0.
inline double binary_entropy(double q) {
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log1p(-q);
  return h;
}

double log_binomial_coefficient(std::int64_t n, std::int64_t k);

/// Binomial pmf P(B = j), B ~ Bin(n, p).
double binomial_pmf(std::int64_t j, std::int64_t n, double p);

/// P(B <= j), B ~ Bin(n, p); 0 for j < 0.
double binomial_cdf(std::int64_t j, std::int64_t n, double p);

/// Compensated summation.
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace gpba::numeric
