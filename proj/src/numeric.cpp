#include "gpba/numeric.hpp"

#include <algorithm>

#include <boost/math/distributions/normal.hpp>

namespace gpba::numeric {

double normal_quantile(double q) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), q);
}

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  NeumaierSum acc;
  for (double v : values) acc.add(std::exp(v - m));
  return m + std::log(acc.value());
}

double log_binomial_coefficient(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double binomial_pmf(std::int64_t j, std::int64_t n, double p) {
  if (j < 0 || j > n) return 0.0;
  const double log_pmf = log_binomial_coefficient(n, j) + count_log(static_cast<double>(j), std::log(p)) +
                         count_log(static_cast<double>(n - j), std::log1p(-p));
  return std::exp(log_pmf);
}

double binomial_cdf(std::int64_t j, std::int64_t n, double p) {
  if (j < 0) return 0.0;
  if (j >= n) return 1.0;
  NeumaierSum acc;
  for (std::int64_t i = 0; i <= j; ++i) acc.add(binomial_pmf(i, n, p));
  return std::min(1.0, acc.value());
}

}  // namespace gpba::numeric
