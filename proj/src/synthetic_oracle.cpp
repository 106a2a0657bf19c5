#include "gpba/synthetic_oracle.hpp"

#include <cmath>

#include "gpba/error.hpp"
#include "gpba/numeric.hpp"

namespace gpba {

SyntheticOracle::SyntheticOracle(Function mean, Function sigma, double root, double lo, double hi,
                                 std::uint64_t seed)
    : mean_(std::move(mean)), sigma_(std::move(sigma)), root_(root), lo_(lo), hi_(hi), rng_(seed) {
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidInterval, "need lo < hi");
}

std::optional<double> SyntheticOracle::accuracy(double x) const {
  const double h = std::abs(mean_(x));
  const double s = sigma_(x);
  if (s <= 0.0) return h > 0.0 ? 1.0 : 0.5;
  return numeric::normal_cdf(h / s);
}

double SyntheticOracle::draw(double x) { return mean_(x) + sigma_(x) * normal_(rng_); }

SyntheticOracle make_h1(std::uint64_t seed) {
  return {[](double x) { return kSyntheticRoot - x; }, [](double) { return 0.2; }, kSyntheticRoot, 0.0, 1.0, seed};
}

SyntheticOracle make_h2(std::uint64_t seed) {
  return {[](double x) { return std::expm1(2.0 * (kSyntheticRoot - x)); },
          [](double x) { return x < kSyntheticRoot ? 0.2 : 1.0; },
          kSyntheticRoot,
          0.0,
          1.0,
          seed};
}

SyntheticOracle make_h3(std::uint64_t seed) {
  return {[](double x) {
            const double d = kSyntheticRoot - x;
            return d * d * d;
          },
          [](double) { return 0.025; },
          kSyntheticRoot,
          0.0,
          1.0,
          seed};
}

SyntheticOracle make_constant_accuracy(double p, std::uint64_t seed) {
  if (!(p > 0.5 && p < 1.0)) throw Error(ErrorCode::kInvalidAccuracy, "constant accuracy must lie in (1/2, 1)");
  const double shift = 0.2 * numeric::normal_quantile(p);
  return {[shift](double x) {
            if (x < kSyntheticRoot) return shift;
            if (x > kSyntheticRoot) return -shift;
            return 0.0;
          },
          [](double) { return 0.2; },
          kSyntheticRoot,
          0.0,
          1.0,
          seed};
}

SyntheticOracle make_synthetic(std::string_view name, std::uint64_t seed) {
  if (name == "h1") return make_h1(seed);
  if (name == "h2") return make_h2(seed);
  if (name == "h3") return make_h3(seed);
  throw Error(ErrorCode::kConfig, "unknown test function '" + std::string(name) + "'");
}

}  // namespace gpba
