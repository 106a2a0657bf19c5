#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "gpba/oracle.hpp"

namespace gpba {

/// Z(x) = h(x) + sigma(x) * N(0, 1) with a known root.
class SyntheticOracle final : public Oracle {
 public:
  using Function = std::function<double(double)>;

  SyntheticOracle(Function mean, Function sigma, double root, double lo, double hi, std::uint64_t seed);

  double lo() const override { return lo_; }
  double hi() const override { return hi_; }
  std::optional<double> root() const override { return root_; }
  /// Phi(|h(x)| / sigma(x)).
  std::optional<double> accuracy(double x) const override;
  std::optional<double> noise_scale(double x) const override { return sigma_(x); }

  double mean(double x) const { return mean_(x); }
  double true_p(double x) const { return *accuracy(x); }

 protected:
  double draw(double x) override;

 private:
  Function mean_;
  Function sigma_;
  double root_;
  double lo_;
  double hi_;
  Rng rng_;
  std::normal_distribution<double> normal_;
};

inline constexpr double kSyntheticRoot = 1.0 / 3.0;

/// h1 = x* - x, sigma = 0.2.
SyntheticOracle make_h1(std::uint64_t seed);
/// h2 = exp(2(x* - x)) - 1, sigma = 0.2 left of x* and 1 from x* on.
SyntheticOracle make_h2(std::uint64_t seed);
/// h3 = (x* - x)^3, sigma = 0.025.
SyntheticOracle make_h3(std::uint64_t seed);
/// Step mean sign(x* - x) * sigma * Phi^{-1}(p) with sigma = 0.2, so the
/// accuracy is p everywhere except at the root.
SyntheticOracle make_constant_accuracy(double p, std::uint64_t seed);

/// By name: "h1", "h2", "h3". Throws kConfig otherwise.
SyntheticOracle make_synthetic(std::string_view name, std::uint64_t seed);

}  // namespace gpba
