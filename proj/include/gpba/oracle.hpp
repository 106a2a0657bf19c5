#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

#include "gpba/estimators.hpp"
#include "gpba/rng.hpp"

namespace gpba {

/// A stochastic simulator Z(x) on a bounded domain.
///
/// Responses follow one sign convention throughout the library: Z > 0 is
/// evidence that the root lies to the right of x. Each instance owns its RNG
/// and counts every raw draw, so budget accounting can be checked exactly.
class Oracle {
 public:
  virtual ~Oracle() = default;

  /// One raw response. Counts towards `calls()`.
  double sample(double x) {
    ++calls_;
    return draw(x);
  }

  std::int64_t calls() const { return calls_; }
  void reset_calls() { calls_ = 0; }

  virtual double lo() const = 0;
  virtual double hi() const = 0;

  /// The true root when it is known.
  virtual std::optional<double> root() const = 0;
  /// True probability of a correct sign at x, when it is known.
  virtual std::optional<double> accuracy(double x) const = 0;
  /// Noise standard deviation at x, when it is known.
  virtual std::optional<double> noise_scale(double x) const = 0;
  /// False for oracles that only return signs (+1 / -1).
  virtual bool exposes_functional() const { return true; }

 protected:
  virtual double draw(double x) = 0;

 private:
  std::int64_t calls_ = 0;
};

/// Oracle built from a user callback. The callback receives the instance's
/// RNG; a sign-only callback should return +1 or -1.
class CallbackOracle final : public Oracle {
 public:
  using Sampler = std::function<double(double, Rng&)>;

  struct Options {
    double lo = 0.0;
    double hi = 1.0;
    bool functional = true;
    std::optional<double> root;
    std::function<double(double)> accuracy;
    std::function<double(double)> noise_scale;
  };

  CallbackOracle(Sampler sampler, Options options, std::uint64_t seed);

  double lo() const override { return options_.lo; }
  double hi() const override { return options_.hi; }
  std::optional<double> root() const override { return options_.root; }
  std::optional<double> accuracy(double x) const override;
  std::optional<double> noise_scale(double x) const override;
  bool exposes_functional() const override { return options_.functional; }

 protected:
  double draw(double x) override { return sampler_(x, rng_); }

 private:
  Sampler sampler_;
  Options options_;
  Rng rng_;
};

/// k raw draws at x.
BatchStats query_batch(Oracle& oracle, double x, std::int64_t k);

/// k raw draws at x grouped into k/a pre-averaged signs. The functional sums
/// still cover all k draws. Throws kConfig unless a divides k.
BatchStats preaveraged_batch(Oracle& oracle, double x, std::int64_t k, std::int64_t a);

}  // namespace gpba
