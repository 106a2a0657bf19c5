#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gpba {

struct CredibleInterval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Normalized piecewise-constant probability density on [lo, hi].
///
/// Heights are stored as natural logs so that repeated multiplicative
/// scalings (factors like 0.6^500) never underflow; a zero-mass interval has
/// log-height -inf and is kept in place rather than trimmed from the support.
/// Knots are the past split points plus both endpoints. Adjacent intervals
/// with equal heights are never merged.
class PiecewiseDensity {
 public:
  /// Unif(lo, hi). Throws kInvalidInterval unless lo < hi.
  static PiecewiseDensity uniform(double lo, double hi);

  /// Builds a density from explicit knots and (possibly unnormalized) log
  /// heights; the result is renormalized.
  static PiecewiseDensity from_log_heights(std::vector<double> knots, std::vector<double> log_heights);

  double lo() const { return knots_.front(); }
  double hi() const { return knots_.back(); }
  double width() const { return hi() - lo(); }

  std::span<const double> knots() const { return knots_; }
  std::span<const double> log_heights() const { return log_heights_; }
  std::size_t interval_count() const { return log_heights_.size(); }

  /// Density value at x; right-continuous at knots, 0 outside the support.
  double density(double x) const;

  /// F(x). Clamped to 0 below the support and 1 above it.
  double cdf(double x) const;

  /// (log F(x), log(1 - F(x))) summed from interval log masses, so both
  /// stay accurate when one side holds a vanishing share of the mass.
  std::pair<double, double> log_split_masses(double x) const;

  /// Smallest x with F(x) >= q. Throws kInvalidProbability unless 0 < q < 1.
  double quantile(double q) const;

  double median() const { return quantile(0.5); }

  /// (F^{-1}(alpha/2), F^{-1}(1 - alpha/2)).
  CredibleInterval credible_interval(double alpha) const;

  /// Sum of height * width, recomputed from the stored heights.
  double total_mass() const;

  /// Inserts a knot at x, adds log_right to every interval right of x and
  /// log_left to every interval left of it, then renormalizes.
  /// Throws kInvalidSplit unless lo < x < hi and kDegenerateUpdate if no
  /// mass survives the scaling.
  void apply_split_scaling(double x, double log_right, double log_left);

  /// Plain-text record: "n lo k1 ... hi | h0 ... h{n-1}" with log heights,
  /// all values printed with 17 significant digits.
  std::string serialize() const;
  static PiecewiseDensity deserialize(const std::string& record);

 private:
  PiecewiseDensity() = default;

  std::size_t interval_of(double x) const;
  void normalize();

  std::vector<double> knots_;
  std::vector<double> log_heights_;
  // cumulative_[i] = F(knots_[i]); size knots_.size().
  std::vector<double> cumulative_;
};

/// Value-returning form of PiecewiseDensity::apply_split_scaling.
PiecewiseDensity apply_split_scaling(PiecewiseDensity f, double x, double log_right, double log_left);

}  // namespace gpba
