#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <vector>

#include "gpba/oracle.hpp"

namespace gpba {

struct BermudanParams {
  double strike = 40.0;
  double rate = 0.06;
  double maturity = 1.0;
  double volatility = 0.2;
  int n_dates = 50;
  int eval_index = 30;
  int lattice_steps = 5000;
  double lo = 25.0;
  double hi = 40.0;

  double date(int i) const { return maturity * i / n_dates; }
};

/// Exercise thresholds at dates 1..n_dates (index 0 is t = 0 and unused).
/// Entries are NaN where no lattice node is exercised.
struct BoundaryTable {
  std::vector<double> times;
  std::vector<double> boundary;
};

/// Cox-Ross-Rubinstein lattice with exercise allowed only at the dates.
/// Per date the boundary is the highest node where exercise is optimal,
/// refined by linear interpolation of (exercise - continuation) towards the
/// next node up. Throws kConfig unless n_steps is a multiple of n_dates.
BoundaryTable lattice_boundary(double strike, double rate, double vol, double maturity, int n_dates, int n_steps);
BoundaryTable lattice_boundary(const BermudanParams& params);

void write_boundary_csv(const BoundaryTable& table, std::ostream& out);

/// Timing-value oracle of a Bermudan put at the evaluation date, sign
/// flipped so that positive responses point to a higher boundary.
class BermudanPutOracle final : public Oracle {
 public:
  BermudanPutOracle(BermudanParams params, std::shared_ptr<const BoundaryTable> table, std::uint64_t seed);

  double lo() const override { return params_.lo; }
  double hi() const override { return params_.hi; }
  /// Lattice boundary at the evaluation date.
  std::optional<double> root() const override { return table_->boundary[params_.eval_index]; }
  std::optional<double> accuracy(double) const override { return std::nullopt; }
  std::optional<double> noise_scale(double) const override { return std::nullopt; }

  const BermudanParams& params() const { return params_; }
  const BoundaryTable& table() const { return *table_; }

 protected:
  double draw(double x) override;

 private:
  BermudanParams params_;
  std::shared_ptr<const BoundaryTable> table_;
  Rng rng_;
  std::normal_distribution<double> normal_;
};

}  // namespace gpba
