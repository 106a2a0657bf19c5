#include "gpba/bermudan_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "gpba/error.hpp"

namespace gpba {

BoundaryTable lattice_boundary(double strike, double rate, double vol, double maturity, int n_dates, int n_steps) {
  if (n_dates < 1 || n_steps < n_dates || n_steps % n_dates != 0) {
    throw Error(ErrorCode::kConfig, "lattice steps must be a positive multiple of the exercise dates");
  }
  if (!(vol > 0.0) || !(maturity > 0.0) || !(strike > 0.0)) {
    throw Error(ErrorCode::kConfig, "strike, volatility and maturity must be positive");
  }
  const double dt = maturity / n_steps;
  const double u = std::exp(vol * std::sqrt(dt));
  const double d = 1.0 / u;
  const double q = (std::exp(rate * dt) - d) / (u - d);
  const double disc = std::exp(-rate * dt);
  const double s0 = strike;
  const int per_date = n_steps / n_dates;
  auto price = [&](int step, int ups) { return s0 * std::pow(u, 2 * ups - step); };

  BoundaryTable table;
  table.times.resize(static_cast<std::size_t>(n_dates) + 1);
  table.boundary.assign(static_cast<std::size_t>(n_dates) + 1, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i <= n_dates; ++i) table.times[static_cast<std::size_t>(i)] = maturity * i / n_dates;
  table.boundary[static_cast<std::size_t>(n_dates)] = strike;

  std::vector<double> value(static_cast<std::size_t>(n_steps) + 1);
  for (int j = 0; j <= n_steps; ++j) value[static_cast<std::size_t>(j)] = std::max(strike - price(n_steps, j), 0.0);
  std::vector<double> gap;
  for (int step = n_steps - 1; step >= 0; --step) {
    for (int j = 0; j <= step; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      value[uj] = disc * (q * value[uj + 1] + (1.0 - q) * value[uj]);
    }
    if (step == 0 || step % per_date != 0) continue;
    const int date = step / per_date;
    gap.assign(static_cast<std::size_t>(step) + 1, 0.0);
    int top = -1;
    for (int j = 0; j <= step; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double exercise = strike - price(step, j);
      gap[uj] = exercise - value[uj];
      if (exercise > 0.0 && gap[uj] >= 0.0) top = j;
      value[uj] = std::max(value[uj], exercise);
    }
    if (top < 0) continue;
    double b = price(step, top);
    if (top < step) {
      const double s_lo = price(step, top);
      const double s_hi = price(step, top + 1);
      const double g_lo = gap[static_cast<std::size_t>(top)];
      const double g_hi = gap[static_cast<std::size_t>(top) + 1];
      if (g_lo - g_hi > 0.0) b = s_lo + (s_hi - s_lo) * g_lo / (g_lo - g_hi);
    }
    table.boundary[static_cast<std::size_t>(date)] = std::min(b, strike);
  }
  return table;
}

BoundaryTable lattice_boundary(const BermudanParams& p) {
  return lattice_boundary(p.strike, p.rate, p.volatility, p.maturity, p.n_dates, p.lattice_steps);
}

void write_boundary_csv(const BoundaryTable& table, std::ostream& out) {
  out << "date,time,boundary\n" << std::setprecision(17);
  for (std::size_t i = 1; i < table.boundary.size(); ++i) {
    out << i << ',' << table.times[i] << ',' << table.boundary[i] << '\n';
  }
}

BermudanPutOracle::BermudanPutOracle(BermudanParams params, std::shared_ptr<const BoundaryTable> table,
                                     std::uint64_t seed)
    : params_(params), table_(std::move(table)), rng_(seed) {
  if (!table_) throw Error(ErrorCode::kConfig, "missing boundary table");
  if (params_.eval_index < 0 || params_.eval_index >= params_.n_dates ||
      table_->boundary.size() != static_cast<std::size_t>(params_.n_dates) + 1) {
    throw Error(ErrorCode::kConfig, "evaluation date does not match the boundary table");
  }
}

double BermudanPutOracle::draw(double x) {
  if (!(x >= params_.lo && x <= params_.hi)) throw Error(ErrorCode::kDomain, "asset level outside the domain");
  const double k = params_.strike;
  const double r = params_.rate;
  const double dt = params_.maturity / params_.n_dates;
  const double drift = (r - 0.5 * params_.volatility * params_.volatility) * dt;
  const double vol = params_.volatility * std::sqrt(dt);
  double s = x;
  double tau = params_.maturity;
  for (int i = params_.eval_index + 1; i <= params_.n_dates; ++i) {
    s *= std::exp(drift + vol * normal_(rng_));
    const double b = table_->boundary[static_cast<std::size_t>(i)];
    if (i == params_.n_dates || (!std::isnan(b) && s <= b)) {
      tau = params_.date(i);
      break;
    }
  }
  const double t = params_.date(params_.eval_index);
  const double raw = std::exp(-r * tau) * std::max(k - s, 0.0) - std::exp(-r * t) * std::max(k - x, 0.0);
  return -raw;
}

}  // namespace gpba
