#include "gpba/density.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gpba/error.hpp"
#include "gpba/numeric.hpp"

namespace gpba {

using numeric::kNegInf;

PiecewiseDensity PiecewiseDensity::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kInvalidInterval, "need lo < hi");
  }
  PiecewiseDensity f;
  f.knots_ = {lo, hi};
  f.log_heights_ = {-std::log(hi - lo)};
  f.normalize();
  return f;
}

PiecewiseDensity PiecewiseDensity::from_log_heights(std::vector<double> knots, std::vector<double> log_heights) {
  if (knots.size() < 2 || log_heights.size() + 1 != knots.size()) {
    throw Error(ErrorCode::kInvalidInterval, "need n+1 knots for n heights");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i - 1] < knots[i])) throw Error(ErrorCode::kInvalidInterval, "knots must increase strictly");
  }
  PiecewiseDensity f;
  f.knots_ = std::move(knots);
  f.log_heights_ = std::move(log_heights);
  f.normalize();
  return f;
}

std::size_t PiecewiseDensity::interval_of(double x) const {
  // Index i with knots_[i] <= x < knots_[i+1]; the last interval also owns hi.
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, interval_count() - 1);
}

void PiecewiseDensity::normalize() {
  const std::size_t n = interval_count();
  std::vector<double> log_mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_mass[i] = log_heights_[i] + std::log(knots_[i + 1] - knots_[i]);
  }
  const double log_total = numeric::log_sum_exp(log_mass);
  if (!std::isfinite(log_total)) throw Error(ErrorCode::kDegenerateUpdate, "no mass left to normalize");
  for (double& h : log_heights_) {
    if (h != kNegInf) h -= log_total;
  }
  cumulative_.assign(n + 1, 0.0);
  numeric::NeumaierSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    if (log_heights_[i] != kNegInf) acc.add(std::exp(log_mass[i] - log_total));
    cumulative_[i + 1] = std::min(1.0, acc.value());
  }
  cumulative_[n] = 1.0;
}

double PiecewiseDensity::density(double x) const {
  if (x < lo() || x > hi()) return 0.0;
  return std::exp(log_heights_[interval_of(x)]);
}

double PiecewiseDensity::cdf(double x) const {
  if (x <= lo()) return 0.0;
  if (x >= hi()) return 1.0;
  const std::size_t i = interval_of(x);
  const double h = log_heights_[i] == kNegInf ? 0.0 : std::exp(log_heights_[i]);
  return std::min(1.0, cumulative_[i] + h * (x - knots_[i]));
}

std::pair<double, double> PiecewiseDensity::log_split_masses(double x) const {
  if (x <= lo()) return {kNegInf, 0.0};
  if (x >= hi()) return {0.0, kNegInf};
  const std::size_t at = interval_of(x);
  std::vector<double> left;
  std::vector<double> right;
  for (std::size_t i = 0; i < interval_count(); ++i) {
    const double h = log_heights_[i];
    if (h == kNegInf) continue;
    if (i < at) {
      left.push_back(h + std::log(knots_[i + 1] - knots_[i]));
    } else if (i > at) {
      right.push_back(h + std::log(knots_[i + 1] - knots_[i]));
    } else {
      if (x > knots_[i]) left.push_back(h + std::log(x - knots_[i]));
      right.push_back(h + std::log(knots_[i + 1] - x));
    }
  }
  return {numeric::log_sum_exp(left), numeric::log_sum_exp(right)};
}

double PiecewiseDensity::quantile(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::kInvalidProbability, "quantile level must lie in (0, 1)");
  // First interval whose right cumulative reaches q, skipping zero-mass ones.
  auto it = std::lower_bound(cumulative_.begin() + 1, cumulative_.end(), q);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  i = std::min(i, interval_count() - 1);
  while (log_heights_[i] == kNegInf && i + 1 < interval_count()) ++i;
  const double h = std::exp(log_heights_[i]);
  const double x = knots_[i] + (q - cumulative_[i]) / h;
  return std::clamp(x, knots_[i], knots_[i + 1]);
}

CredibleInterval PiecewiseDensity::credible_interval(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidProbability, "alpha must lie in (0, 1)");
  return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

double PiecewiseDensity::total_mass() const {
  numeric::NeumaierSum acc;
  for (std::size_t i = 0; i < interval_count(); ++i) {
    if (log_heights_[i] == kNegInf) continue;
    acc.add(std::exp(log_heights_[i]) * (knots_[i + 1] - knots_[i]));
  }
  return acc.value();
}

void PiecewiseDensity::apply_split_scaling(double x, double log_right, double log_left) {
  if (!(x > lo() && x < hi())) throw Error(ErrorCode::kInvalidSplit, "split point must lie strictly inside the support");
  if (log_right == kNegInf && log_left == kNegInf) {
    throw Error(ErrorCode::kDegenerateUpdate, "both scaling factors are zero");
  }
  auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
  std::size_t split = static_cast<std::size_t>(it - knots_.begin());
  if (*it != x) {
    const std::size_t i = split - 1;
    knots_.insert(it, x);
    log_heights_.insert(log_heights_.begin() + static_cast<std::ptrdiff_t>(i) + 1, log_heights_[i]);
  }
  // Intervals [0, split) lie left of x, the rest right of it.
  std::vector<double> saved = log_heights_;
  for (std::size_t i = 0; i < log_heights_.size(); ++i) {
    const double add = i < split ? log_left : log_right;
    if (log_heights_[i] == kNegInf) continue;
    log_heights_[i] = add == kNegInf ? kNegInf : log_heights_[i] + add;
  }
  try {
    normalize();
  } catch (const Error&) {
    log_heights_ = std::move(saved);
    normalize();
    throw;
  }
}

std::string PiecewiseDensity::serialize() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << interval_count();
  for (double k : knots_) out << ' ' << k;
  out << " |";
  for (double h : log_heights_) {
    out << ' ';
    if (h == kNegInf) {
      out << "-inf";
    } else {
      out << h;
    }
  }
  return out.str();
}

PiecewiseDensity PiecewiseDensity::deserialize(const std::string& record) {
  std::istringstream in(record);
  std::size_t n = 0;
  if (!(in >> n) || n == 0) throw Error(ErrorCode::kParse, "bad interval count");
  std::vector<double> knots(n + 1);
  for (double& k : knots) {
    if (!(in >> k)) throw Error(ErrorCode::kParse, "bad knot value");
  }
  std::string bar;
  if (!(in >> bar) || bar != "|") throw Error(ErrorCode::kParse, "missing separator");
  std::vector<double> heights(n);
  for (double& h : heights) {
    std::string token;
    if (!(in >> token)) throw Error(ErrorCode::kParse, "bad height value");
    if (token == "-inf") {
      h = kNegInf;
    } else {
      try {
        std::size_t used = 0;
        h = std::stod(token, &used);
        if (used != token.size()) throw Error(ErrorCode::kParse, "bad height value");
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::kParse, "bad height value");
      }
    }
  }
  return from_log_heights(std::move(knots), std::move(heights));
}

PiecewiseDensity apply_split_scaling(PiecewiseDensity f, double x, double log_right, double log_left) {
  f.apply_split_scaling(x, log_right, log_left);
  return f;
}

}  // namespace gpba
