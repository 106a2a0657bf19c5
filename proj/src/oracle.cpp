#include "gpba/oracle.hpp"

#include "gpba/error.hpp"

namespace gpba {

CallbackOracle::CallbackOracle(Sampler sampler, Options options, std::uint64_t seed)
    : sampler_(std::move(sampler)), options_(std::move(options)), rng_(seed) {
  if (!sampler_) throw Error(ErrorCode::kConfig, "callback oracle needs a sampler");
  if (!(options_.lo < options_.hi)) throw Error(ErrorCode::kInvalidInterval, "need lo < hi");
}

std::optional<double> CallbackOracle::accuracy(double x) const {
  if (!options_.accuracy) return std::nullopt;
  return options_.accuracy(x);
}

std::optional<double> CallbackOracle::noise_scale(double x) const {
  if (!options_.noise_scale) return std::nullopt;
  return options_.noise_scale(x);
}

BatchStats query_batch(Oracle& oracle, double x, std::int64_t k) { return preaveraged_batch(oracle, x, k, 1); }

BatchStats preaveraged_batch(Oracle& oracle, double x, std::int64_t k, std::int64_t a) {
  if (k < 1) throw Error(ErrorCode::kInvalidCount, "batch size must be positive");
  if (a < 1 || k % a != 0) throw Error(ErrorCode::kConfig, "pre-averaging size must divide the batch size");
  BatchStats stats;
  stats.k = k / a;
  stats.calls = k;
  stats.has_functional = oracle.exposes_functional();
  for (std::int64_t g = 0; g < stats.k; ++g) {
    double group = 0.0;
    for (std::int64_t i = 0; i < a; ++i) {
      const double z = oracle.sample(x);
      group += z;
      stats.sum_z += z;
      stats.sum_z_sq += z * z;
    }
    if (group > 0.0) ++stats.b_k;
  }
  return stats;
}

}  // namespace gpba
