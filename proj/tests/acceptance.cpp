#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gpba/driver.hpp"
#include "gpba/estimators.hpp"
#include "gpba/harness.hpp"
#include "gpba/policies.hpp"
#include "gpba/synthetic_oracle.hpp"
#include "gpba/updating.hpp"
#include "reference.hpp"

using gpba::EstimatorKind;
using gpba::ExperimentConfig;
using gpba::PiecewiseDensity;
using gpba::PolicyKind;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %d %s: %s (%s)\n", id, name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) {
  std::printf("  INFO %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int threads() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

const gpba::ResultRow* find_aggregate(const gpba::ExperimentResult& r, const std::string& scheme) {
  for (const auto& row : r.rows) {
    if (row.aggregate && row.scheme == scheme) return &row;
  }
  return nullptr;
}

double max_density_gap(const PiecewiseDensity& a, const PiecewiseDensity& b) {
  double gap = 0.0;
  for (double x : a.knots()) {
    for (double t : {x - 1e-9, x + 1e-9}) {
      if (t > a.lo() && t < a.hi()) gap = std::max(gap, std::abs(a.density(t) - b.density(t)));
    }
  }
  return gap;
}

void exactness() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto prior = PiecewiseDensity::uniform(0, 1);
  prior = gpba::step_update(prior, 0.3, 1, 0.8);
  prior = gpba::step_update(prior, 0.8, -1, 0.65);
  double batch_gap = 0.0;
  for (int k = 1; k <= 20; ++k) {
    for (int b = 0; b <= k; ++b) {
      for (double p : {0.55, 0.7, 0.9}) {
        std::vector<int> ys(static_cast<std::size_t>(k), -1);
        std::fill_n(ys.begin(), b, 1);
        std::shuffle(ys.begin(), ys.end(), rng);
        const double x = 0.1 + 0.8 * unif(rng);
        auto seq = prior;
        for (int y : ys) seq = gpba::step_update(seq, x, y, p);
        const auto batch = gpba::batched_update(prior, x, gpba::UpdateSignal::batched(b, k, p));
        batch_gap = std::max(batch_gap, max_density_gap(seq, batch));
      }
    }
  }

  auto f = PiecewiseDensity::uniform(0, 1);
  double mass_gap = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const double x = f.quantile(0.02 + 0.96 * unif(rng));
    const std::int64_t k = 1 + static_cast<std::int64_t>(unif(rng) * 5);
    const std::int64_t b = static_cast<std::int64_t>(unif(rng) * static_cast<double>(k + 1));
    const double p = 0.5 + 0.3 * unif(rng);
    f = gpba::batched_update(f, x, gpba::UpdateSignal::batched(std::min(b, k), k, p));
    mass_gap = std::max(mass_gap, std::abs(f.total_mass() - 1.0));
  }

  double bias_gap = 0.0;
  for (int k = 3; k <= 15; ++k) {
    for (int i = 0; i <= 8; ++i) {
      const double p = 0.55 + 0.05 * i;
      bias_gap = std::max(bias_gap, std::abs(gpba::exact_bias(p, k) - ref::enumerated_bias(p, k)));
    }
  }

  double mean_gap = 0.0, norm_gap = 0.0;
  for (int k : {1, 2, 3, 5, 8, 13, 25, 50, 100}) {
    for (int j = 0; j <= k / 2; ++j) {
      mean_gap = std::max(mean_gap, std::abs(gpba::posterior_mean(j, k) - ref::posterior_mean(j, k)));
      const double z = ref::integrate([&](double p) { return gpba::posterior_pdf_unnorm(p, j, k); }, 0.5, 1.0);
      const double total =
          ref::integrate([&](double p) { return gpba::posterior_pdf_unnorm(p, j, k) / z; }, 0.5, 1.0);
      norm_gap = std::max(norm_gap, std::abs(total - 1.0));
    }
  }

  const bool ok = batch_gap <= 1e-10 && mass_gap <= 1e-12 && bias_gap <= 1e-12 && mean_gap <= 1e-6 && norm_gap <= 1e-8;
  char buf[256];
  std::snprintf(buf, sizeof buf, "batch %.2e, mass %.2e, bias %.2e, mean %.2e, norm %.2e", batch_gap, mass_gap,
                bias_gap, mean_gap, norm_gap);
  report(1, "exactness", ok, buf);
}

void tpo_hitting_times() {
  ExperimentConfig cfg;
  cfg.mode = gpba::Mode::kTpoTable;
  cfg.reps = 1000;
  cfg.seed = 2024;
  cfg.threads = threads();
  cfg.tpo_p = {0.70, 0.60, 0.55};
  cfg.tpo_alphas = {0.05, 0.40};
  const auto result = gpba::run_tpo_table(cfg);
  struct Target {
    double p, alpha, mean, tol;
  };
  bool ok = true;
  std::string detail;
  for (const Target& t : {Target{0.70, 0.05, 34, 3}, Target{0.60, 0.05, 159, 15}, Target{0.55, 0.40, 362, 40}}) {
    for (const auto& row : result.tpo_table) {
      if (std::abs(row.p - t.p) > 1e-12 || std::abs(row.alpha - t.alpha) > 1e-12) continue;
      ok = ok && std::abs(row.mean_k - t.mean) <= t.tol;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%sp=%.2f a=%.2f: %.1f", detail.empty() ? "" : ", ", t.p, t.alpha, row.mean_k);
      detail += buf;
    }
  }
  report(2, "tpo hitting times", ok && !detail.empty(), detail);
}

void known_p_convergence() {
  ExperimentConfig cfg;
  cfg.policies = {PolicyKind::kTrueIds};
  cfg.estimators = {EstimatorKind::kExact};
  cfg.batch_sizes = {250};
  cfg.budget = 20000;
  cfg.reps = 200;
  cfg.seed = 3;
  cfg.threads = threads();
  for (int i = 0; i < 10; ++i) {
    const double v = 1000.0 * std::pow(20.0, i / 9.0);
    cfg.checkpoints.push_back(static_cast<std::int64_t>(v + 1e-6) / 250 * 250);
  }
  cfg.checkpoints.back() = 20000;
  const auto result = gpba::run_experiment(cfg);

  bool monotone = true;
  std::string detail;
  const gpba::CurvePoint* prev = nullptr;
  for (const auto& c : result.curves) {
    if (prev != nullptr) {
      monotone = monotone && c.mean_residual < prev->mean_residual && c.mean_ci_len < prev->mean_ci_len;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%lld:%.5f", detail.empty() ? "" : " ", static_cast<long long>(c.checkpoint),
                  c.mean_residual);
    detail += buf;
    prev = &c;
  }
  const double final_res = result.curves.empty() ? 1.0 : result.curves.back().mean_residual;
  report(3, "known-p convergence", monotone && final_res < 0.01 && result.curves.size() == 10, detail);
  std::string ci, med;
  for (const auto& c : result.curves) {
    ci += fmt(" %.4f", c.mean_ci_len);
    med += fmt(" %.5f", c.median_residual);
  }
  info("mean ci length:" + ci);
  info("median residual:" + med);

  ExperimentConfig early = cfg;
  early.checkpoints = {250, 500, 1000};
  early.budget = 1000;
  const auto e = gpba::run_experiment(early);
  if (e.curves.size() == 3) {
    info(fmt("mean residual at 250: %.4f", e.curves[0].mean_residual) +
         fmt(", at 500: %.4f", e.curves[1].mean_residual) + fmt(", at 1000: %.4f", e.curves[2].mean_residual));
  }
}

void table_three() {
  ExperimentConfig cfg;
  cfg.policies = {PolicyKind::kDetIds, PolicyKind::kRandIds, PolicyKind::kSystQ, PolicyKind::kRandQ};
  cfg.estimators = {EstimatorKind::kBar, EstimatorKind::kClt};
  cfg.batch_sizes = {250, 500};
  cfg.budget = 20000;
  cfg.reps = 200;
  cfg.seed = 4;
  cfg.threads = threads();
  cfg.checkpoints = {20000};
  const auto result = gpba::run_experiment(cfg);

  const auto* rq = find_aggregate(result, "rand-q/clt/K250");
  const auto* sq = find_aggregate(result, "syst-q/clt/K500");
  bool ok = rq != nullptr && sq != nullptr;
  std::string detail;
  if (ok) {
    ok = rq->residual >= 0.0009 && rq->residual <= 0.0035 && std::abs(rq->covered - 0.20) <= 0.10 &&
         sq->residual >= 0.0008 && sq->residual <= 0.0033;
    detail = fmt("rand-q/clt/K250 residual %.5f", rq->residual) + fmt(" coverage %.3f", rq->covered) +
             fmt(", syst-q/clt/K500 residual %.5f", sq->residual);
  }
  for (std::int64_t k : {250, 500}) {
    int wins = 0;
    for (PolicyKind p : cfg.policies) {
      const auto* bar = find_aggregate(result, gpba::scheme_name(p, EstimatorKind::kBar, k));
      const auto* clt = find_aggregate(result, gpba::scheme_name(p, EstimatorKind::kClt, k));
      if (bar != nullptr && clt != nullptr && clt->residual < bar->residual) ++wins;
      if (bar != nullptr && clt != nullptr) {
        info(gpba::scheme_name(p, EstimatorKind::kBar, k) + fmt(" %.5f", bar->residual) + " vs clt" +
             fmt(" %.5f", clt->residual));
      }
    }
    if (k == 250) {
      ok = ok && wins >= 3;
      detail += ", clt wins " + std::to_string(wins) + "/4 at K250";
    } else {
      detail += ", " + std::to_string(wins) + "/4 at K500";
    }
  }
  report(4, "estimator comparison at T=20000", ok, detail);
}

void small_batch_collapse() {
  ExperimentConfig cfg;
  cfg.function = "h2";
  cfg.policies = {PolicyKind::kRandQ};
  cfg.estimators = {EstimatorKind::kBar, EstimatorKind::kMode, EstimatorKind::kMedian, EstimatorKind::kMean,
                    EstimatorKind::kBoost};
  cfg.batch_sizes = {50};
  cfg.budget = 20000;
  cfg.reps = 200;
  cfg.seed = 5;
  cfg.threads = threads();
  cfg.checkpoints = {20000};
  const auto result = gpba::run_experiment(cfg);
  bool ok = true;
  std::string detail;
  for (EstimatorKind e : cfg.estimators) {
    const auto* row = find_aggregate(result, gpba::scheme_name(PolicyKind::kRandQ, e, 50));
    if (row == nullptr) {
      ok = false;
      continue;
    }
    ok = ok && row->covered <= 0.05 && row->residual > 0.5 * row->ci_len;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(gpba::to_string(e)) +
              fmt(" cov %.3f", row->covered) + fmt(" res %.2e", row->residual) + fmt(" half-ci %.2e", 0.5 * row->ci_len);
  }
  report(5, "small-K collapse", ok, detail);
}

void finance() {
  ExperimentConfig cfg;
  cfg.mode = gpba::Mode::kFinance;
  cfg.policies = {PolicyKind::kRandQ};
  cfg.estimators = {EstimatorKind::kClt};
  cfg.batch_sizes = {1000};
  cfg.budget = 20000;
  cfg.reps = 100;
  cfg.seed = 6;
  cfg.threads = threads();
  cfg.checkpoints = {20000};
  const auto result = gpba::run_experiment(cfg);
  const auto* row = find_aggregate(result, "rand-q/clt/K1000");
  const bool ok = row != nullptr && row->residual <= 0.5;
  report(6, "finance self-consistency", ok,
         fmt("lattice boundary %.4f", result.root) + fmt(", mean |error| %.4f", row ? row->residual : -1.0));
}

void policy_invariants() {
  auto f = PiecewiseDensity::uniform(0, 1);
  f = gpba::step_update(f, 0.2, 1, 0.9);
  f = gpba::step_update(f, 0.7, -1, 0.75);
  f = gpba::step_update(f, 0.45, 1, 0.6);

  bool gain_ok = true;
  for (int i = 1; i < 400; ++i) {
    const double x = i / 400.0;
    gain_ok = gain_ok && std::abs(gpba::info_gain(f, x, 0.5)) <= 1e-15;
    for (int j = 1; j <= 100; ++j) gain_ok = gain_ok && gpba::info_gain(f, x, 0.5 + 0.5 * j / 100.0) > 0.0;
  }

  gpba::Rng rng(77);
  std::vector<double> draws;
  for (int i = 0; i < 100000; ++i) draws.push_back(gpba::rand_q_next(f, rng));
  const double ks = ref::ks_statistic(draws, [&](double x) { return f.cdf(x); });

  bool calls_ok = true;
  for (PolicyKind kind : {PolicyKind::kDetIds, PolicyKind::kRandIds}) {
    for (int m : {2, 3}) {
      auto oracle = gpba::make_h1(9);
      gpba::RunConfig rc;
      rc.policy.kind = kind;
      rc.policy.m_candidates = m;
      if (kind == PolicyKind::kDetIds) rc.policy.quantiles = m == 2 ? std::vector<double>{0.25, 0.75}
                                                                     : std::vector<double>{0.25, 0.5, 0.75};
      rc.estimator = EstimatorKind::kClt;
      rc.batch_k = 100;
      rc.budget_t = 2000;
      rc.seed = 12;
      const auto run = gpba::run_gpba(rc, oracle);
      std::int64_t expected = 0;
      for (const auto& t : run.trace) {
        expected += 100 * m;
        calls_ok = calls_ok && t.budget_used == expected;
      }
      calls_ok = calls_ok && oracle.calls() == expected && run.calls == expected && expected <= 2000 &&
                 2000 - expected < 100 * m;
    }
  }
  report(7, "policy invariants", gain_ok && ks <= 0.01 && calls_ok,
         std::string("info gain ") + (gain_ok ? "ok" : "bad") + fmt(", ks %.4f", ks) + ", call counting " +
             (calls_ok ? "ok" : "bad"));
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::function<void()>> all = {exactness, tpo_hitting_times, known_p_convergence, table_three,
                                            small_batch_collapse, finance, policy_invariants};
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i) + 1) == only.end()) continue;
    try {
      all[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i) + 1, "error", false, e.what());
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
