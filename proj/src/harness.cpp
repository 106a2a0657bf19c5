#include "gpba/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "gpba/error.hpp"
#include "gpba/numeric.hpp"
#include "gpba/synthetic_oracle.hpp"

namespace gpba {

using nlohmann::json;

namespace {

struct Scheme {
  PolicyKind policy;
  EstimatorKind estimator;
  std::int64_t k;
};

struct RepOutcome {
  std::vector<MetricsRecord> metrics;
  MetricsRecord final;
};

std::vector<Scheme> schemes_of(const ExperimentConfig& cfg) {
  std::vector<Scheme> out;
  for (PolicyKind p : cfg.policies) {
    for (EstimatorKind e : cfg.estimators) {
      for (std::int64_t k : cfg.batch_sizes) out.push_back({p, e, k});
    }
  }
  return out;
}

RunConfig run_config(const ExperimentConfig& cfg, const Scheme& s) {
  RunConfig rc;
  rc.policy = cfg.policy_params;
  rc.policy.kind = s.policy;
  rc.estimator = s.estimator;
  rc.batch_k = s.k;
  rc.budget_t = cfg.budget;
  rc.preavg_a = cfg.preavg_a;
  rc.alpha_ci = cfg.alpha_ci;
  rc.checkpoints = cfg.checkpoints.empty() ? default_checkpoints(cfg.budget, s.k * rc.policy.candidate_count())
                                           : cfg.checkpoints;
  return rc;
}

int thread_count(const ExperimentConfig& cfg, std::size_t jobs) {
  int n = cfg.threads;
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i in [0, count) on a pool; the first exception is rethrown
// after all workers have joined.
template <typename Job>
void parallel_for(std::size_t count, int threads, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  numeric::NeumaierSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Per-rep rows, an aggregate row and learning curves for one scheme.
void summarize(const ExperimentConfig& cfg, const Scheme& s, const std::vector<RepOutcome>& reps,
               ExperimentResult& out) {
  const std::string name = scheme_name(s.policy, s.estimator, s.k);
  std::vector<ResultRow> rows;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const MetricsRecord& m = reps[r].final;
    rows.push_back({name, std::string(to_string(s.policy)), std::string(to_string(s.estimator)), s.k, cfg.budget,
                    static_cast<std::int64_t>(r), false, static_cast<double>(m.budget_used), m.root_estimate,
                    m.residual, m.ci_length, m.covered ? 1.0 : 0.0});
  }
  ResultRow agg = aggregate_rows(rows);
  if (rows.empty()) agg = {name, std::string(to_string(s.policy)), std::string(to_string(s.estimator)), s.k,
                           cfg.budget, 0, true};
  out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  out.rows.push_back(agg);

  if (reps.empty()) return;
  const std::size_t n_cp = reps.front().metrics.size();
  for (std::size_t c = 0; c < n_cp; ++c) {
    std::vector<double> r_c, l_c, cov_c, n_c;
    for (const RepOutcome& rep : reps) {
      const MetricsRecord& m = rep.metrics[c];
      r_c.push_back(m.residual);
      l_c.push_back(m.ci_length);
      cov_c.push_back(m.covered ? 1.0 : 0.0);
      n_c.push_back(static_cast<double>(m.n_macro));
    }
    out.curves.push_back({name, reps.front().metrics[c].checkpoint, mean_of(r_c), median_of(r_c), mean_of(l_c),
                          mean_of(cov_c), mean_of(n_c)});
  }
}

std::shared_ptr<const BoundaryTable> finance_table(const ExperimentConfig& cfg) {
  if (cfg.mode != Mode::kFinance) return nullptr;
  return std::make_shared<const BoundaryTable>(lattice_boundary(cfg.finance));
}

double ground_truth(const ExperimentConfig& cfg, const std::shared_ptr<const BoundaryTable>& table) {
  if (table) return table->boundary[static_cast<std::size_t>(cfg.finance.eval_index)];
  return kSyntheticRoot;
}

// ---- config parsing ----

template <typename T>
std::vector<T> as_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    std::stringstream ss(item);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      if (!piece.empty()) out.push_back(piece);
    }
  }
  return out;
}

json parse_number_list(const std::vector<std::string>& items, bool integer) {
  json out = json::array();
  for (const std::string& s : split_list(items)) {
    try {
      std::size_t used = 0;
      if (integer) {
        out.push_back(std::stoll(s, &used));
      } else {
        out.push_back(std::stod(s, &used));
      }
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "not a number: '" + s + "'");
    }
  }
  return out;
}

const std::set<std::string> kTopKeys = {
    "policies", "estimators", "batch_sizes", "budget",  "function", "const_p",    "reps",        "seed",
    "threads",  "preavg_a",   "alpha_ci",    "checkpoints", "quantiles", "m_candidates", "tpo_alpha", "grid_size",
    "output_dir", "csv",      "json",        "curves",  "finance",  "tpo_p",      "tpo_alphas",  "mode"};
const std::set<std::string> kFinanceKeys = {"strike", "rate",          "maturity", "volatility", "n_dates",
                                            "eval_index", "lattice_steps", "lo",   "hi"};

}  // namespace

ResultRow aggregate_rows(const std::vector<ResultRow>& rows) {
  ResultRow agg;
  if (rows.empty()) return agg;
  agg = rows.front();
  agg.aggregate = true;
  agg.rep = static_cast<std::int64_t>(rows.size());
  std::vector<double> used, root, res, ci, cov;
  for (const ResultRow& r : rows) {
    used.push_back(r.budget_used);
    root.push_back(r.root_est);
    res.push_back(r.residual);
    ci.push_back(r.ci_len);
    cov.push_back(r.covered);
  }
  agg.budget_used = mean_of(used);
  agg.root_est = mean_of(root);
  agg.residual = mean_of(res);
  agg.ci_len = mean_of(ci);
  agg.covered = mean_of(cov);
  return agg;
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kSynthetic: return "synthetic";
    case Mode::kFinance: return "finance";
    case Mode::kTpoTable: return "tpo-table";
    case Mode::kDesignQuality: return "design-quality";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::kSynthetic, Mode::kFinance, Mode::kTpoTable, Mode::kDesignQuality}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::kParse, "unknown mode '" + std::string(name) + "'");
}

std::string scheme_name(PolicyKind policy, EstimatorKind estimator, std::int64_t k) {
  return std::string(to_string(policy)) + "/" + std::string(to_string(estimator)) + "/K" + std::to_string(k);
}

std::vector<std::int64_t> default_checkpoints(std::int64_t budget, std::int64_t step) {
  if (step < 1 || budget < step) return {budget};
  std::vector<std::int64_t> out;
  constexpr int kPoints = 10;
  const double lo = std::log(static_cast<double>(step));
  const double hi = std::log(static_cast<double>(budget));
  for (int i = 0; i < kPoints; ++i) {
    const double v = std::exp(lo + (hi - lo) * i / (kPoints - 1));
    std::int64_t c = static_cast<std::int64_t>(std::llround(v));
    if (i == kPoints - 1) c = budget;
    c = std::max(step, c / step * step);
    if (out.empty() || out.back() != c) out.push_back(c);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (reps < 1) throw Error(ErrorCode::kConfig, "reps must be at least 1");
  if (mode == Mode::kTpoTable) {
    if (tpo_p.empty() || tpo_alphas.empty()) throw Error(ErrorCode::kConfig, "tpo table grid is empty");
    for (double p : tpo_p) {
      if (!(p > 0.5 && p < 1.0)) throw Error(ErrorCode::kConfig, "tpo table accuracies must lie in (1/2, 1)");
    }
    for (double a : tpo_alphas) {
      if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::kConfig, "tpo table alphas must lie in (0, 1)");
    }
    return;
  }
  if (policies.empty() || estimators.empty() || batch_sizes.empty()) {
    throw Error(ErrorCode::kConfig, "scheme grid is empty");
  }
  if (budget < 1) throw Error(ErrorCode::kConfig, "budget must be positive");
  if (mode == Mode::kDesignQuality && function != "h1" && function != "h2" && function != "h3" &&
      function != "const") {
    throw Error(ErrorCode::kConfig, "design quality needs a synthetic oracle");
  }
  // Probe every scheme against a representative oracle.
  ExperimentConfig probe = *this;
  probe.finance.lattice_steps = finance.n_dates;
  const auto table = mode == Mode::kFinance ? std::make_shared<const BoundaryTable>(lattice_boundary(probe.finance))
                                            : nullptr;
  std::unique_ptr<Oracle> oracle = make_oracle(*this, 0, table);
  for (const Scheme& s : schemes_of(*this)) run_config(*this, s).validate(*oracle);
  if (mode == Mode::kFinance && finance.lattice_steps % finance.n_dates != 0) {
    throw Error(ErrorCode::kConfig, "lattice steps must be a multiple of the exercise dates");
  }
}

std::unique_ptr<Oracle> make_oracle(const ExperimentConfig& cfg, std::uint64_t seed,
                                    std::shared_ptr<const BoundaryTable> table) {
  if (cfg.mode == Mode::kFinance) {
    if (!table) table = std::make_shared<const BoundaryTable>(lattice_boundary(cfg.finance));
    return std::make_unique<BermudanPutOracle>(cfg.finance, std::move(table), seed);
  }
  if (cfg.function == "const") return std::make_unique<SyntheticOracle>(make_constant_accuracy(cfg.const_p, seed));
  return std::make_unique<SyntheticOracle>(make_synthetic(cfg.function, seed));
}

ExperimentConfig config_from_json(const json& j, Mode mode) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kTopKeys.count(key)) throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
  }
  ExperimentConfig cfg;
  cfg.mode = mode;
  if (const char* dir = std::getenv("GPBA_OUTPUT_DIR"); dir != nullptr && *dir != '\0') cfg.output_dir = dir;
  const bool needs_grid = mode != Mode::kTpoTable;
  auto require = [&](const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::kParse, std::string("missing required field '") + key + "'");
  };
  try {
    if (needs_grid) {
      require("budget");
      require("policies");
      require("estimators");
      require("batch_sizes");
    }
    if (j.contains("policies")) {
      for (const auto& name : as_list<std::string>(j.at("policies"))) cfg.policies.push_back(parse_policy(name));
    }
    if (j.contains("estimators")) {
      for (const auto& name : as_list<std::string>(j.at("estimators"))) {
        cfg.estimators.push_back(parse_estimator(name));
      }
    }
    if (j.contains("batch_sizes")) cfg.batch_sizes = as_list<std::int64_t>(j.at("batch_sizes"));
    if (j.contains("budget")) cfg.budget = j.at("budget").get<std::int64_t>();
    if (j.contains("function")) cfg.function = j.at("function").get<std::string>();
    if (j.contains("const_p")) cfg.const_p = j.at("const_p").get<double>();
    if (j.contains("reps")) cfg.reps = j.at("reps").get<std::int64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("preavg_a")) cfg.preavg_a = j.at("preavg_a").get<std::int64_t>();
    if (j.contains("alpha_ci")) cfg.alpha_ci = j.at("alpha_ci").get<double>();
    if (j.contains("checkpoints")) cfg.checkpoints = as_list<std::int64_t>(j.at("checkpoints"));
    if (j.contains("quantiles")) cfg.policy_params.quantiles = as_list<double>(j.at("quantiles"));
    if (j.contains("m_candidates")) cfg.policy_params.m_candidates = j.at("m_candidates").get<int>();
    if (j.contains("tpo_alpha")) cfg.policy_params.tpo_alpha = j.at("tpo_alpha").get<double>();
    if (j.contains("grid_size")) cfg.policy_params.grid_size = j.at("grid_size").get<int>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("csv")) cfg.csv_path = j.at("csv").get<std::string>();
    if (j.contains("json")) cfg.json_path = j.at("json").get<std::string>();
    if (j.contains("curves")) cfg.curves_path = j.at("curves").get<std::string>();
    if (j.contains("tpo_p")) cfg.tpo_p = as_list<double>(j.at("tpo_p"));
    if (j.contains("tpo_alphas")) cfg.tpo_alphas = as_list<double>(j.at("tpo_alphas"));
    if (j.contains("finance")) {
      const json& f = j.at("finance");
      if (!f.is_object()) throw Error(ErrorCode::kParse, "'finance' must be an object");
      for (const auto& [key, value] : f.items()) {
        if (!kFinanceKeys.count(key)) throw Error(ErrorCode::kParse, "unknown config key 'finance." + key + "'");
      }
      BermudanParams& b = cfg.finance;
      if (f.contains("strike")) b.strike = f.at("strike").get<double>();
      if (f.contains("rate")) b.rate = f.at("rate").get<double>();
      if (f.contains("maturity")) b.maturity = f.at("maturity").get<double>();
      if (f.contains("volatility")) b.volatility = f.at("volatility").get<double>();
      if (f.contains("n_dates")) b.n_dates = f.at("n_dates").get<int>();
      if (f.contains("eval_index")) b.eval_index = f.at("eval_index").get<int>();
      if (f.contains("lattice_steps")) b.lattice_steps = f.at("lattice_steps").get<int>();
      if (f.contains("lo")) b.lo = f.at("lo").get<double>();
      if (f.contains("hi")) b.hi = f.at("hi").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
  if (args.empty()) throw Error(ErrorCode::kParse, "missing mode (synthetic, finance, tpo-table, design-quality)");
  const Mode mode = parse_mode(args.front());

  CLI::App app{"gpba"};
  std::string config_path;
  std::vector<std::string> policies, estimators, batches, checkpoints, quantiles, tpo_p, tpo_alphas;
  std::int64_t budget = 0, reps = 0, preavg = 0;
  std::uint64_t seed = 0;
  int threads = 0, m = 0, grid = 0, dates = 0, eval_index = 0, lattice_steps = 0;
  double alpha_ci = 0, tpo_alpha = 0, const_p = 0, vol = 0;
  std::string func, output_dir, csv, json_out, curves;

  app.add_option("--config", config_path);
  auto* o_policy = app.add_option("--policy,--policies", policies)->delimiter(',');
  auto* o_est = app.add_option("--estimator,--estimators", estimators)->delimiter(',');
  auto* o_batch = app.add_option("--batch,--batch-sizes", batches)->delimiter(',');
  auto* o_budget = app.add_option("--budget", budget);
  auto* o_func = app.add_option("--func,--function", func);
  auto* o_reps = app.add_option("--reps", reps);
  auto* o_seed = app.add_option("--seed", seed);
  auto* o_threads = app.add_option("--threads", threads);
  auto* o_preavg = app.add_option("--preavg", preavg);
  auto* o_alpha_ci = app.add_option("--alpha-ci", alpha_ci);
  auto* o_cps = app.add_option("--checkpoints", checkpoints)->delimiter(',');
  auto* o_quant = app.add_option("--quantiles", quantiles)->delimiter(',');
  auto* o_m = app.add_option("--m", m);
  auto* o_tpo_alpha = app.add_option("--tpo-alpha", tpo_alpha);
  auto* o_grid = app.add_option("--grid", grid);
  auto* o_const_p = app.add_option("--const-p", const_p);
  auto* o_out = app.add_option("--output-dir", output_dir);
  auto* o_csv = app.add_option("--csv", csv);
  auto* o_json = app.add_option("--json", json_out);
  auto* o_curves = app.add_option("--curves", curves);
  auto* o_vol = app.add_option("--vol", vol);
  auto* o_dates = app.add_option("--dates", dates);
  auto* o_eval = app.add_option("--eval-index", eval_index);
  auto* o_steps = app.add_option("--lattice-steps", lattice_steps);
  auto* o_tpo_p = app.add_option("--tpo-p", tpo_p)->delimiter(',');
  auto* o_tpo_alphas = app.add_option("--tpo-alphas", tpo_alphas)->delimiter(',');

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::kParse, e.what());
  }

  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::kParse, "cannot open config file '" + config_path + "'");
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("config file: ") + e.what());
    }
  }
  if (o_policy->count()) j["policies"] = split_list(policies);
  if (o_est->count()) j["estimators"] = split_list(estimators);
  if (o_batch->count()) j["batch_sizes"] = parse_number_list(batches, true);
  if (o_budget->count()) j["budget"] = budget;
  if (o_func->count()) j["function"] = func;
  if (o_reps->count()) j["reps"] = reps;
  if (o_seed->count()) j["seed"] = seed;
  if (o_threads->count()) j["threads"] = threads;
  if (o_preavg->count()) j["preavg_a"] = preavg;
  if (o_alpha_ci->count()) j["alpha_ci"] = alpha_ci;
  if (o_cps->count()) j["checkpoints"] = parse_number_list(checkpoints, true);
  if (o_quant->count()) j["quantiles"] = parse_number_list(quantiles, false);
  if (o_m->count()) j["m_candidates"] = m;
  if (o_tpo_alpha->count()) j["tpo_alpha"] = tpo_alpha;
  if (o_grid->count()) j["grid_size"] = grid;
  if (o_const_p->count()) j["const_p"] = const_p;
  if (o_out->count()) j["output_dir"] = output_dir;
  if (o_csv->count()) j["csv"] = csv;
  if (o_json->count()) j["json"] = json_out;
  if (o_curves->count()) j["curves"] = curves;
  if (o_tpo_p->count()) j["tpo_p"] = parse_number_list(tpo_p, false);
  if (o_tpo_alphas->count()) j["tpo_alphas"] = parse_number_list(tpo_alphas, false);
  if (o_vol->count() || o_dates->count() || o_eval->count() || o_steps->count()) {
    json& f = j["finance"];
    if (f.is_null()) f = json::object();
    if (o_vol->count()) f["volatility"] = vol;
    if (o_dates->count()) f["n_dates"] = dates;
    if (o_eval->count()) f["eval_index"] = eval_index;
    if (o_steps->count()) f["lattice_steps"] = lattice_steps;
  }
  j.erase("mode");
  return config_from_json(j, mode);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto table = finance_table(cfg);
  const std::vector<Scheme> schemes = schemes_of(cfg);
  const auto reps = static_cast<std::size_t>(cfg.reps);
  std::vector<RepOutcome> outcomes(schemes.size() * reps);
  const double root = ground_truth(cfg, table);

  parallel_for(outcomes.size(), thread_count(cfg, outcomes.size()), [&](std::size_t i) {
    const Scheme& s = schemes[i / reps];
    const std::uint64_t run_seed = replication_seed(cfg.seed, i % reps);
    RunConfig rc = run_config(cfg, s);
    rc.seed = run_seed;
    std::unique_ptr<Oracle> oracle = make_oracle(cfg, stream_seed(run_seed, Stream::kOracle), table);
    RunResult r = run_gpba(rc, *oracle);
    RepOutcome& out = outcomes[i];
    out.metrics = std::move(r.metrics);
    out.final = metrics_snapshot(r.density, root, cfg.alpha_ci);
    out.final.budget_used = r.calls;
    out.final.n_macro = static_cast<std::int64_t>(r.trace.size());
  });

  ExperimentResult result;
  result.root = root;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    std::vector<RepOutcome> block(outcomes.begin() + static_cast<std::ptrdiff_t>(s * reps),
                                  outcomes.begin() + static_cast<std::ptrdiff_t>((s + 1) * reps));
    summarize(cfg, schemes[s], block, result);
  }
  return result;
}

ExperimentResult run_design_quality(const ExperimentConfig& cfg) {
  if (cfg.mode == Mode::kFinance) throw Error(ErrorCode::kConfig, "design quality needs the true accuracy");
  ExperimentConfig adaptive = cfg;
  adaptive.mode = Mode::kDesignQuality;
  adaptive.validate();

  std::vector<Scheme> schemes = schemes_of(adaptive);
  for (PolicyKind b : {PolicyKind::kTrueIds, PolicyKind::kMedian, PolicyKind::kUniform}) {
    for (std::int64_t k : cfg.batch_sizes) {
      const Scheme s{b, EstimatorKind::kExact, k};
      const bool present = std::any_of(schemes.begin(), schemes.end(), [&](const Scheme& o) {
        return o.policy == s.policy && o.estimator == s.estimator && o.k == s.k;
      });
      if (!present) schemes.push_back(s);
    }
  }
  const auto reps = static_cast<std::size_t>(cfg.reps);
  std::vector<RepOutcome> outcomes(schemes.size() * reps);
  const double root = kSyntheticRoot;

  parallel_for(outcomes.size(), thread_count(cfg, outcomes.size()), [&](std::size_t i) {
    const Scheme& s = schemes[i / reps];
    const std::uint64_t run_seed = replication_seed(cfg.seed, i % reps);
    RunConfig rc = run_config(cfg, s);
    rc.seed = run_seed;
    std::unique_ptr<Oracle> oracle = make_oracle(adaptive, stream_seed(run_seed, Stream::kOracle));
    RunResult r = run_gpba(rc, *oracle);
    const std::vector<PiecewiseDensity> states = replay_exact(r.trace, *oracle);
    RepOutcome& out = outcomes[i];
    out.metrics = replay_metrics(r.trace, states, *oracle, rc.checkpoints, cfg.alpha_ci);
    const PiecewiseDensity& g = states.empty() ? r.density : states.back();
    out.final = metrics_snapshot(g, root, cfg.alpha_ci);
    out.final.budget_used = r.calls;
    out.final.n_macro = static_cast<std::int64_t>(r.trace.size());
  });

  ExperimentResult result;
  result.root = root;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    std::vector<RepOutcome> block(outcomes.begin() + static_cast<std::ptrdiff_t>(s * reps),
                                  outcomes.begin() + static_cast<std::ptrdiff_t>((s + 1) * reps));
    summarize(cfg, schemes[s], block, result);
  }
  return result;
}

ExperimentResult run_tpo_table(const ExperimentConfig& cfg) {
  cfg.validate();
  constexpr double kSigma = 0.2;
  constexpr std::int64_t kUnbounded = std::int64_t{1} << 40;
  ExperimentResult result;
  result.root = kSyntheticRoot;
  struct Cell {
    double p;
    double alpha;
  };
  std::vector<Cell> cells;
  for (double p : cfg.tpo_p) {
    for (double a : cfg.tpo_alphas) cells.push_back({p, a});
  }
  const auto reps = static_cast<std::size_t>(cfg.reps);
  std::vector<double> hits(cells.size() * reps);
  parallel_for(hits.size(), thread_count(cfg, hits.size()), [&](std::size_t i) {
    const Cell& c = cells[i / reps];
    const std::uint64_t run_seed = replication_seed(cfg.seed, i % reps);
    SyntheticOracle oracle = make_h1(stream_seed(run_seed, Stream::kOracle));
    const double x = kSyntheticRoot - kSigma * numeric::normal_quantile(c.p);
    hits[i] = static_cast<double>(tpo_query(oracle, x, kSigma, c.alpha, kUnbounded).k_used);
  });
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> block(hits.begin() + static_cast<std::ptrdiff_t>(c * reps),
                              hits.begin() + static_cast<std::ptrdiff_t>((c + 1) * reps));
    const double m = mean_of(block);
    numeric::NeumaierSum ss;
    for (double h : block) ss.add((h - m) * (h - m));
    const double sd = block.size() > 1 ? std::sqrt(ss.value() / static_cast<double>(block.size() - 1)) : 0.0;
    result.tpo_table.push_back({cells[c].p, cells[c].alpha, m, sd, cfg.reps});
  }
  return result;
}

ExperimentResult run(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::kTpoTable: return run_tpo_table(cfg);
    case Mode::kDesignQuality: return run_design_quality(cfg);
    default: return run_experiment(cfg);
  }
}

void write_records(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "scheme,policy,estimator,K,T,rep,budget_used,root_est,residual,ci_len,covered\n" << std::setprecision(17);
  for (const ResultRow& r : rows) {
    out << r.scheme << ',' << r.policy << ',' << r.estimator << ',' << r.k << ',' << r.t << ',';
    if (r.aggregate) {
      out << "mean";
    } else {
      out << r.rep;
    }
    out << ',' << r.budget_used << ',' << r.root_est << ',' << r.residual << ',' << r.ci_len << ',' << r.covered
        << '\n';
  }
}

void write_curves(const std::vector<CurvePoint>& curves, std::ostream& out) {
  out << "scheme,checkpoint,mean_residual,median_residual,mean_ci_len,coverage,mean_n_macro\n"
      << std::setprecision(17);
  for (const CurvePoint& c : curves) {
    out << c.scheme << ',' << c.checkpoint << ',' << c.mean_residual << ',' << c.median_residual << ','
        << c.mean_ci_len << ',' << c.coverage << ',' << c.mean_n_macro << '\n';
  }
}

void write_tpo_table(const std::vector<TpoTableRow>& rows, std::ostream& out) {
  out << "p,alpha,mean_k,sd_k,reps\n" << std::setprecision(17);
  for (const TpoTableRow& r : rows) {
    out << r.p << ',' << r.alpha << ',' << r.mean_k << ',' << r.sd_k << ',' << r.reps << '\n';
  }
}

json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  json j;
  j["mode"] = std::string(to_string(cfg.mode));
  j["budget"] = cfg.budget;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["root"] = result.root;
  j["aggregates"] = json::array();
  for (const ResultRow& r : result.rows) {
    if (!r.aggregate) continue;
    j["aggregates"].push_back({{"scheme", r.scheme},
                               {"policy", r.policy},
                               {"estimator", r.estimator},
                               {"K", r.k},
                               {"T", r.t},
                               {"reps", r.rep},
                               {"budget_used", r.budget_used},
                               {"root_est", r.root_est},
                               {"residual", r.residual},
                               {"ci_len", r.ci_len},
                               {"coverage", r.covered}});
  }
  j["curves"] = json::array();
  for (const CurvePoint& c : result.curves) {
    j["curves"].push_back({{"scheme", c.scheme},
                           {"checkpoint", c.checkpoint},
                           {"mean_residual", c.mean_residual},
                           {"median_residual", c.median_residual},
                           {"mean_ci_len", c.mean_ci_len},
                           {"coverage", c.coverage},
                           {"mean_n_macro", c.mean_n_macro}});
  }
  j["tpo_table"] = json::array();
  for (const TpoTableRow& t : result.tpo_table) {
    j["tpo_table"].push_back(
        {{"p", t.p}, {"alpha", t.alpha}, {"mean_k", t.mean_k}, {"sd_k", t.sd_k}, {"reps", t.reps}});
  }
  return j;
}

void write_summary(const ExperimentConfig& cfg, const ExperimentResult& result, std::ostream& out) {
  out << summary_json(cfg, result).dump(2) << '\n';
}

ExperimentResult read_summary(std::istream& in) {
  ExperimentResult result;
  try {
    const json j = json::parse(in);
    result.root = j.at("root").get<double>();
    for (const json& a : j.at("aggregates")) {
      ResultRow r;
      r.scheme = a.at("scheme").get<std::string>();
      r.policy = a.at("policy").get<std::string>();
      r.estimator = a.at("estimator").get<std::string>();
      r.k = a.at("K").get<std::int64_t>();
      r.t = a.at("T").get<std::int64_t>();
      r.rep = a.at("reps").get<std::int64_t>();
      r.aggregate = true;
      r.budget_used = a.at("budget_used").get<double>();
      r.root_est = a.at("root_est").get<double>();
      r.residual = a.at("residual").get<double>();
      r.ci_len = a.at("ci_len").get<double>();
      r.covered = a.at("coverage").get<double>();
      result.rows.push_back(r);
    }
    for (const json& c : j.at("curves")) {
      result.curves.push_back({c.at("scheme").get<std::string>(), c.at("checkpoint").get<std::int64_t>(),
                               c.at("mean_residual").get<double>(), c.at("median_residual").get<double>(),
                               c.at("mean_ci_len").get<double>(), c.at("coverage").get<double>(),
                               c.at("mean_n_macro").get<double>()});
    }
    for (const json& t : j.at("tpo_table")) {
      result.tpo_table.push_back({t.at("p").get<double>(), t.at("alpha").get<double>(), t.at("mean_k").get<double>(),
                                  t.at("sd_k").get<double>(), t.at("reps").get<std::int64_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("summary: ") + e.what());
  }
  return result;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(cfg.output_dir) / path;
  };
  auto open = [&](const std::string& p) {
    const fs::path path = resolve(p);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::kConfig, "cannot write '" + path.string() + "'");
    return out;
  };
  if (!cfg.csv_path.empty()) {
    std::ofstream out = open(cfg.csv_path);
    if (cfg.mode == Mode::kTpoTable) {
      write_tpo_table(result.tpo_table, out);
    } else {
      write_records(result.rows, out);
    }
  }
  if (!cfg.curves_path.empty()) {
    std::ofstream out = open(cfg.curves_path);
    write_curves(result.curves, out);
  }
  if (!cfg.json_path.empty()) {
    std::ofstream out = open(cfg.json_path);
    write_summary(cfg, result, out);
  }
}

}  // namespace gpba
