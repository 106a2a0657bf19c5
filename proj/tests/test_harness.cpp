#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gpba/error.hpp"
#include "gpba/harness.hpp"

using gpba::ExperimentConfig;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.policies = {gpba::PolicyKind::kRandQ};
  cfg.estimators = {gpba::EstimatorKind::kClt};
  cfg.batch_sizes = {100};
  cfg.budget = 2000;
  cfg.reps = 3;
  cfg.seed = 11;
  return cfg;
}

std::string parse_error(const std::vector<std::string>& args) {
  try {
    (void)gpba::parse_config(args);
  } catch (const gpba::Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("one scheme, three replications") {
  const auto result = gpba::run_experiment(small_config());
  REQUIRE(result.rows.size() == 4);
  CHECK_FALSE(result.rows[0].aggregate);
  CHECK(result.rows[3].aggregate);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += result.rows[static_cast<std::size_t>(i)].residual;
  CHECK(result.rows[3].residual == doctest::Approx(sum / 3));
  CHECK(result.rows[3].covered >= 0.0);
  CHECK(result.rows[3].covered <= 1.0);
  for (const auto& r : result.rows) {
    CHECK(r.residual >= 0.0);
    CHECK(r.residual <= 1.0);
    CHECK(r.ci_len >= 0.0);
    CHECK(r.ci_len <= 1.0);
    CHECK(r.budget_used == 2000);
  }
  CHECK_FALSE(result.curves.empty());
}

TEST_CASE("aggregate row") {
  std::vector<gpba::ResultRow> rows(2);
  rows[0].residual = 0.1;
  rows[1].residual = 0.3;
  rows[0].covered = 1.0;
  CHECK(gpba::aggregate_rows(rows).residual == doctest::Approx(0.2));
  CHECK(gpba::aggregate_rows(rows).covered == doctest::Approx(0.5));
  CHECK(gpba::aggregate_rows(rows).aggregate);
}

TEST_CASE("parallel and serial runs agree") {
  ExperimentConfig cfg = small_config();
  cfg.policies = {gpba::PolicyKind::kRandQ, gpba::PolicyKind::kRandIds};
  cfg.estimators = {gpba::EstimatorKind::kBar, gpba::EstimatorKind::kClt};
  cfg.reps = 6;
  cfg.threads = 1;
  const auto serial = gpba::run_experiment(cfg);
  cfg.threads = 4;
  const auto parallel = gpba::run_experiment(cfg);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].scheme == parallel.rows[i].scheme);
    CHECK(serial.rows[i].root_est == parallel.rows[i].root_est);
    CHECK(serial.rows[i].ci_len == parallel.rows[i].ci_len);
  }
}

TEST_CASE("invalid scheme combinations fail before running") {
  ExperimentConfig cfg = small_config();
  cfg.mode = gpba::Mode::kFinance;
  cfg.estimators = {gpba::EstimatorKind::kExact};
  CHECK_THROWS_AS(cfg.validate(), gpba::Error);
  cfg.estimators = {gpba::EstimatorKind::kClt};
  cfg.policies = {gpba::PolicyKind::kTpo};
  CHECK_THROWS_AS(cfg.validate(), gpba::Error);
  cfg.policies = {gpba::PolicyKind::kRandQ};
  cfg.batch_sizes = {1000};
  cfg.budget = 20000;
  CHECK_NOTHROW(cfg.validate());

  ExperimentConfig empty = small_config();
  empty.estimators.clear();
  CHECK_THROWS_AS(empty.validate(), gpba::Error);
  ExperimentConfig no_reps = small_config();
  no_reps.reps = 0;
  CHECK_THROWS_AS(no_reps.validate(), gpba::Error);
}

TEST_CASE("parse_config") {
  const std::string missing = parse_error({"synthetic", "--policy", "rand-q", "--estimator", "clt", "--batch", "250"});
  CHECK(missing.find("budget") != std::string::npos);

  const auto cfg = gpba::parse_config({"synthetic", "--policy", "rand-q", "--estimator", "clt", "--batch", "250",
                                       "--budget", "20000", "--func", "h1", "--reps", "1000"});
  CHECK(cfg.mode == gpba::Mode::kSynthetic);
  REQUIRE(cfg.policies.size() == 1);
  CHECK(cfg.policies[0] == gpba::PolicyKind::kRandQ);
  CHECK(cfg.estimators[0] == gpba::EstimatorKind::kClt);
  CHECK(cfg.batch_sizes == std::vector<std::int64_t>{250});
  CHECK(cfg.budget == 20000);
  CHECK(cfg.function == "h1");
  CHECK(cfg.reps == 1000);
  CHECK_NOTHROW(cfg.validate());

  const auto lists = gpba::parse_config({"synthetic", "--policy", "rand-q,syst-q", "--estimator", "bar,clt",
                                         "--batch", "50,250,500", "--budget", "20000"});
  CHECK(lists.policies.size() == 2);
  CHECK(lists.batch_sizes.size() == 3);

  CHECK(parse_error({"synthetic", "--bogus", "1"}) != "");
  CHECK(parse_error({"nonsense"}) != "");
  CHECK(parse_error({"synthetic", "--policy", "rand-q", "--estimator", "clt", "--batch", "x2", "--budget", "1"})
            .find("x2") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
  const auto dir = std::filesystem::temp_directory_path() / "gpba_harness_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "cfg.json";
  {
    std::ofstream out(path);
    out << R"({"policies": ["syst-q"], "estimators": "bar", "batch_sizes": [500], "budget": 10000,
              "reps": 7, "finance": {"volatility": 0.25}})";
  }
  const auto cfg = gpba::parse_config({"synthetic", "--config", path.string(), "--reps", "9"});
  CHECK(cfg.policies[0] == gpba::PolicyKind::kSystQ);
  CHECK(cfg.budget == 10000);
  CHECK(cfg.reps == 9);
  CHECK(cfg.finance.volatility == 0.25);

  {
    std::ofstream out(path);
    out << R"({"policies": ["syst-q"], "estimators": "bar", "batch_sizes": [500], "budget": 10000, "colour": 1})";
  }
  const std::string err = parse_error({"synthetic", "--config", path.string()});
  CHECK(err.find("colour") != std::string::npos);

  {
    std::ofstream out(path);
    out << R"({"policies": ["syst-q"], "estimators": "bar", "batch_sizes": [500]})";
  }
  CHECK(parse_error({"synthetic", "--config", path.string()}).find("budget") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("output directory from the environment") {
  ::setenv("GPBA_OUTPUT_DIR", "/tmp/gpba_env_dir", 1);
  const auto cfg = gpba::parse_config({"tpo-table"});
  CHECK(cfg.output_dir == "/tmp/gpba_env_dir");
  const auto flagged = gpba::parse_config({"tpo-table", "--output-dir", "/tmp/other"});
  CHECK(flagged.output_dir == "/tmp/other");
  ::unsetenv("GPBA_OUTPUT_DIR");
}

TEST_CASE("records and summary round trip") {
  const ExperimentConfig cfg = small_config();
  const auto result = gpba::run_experiment(cfg);

  std::ostringstream csv;
  gpba::write_records(result.rows, csv);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "scheme,policy,estimator,K,T,rep,budget_used,root_est,residual,ci_len,covered");
  int count = 0;
  for (std::string line; std::getline(lines, line);) ++count;
  CHECK(count == 4);
  CHECK(csv.str().find(",mean,") != std::string::npos);

  std::stringstream json;
  gpba::write_summary(cfg, result, json);
  const auto back = gpba::read_summary(json);
  CHECK(back.root == result.root);
  REQUIRE(back.rows.size() == 1);
  const auto& agg = result.rows.back();
  CHECK(back.rows[0].scheme == agg.scheme);
  CHECK(back.rows[0].residual == agg.residual);
  CHECK(back.rows[0].ci_len == agg.ci_len);
  CHECK(back.rows[0].covered == agg.covered);
  CHECK(back.rows[0].budget_used == agg.budget_used);
  REQUIRE(back.curves.size() == result.curves.size());
  for (std::size_t i = 0; i < back.curves.size(); ++i) {
    CHECK(back.curves[i].checkpoint == result.curves[i].checkpoint);
    CHECK(back.curves[i].mean_residual == result.curves[i].mean_residual);
  }
}

TEST_CASE("write_outputs") {
  ExperimentConfig cfg = small_config();
  cfg.output_dir = (std::filesystem::temp_directory_path() / "gpba_out_test").string();
  cfg.csv_path = "runs.csv";
  cfg.json_path = "nested/summary.json";
  cfg.curves_path = "curves.csv";
  gpba::write_outputs(cfg, gpba::run_experiment(cfg));
  CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "runs.csv"));
  CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "nested/summary.json"));
  CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "curves.csv"));
  std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("default checkpoints") {
  const auto cps = gpba::default_checkpoints(20000, 250);
  CHECK(cps.front() == 250);
  CHECK(cps.back() == 20000);
  CHECK(cps.size() <= 10);
  for (std::size_t i = 1; i < cps.size(); ++i) {
    CHECK(cps[i] > cps[i - 1]);
    CHECK(cps[i] % 250 == 0);
  }
}

TEST_CASE("design quality") {
  ExperimentConfig cfg;
  cfg.mode = gpba::Mode::kDesignQuality;
  cfg.policies = {gpba::PolicyKind::kRandQ};
  cfg.estimators = {gpba::EstimatorKind::kBar};
  cfg.batch_sizes = {250};
  cfg.budget = 20000;
  cfg.reps = 200;
  cfg.checkpoints = {1000, 5000, 20000};
  cfg.seed = 3;
  const auto result = gpba::run_design_quality(cfg);

  auto aggregate = [&](const std::string& scheme) {
    for (const auto& r : result.rows) {
      if (r.aggregate && r.scheme == scheme) return r;
    }
    FAIL("missing scheme " << scheme);
    return gpba::ResultRow{};
  };
  const auto median = aggregate("median/exact/K250");
  const auto ids = aggregate("true-ids/exact/K250");
  aggregate("rand-q/bar/K250");
  CHECK(median.ci_len > 5 * ids.ci_len);

  std::vector<double> uniform_medians;
  for (const auto& c : result.curves) {
    if (c.scheme == "uniform/exact/K250") uniform_medians.push_back(c.median_residual);
  }
  REQUIRE(uniform_medians.size() == 3);
  CHECK(uniform_medians[1] < uniform_medians[0]);
  CHECK(uniform_medians[2] < uniform_medians[1]);

  ExperimentConfig fin = cfg;
  fin.mode = gpba::Mode::kFinance;
  CHECK_THROWS_AS(gpba::run_design_quality(fin), gpba::Error);
}

TEST_CASE("tpo table") {
  ExperimentConfig cfg;
  cfg.mode = gpba::Mode::kTpoTable;
  cfg.reps = 1000;
  cfg.tpo_p = {0.7, 0.6};
  cfg.tpo_alphas = {0.05, 0.4};
  const auto result = gpba::run_tpo_table(cfg);
  REQUIRE(result.tpo_table.size() == 4);
  const double expected[] = {34, 18, 159, 79};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& row = result.tpo_table[i];
    const double se = row.sd_k / std::sqrt(static_cast<double>(row.reps));
    CHECK(std::abs(row.mean_k - expected[i]) <= 3 * se + 1.0);
  }
}
