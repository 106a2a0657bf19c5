#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "gpba/error.hpp"
#include "gpba/harness.hpp"

namespace {

constexpr const char* kUsage = R"(usage: gpba <mode> [options]

modes:
  synthetic        Monte-Carlo replications on h1, h2, h3 or const
  finance          Bermudan put timing-value oracle
  tpo-table        mean TPO hitting times on h1
  design-quality   replay designs under the true accuracy, plus baselines

options:
  --config FILE             JSON config; flags below override it
  --policy LIST             det-ids, rand-ids, syst-q, rand-q, tpo, true-ids, median, uniform
  --estimator LIST          bar, mode, median, mean, boost, clt, exact
  --batch LIST              batch sizes K
  --budget T                total oracle calls per run
  --func NAME               h1, h2, h3, const
  --const-p P               accuracy of the const function
  --reps M                  replications (default 1)
  --seed S                  base seed (default 1)
  --threads N               worker threads, 0 = all cores (default 1)
  --preavg A                pre-averaging size (default 1)
  --alpha-ci A              credible interval level (default 0.05)
  --checkpoints LIST        metric checkpoints (default: 10 log-spaced)
  --quantiles LIST          det-ids / syst-q quantiles (default 0.25,0.75)
  --m M                     rand-ids candidate count (default 2)
  --tpo-alpha A             tpo significance (default 0.05)
  --grid G                  true-ids grid size (default 1001)
  --vol V --dates N --eval-index I --lattice-steps S
                            Bermudan put setup
  --tpo-p LIST --tpo-alphas LIST
                            tpo-table grid
  --output-dir DIR          base for relative output paths (default $GPBA_OUTPUT_DIR or .)
  --csv PATH --json PATH --curves PATH
                            output files
)";

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (const std::string& a : args) {
    if (a == "-h" || a == "--help") {
      std::cout << kUsage;
      return 0;
    }
  }
  if (args.empty()) {
    std::cerr << kUsage;
    return 2;
  }
  try {
    const gpba::ExperimentConfig cfg = gpba::parse_config(args);
    const gpba::ExperimentResult result = gpba::run(cfg);
    gpba::write_outputs(cfg, result);
    std::cout << std::setprecision(6);
    if (cfg.mode == gpba::Mode::kTpoTable) {
      gpba::write_tpo_table(result.tpo_table, std::cout);
    } else {
      std::cout << "scheme,residual,ci_len,coverage,budget_used\n";
      for (const auto& r : result.rows) {
        if (!r.aggregate) continue;
        std::cout << r.scheme << ',' << r.residual << ',' << r.ci_len << ',' << r.covered << ',' << r.budget_used
                  << '\n';
      }
    }
  } catch (const gpba::Error& e) {
    std::cerr << "gpba: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gpba: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
