// Command-line front end: `run` executes an epsilon-sweep experiment,
// `compare` pairs two finished runs with a Wilcoxon signed-rank test,
// `audit` checks an exported message trace.
//
// Exit codes: 0 success, 1 run/audit failures, 2 usage or config errors.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dapmlm/experiment.hpp"
#include "dapmlm/protocol.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::string>& datasets,
            const std::vector<double>& epsilon_grid, const std::string& mode,
            int trials, long long seed, double split_fraction, const std::string& out,
            bool noise_per_row, double count_noise_scale, int owners) {
  dapmlm::ExperimentConfig config;
  if (!config_path.empty()) config = dapmlm::parse_config(config_path);
  if (!datasets.empty()) {
    config.datasets.clear();
    for (const auto& d : datasets) config.datasets.emplace_back(d);
  }
  if (!epsilon_grid.empty()) config.epsilon_grid = epsilon_grid;
  if (!mode.empty()) config.mode = dapmlm::parse_mode(mode);
  if (trials > 0) config.trials = static_cast<std::size_t>(trials);
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  if (split_fraction > 0.0) config.split = split_fraction;
  if (!out.empty()) config.out = out;
  if (noise_per_row) config.noise_per_row = true;
  if (count_noise_scale >= 0.0) config.count_noise_scale = count_noise_scale;
  if (owners > 0) config.owners = static_cast<std::size_t>(owners);
  if (config.datasets.empty()) {
    std::cerr << "error: no datasets given (config 'dataset' lines or --dataset)\n";
    return 2;
  }

  const dapmlm::ExperimentResult result = dapmlm::run_experiment(config);
  for (const auto& s : result.summary)
    std::cout << s.dataset << " mode=" << dapmlm::mode_name(s.mode)
              << " epsilon=" << s.epsilon << " trials=" << s.trials
              << " accuracy=" << s.mean_accuracy << " f1=" << s.mean_f1 << "\n";
  std::cout << "wrote " << (config.out / "results.csv").string() << ", summary.csv, "
            << "manifest.json\n";
  if (!result.failures.empty()) {
    for (const auto& f : result.failures)
      std::cerr << "cell failed: " << f.dataset << " epsilon=" << f.epsilon
                << " trial=" << f.trial << ": " << f.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::string& out) {
  const auto table = dapmlm::compare_runs(dir_a, dir_b);
  for (const auto& r : table)
    std::cout << r.dataset << " " << r.metric << " W=" << r.statistic
              << " p=" << r.p_value << " n=" << r.n_effective << " " << r.verdict
              << "\n";
  dapmlm::write_comparison_csv(out, table);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_audit(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) {
    std::cerr << "error: cannot open trace file: " << trace_path << "\n";
    return 2;
  }
  const dapmlm::AuditReport report = dapmlm::audit_trace_file(in);
  if (report.passed) {
    std::cout << "audit passed\n";
    return 0;
  }
  for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private multi-party classification experiments"};
  app.require_subcommand(1);

  std::string config_path, mode, out_dir, dir_a, dir_b, trace_path;
  std::string compare_out = "wilcoxon.csv";
  std::vector<std::string> datasets;
  std::vector<double> epsilon_grid;
  int trials = -1, owners = -1;
  long long seed = -1;
  double split_fraction = -1.0, count_noise_scale = -1.0;
  bool noise_per_row = false;

  auto* run = app.add_subcommand("run", "run an epsilon-sweep experiment");
  run->add_option("--config", config_path, "flat key/value config file");
  run->add_option("--dataset", datasets, "dataset CSV path (repeatable)");
  run->add_option("--epsilon-grid", epsilon_grid, "epsilon values to sweep");
  run->add_option("--mode", mode, "clean | dp_data | dp_model | dp_both");
  run->add_option("--trials", trials, "trials per (dataset, epsilon) cell");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--split", split_fraction, "training fraction in (0,1)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--noise-per-row", noise_per_row, "one draw per record, not per cell");
  run->add_option("--count-noise-scale", count_noise_scale,
                  "laplace scale for class-count noise");
  run->add_option("--owners", owners, "number of data owners to shard across");

  auto* compare = app.add_subcommand("compare", "compare two finished runs");
  compare->add_option("--a", dir_a, "first run directory")->required();
  compare->add_option("--b", dir_b, "second run directory")->required();
  compare->add_option("--out", compare_out, "comparison CSV path");

  auto* audit = app.add_subcommand("audit", "audit an exported trace file");
  audit->add_option("--trace", trace_path, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, datasets, epsilon_grid, mode, trials, seed,
                     split_fraction, out_dir, noise_per_row, count_noise_scale, owners);
    if (compare->parsed()) return cmd_compare(dir_a, dir_b, compare_out);
    return cmd_audit(trace_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
