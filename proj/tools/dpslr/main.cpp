#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dpslr/errors.hpp"
#include "experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  dpslr::cli::CliOverrides overrides;
  std::string seed_str;
  std::string trials_str;
  std::string workers_str;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config")
      ->required();
  cmd->add_option("--seed", args.seed_str, "Override the config seed");
  cmd->add_option("--trials", args.trials_str, "Override the trial count");
  cmd->add_option("--epsilon", args.overrides.epsilons,
                  "Override the epsilon list (repeatable)");
  cmd->add_option("--algo", args.overrides.algos,
                  "Keep only these algorithms (repeatable)");
  cmd->add_option("--out", args.overrides.out_dir, "Output directory");
  cmd->add_option("--workers", args.workers_str, "Worker threads (0 = auto)");
  cmd->add_flag("--strict-csv", args.overrides.strict_csv,
                "Reject out-of-range CSV values instead of clipping");
  cmd->add_flag("--no-header-timestamp", args.overrides.suppress_timestamps,
                "Suppress timestamp header lines and wall times for "
                "byte-identical reruns");
}

dpslr::cli::ExperimentConfig load(const CommonArgs& args) {
  auto config = dpslr::cli::parse_config_file(args.config_path);
  dpslr::cli::CliOverrides overrides = args.overrides;
  if (!args.seed_str.empty()) overrides.seed = std::stoull(args.seed_str);
  if (!args.trials_str.empty()) overrides.trials = std::stoull(args.trials_str);
  if (!args.workers_str.empty()) {
    overrides.workers = std::stoull(args.workers_str);
  }
  dpslr::cli::apply_overrides(config, overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Differentially private simple linear regression benchmark runner"};
  app.require_subcommand(1);

  CommonArgs fit_args, sweep_args, datagen_args, ledger_args;
  auto* fit = app.add_subcommand(
      "fit", "Monte Carlo runs of every configured algorithm");
  add_common_flags(fit, fit_args);
  auto* sweep = app.add_subcommand(
      "sweep", "Parameter sweep over synthetic data families");
  add_common_flags(sweep, sweep_args);
  auto* datagen =
      app.add_subcommand("datagen", "Write generated datasets as CSV");
  add_common_flags(datagen, datagen_args);
  auto* ledger = app.add_subcommand(
      "ledger", "Print per-release privacy budget ledgers");
  add_common_flags(ledger, ledger_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      auto config = load(fit_args);
      auto result = dpslr::cli::run_fit(config);
      dpslr::cli::write_fit_outputs(config, result);
      std::cout << "wrote " << result.rows.size() << " trial rows to "
                << config.out_dir << "\n";
    } else if (sweep->parsed()) {
      auto config = load(sweep_args);
      auto result = dpslr::cli::run_sweep(config);
      dpslr::cli::write_sweep_outputs(config, result);
      std::cout << "wrote " << result.rows.size() << " sweep rows to "
                << config.out_dir << "\n";
    } else if (datagen->parsed()) {
      auto config = load(datagen_args);
      dpslr::cli::run_datagen(config);
      std::cout << "wrote datasets to " << config.out_dir << "\n";
    } else if (ledger->parsed()) {
      auto config = load(ledger_args);
      std::cout << dpslr::cli::render_ledger(config);
    }
  } catch (const dpslr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
