#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpslr/budget.hpp"
#include "dpslr/datagen.hpp"
#include "dpslr/dp_regression.hpp"
#include "dpslr/metrics.hpp"
#include "dpslr/rat.hpp"
#include "dpslr/types.hpp"

namespace dpslr::cli {

enum class AlgorithmKind {
  Ols,
  TheilSen,
  NoisyStats,
  NoisyIntercept,
  DpExpTheilSen,
  DpWideTheilSen,
  DpSsTheilSen,
  DpGdPure,
  DpGdApprox,
  DpGdZcdp,
  OiMos,
};

struct AlgorithmSpec {
  AlgorithmKind kind;
  std::string key;                   // config name, e.g. "dpexptheilsen"
  std::size_t matchings = 0;         // 0 means k = n-1 ("all")
  std::optional<double> r_l, r_u;    // default depends on input kind
  double theta = 0.01;
  int d = 3;
  double beta = 0.5;
  std::size_t iterations = 80;
  double tau = 1.0;
  Rat delta = Rat(1, 1073741824);    // 2^-30

  bool is_private() const {
    return kind != AlgorithmKind::Ols && kind != AlgorithmKind::TheilSen;
  }
  // Paper-style display name; "all" matchings drop the k suffix.
  std::string display_name() const;
};

struct InputSpec {
  enum class Kind { Csv, Synthetic, OiFamily } kind = Kind::Synthetic;
  std::vector<std::string> csv_paths;
  bool strict_csv = false;
  SyntheticSpec synthetic;
  std::size_t synthetic_datasets = 1;
  std::size_t oi_tracts = 100;
};

struct SweepSpec {
  std::string parameter;  // n | sigma_x2 | sigma_e2 | epsilon | x_new
  std::vector<double> values;
  std::size_t datasets = 500;
  std::size_t trials = 50;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  std::vector<double> qs{68.0};
  std::vector<std::pair<std::string, Rat>> epsilons;  // (literal, value)
  InputSpec input;
  std::vector<AlgorithmSpec> algorithms;
  std::optional<SweepSpec> sweep;
  std::string out_dir = "results";
  std::size_t workers = 0;  // 0 = hardware concurrency
  bool suppress_timestamps = false;
};

// Parses the JSON config document. Unknown keys are ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::vector<std::string> epsilons;
  std::vector<std::string> algos;  // keep only these algorithm keys
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  bool strict_csv = false;
  bool suppress_timestamps = false;
};

void apply_overrides(ExperimentConfig& config, const CliOverrides& overrides);

struct NamedDataset {
  std::string id;
  Dataset data;
  std::optional<PredictionPair> truth;
};

struct LoadedInput {
  std::vector<NamedDataset> datasets;
  std::optional<TractFamily> family;  // OI family inputs only
};

LoadedInput load_input(const ExperimentConfig& config);

struct TrialRow {
  std::string dataset_id;
  std::string algorithm;
  std::string epsilon;
  std::size_t trial = 0;
  std::optional<PredictionPair> release;
  std::int64_t wall_us = 0;
};

struct CellResult {  // one (algorithm, epsilon) over all datasets
  std::string algorithm;
  std::string epsilon;
  std::vector<TrialReport> reports;  // one per dataset
  std::vector<LedgerEntry> ledger;   // entries of a single release
  PrivacyBudget budget;
};

struct FitResult {
  std::vector<TrialRow> rows;
  std::vector<CellResult> cells;
};

FitResult run_fit(const ExperimentConfig& config);
void write_fit_outputs(const ExperimentConfig& config, const FitResult& result);

struct SweepRow {
  double value = 0.0;          // grid point
  std::string algorithm;
  double mean_ratio_true = 0.0;  // mean over datasets of C_true(68)/sigma
  double failure_rate = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

SweepResult run_sweep(const ExperimentConfig& config);
void write_sweep_outputs(const ExperimentConfig& config,
                         const SweepResult& result);

// Writes generated datasets as CSV files into out_dir.
void run_datagen(const ExperimentConfig& config);

// Renders the per-release budget ledger of every configured algorithm.
std::string render_ledger(const ExperimentConfig& config);

// Prediction standard deviation at x_new implied by a synthetic spec
// (pre-clipping), used as the sweep denominator.
double synthetic_sigma(const SyntheticSpec& spec, double x_new);

}  // namespace dpslr::cli
