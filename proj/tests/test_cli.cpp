#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dpslr/csv.hpp"
#include "dpslr/errors.hpp"
#include "experiment.hpp"

using namespace dpslr;
using namespace dpslr::cli;
namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"({
  "seed": 7,
  "trials": 10,
  "epsilons": [1],
  "input": {"type": "synthetic", "n": 30, "sigma_x2": 0.02,
            "sigma_e2": 0.01, "datasets": 2},
  "algorithms": [{"name": "ols"}, {"name": "noisystats"},
                 {"name": "dpexptheilsen", "matchings": 5}],
  "out": "unused"
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad values") {
  CHECK_NOTHROW(parse_config_text(kBaseConfig));
  CHECK_THROWS_AS(parse_config_text(R"({"algorithms": [], "bogus": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(
          R"({"algorithms": [{"name": "noisystats", "frobnicate": 2}]})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(R"({"algorithms": [{"name": "nope"}]})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("not json"), ParseError);
  // Private algorithms demand an epsilon list.
  CHECK_THROWS_AS(
      parse_config_text(R"({"algorithms": [{"name": "noisystats"}]})"),
      ConfigError);
  // Epsilons parse exactly.
  auto config = parse_config_text(kBaseConfig);
  CHECK(config.epsilons.size() == 1);
  CHECK(config.epsilons[0].second == Rat(1));
}

TEST_CASE("cli overrides") {
  auto config = parse_config_text(kBaseConfig);
  CliOverrides o;
  o.seed = 99;
  o.trials = 3;
  o.epsilons = {"0.5", "2"};
  o.algos = {"noisystats"};
  apply_overrides(config, o);
  CHECK(config.seed == 99);
  CHECK(config.trials == 3);
  CHECK(config.epsilons.size() == 2);
  CHECK(config.epsilons[0].second == Rat(1, 2));
  REQUIRE(config.algorithms.size() == 1);
  CHECK(config.algorithms[0].key == "noisystats");

  CliOverrides bad;
  bad.algos = {"nonexistent"};
  CHECK_THROWS_AS(apply_overrides(config, bad), ConfigError);
}

TEST_CASE("csv ingestion errors carry row numbers") {
  std::istringstream ok("x,y\n0.5,0.25\n0.1,0.9\n");
  auto d = read_dataset_csv(ok, RangePolicy::Clip);
  CHECK(d.size() == 2);

  std::istringstream bad("x,y\n0.5,abc\n");
  try {
    read_dataset_csv(bad, RangePolicy::Clip);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  std::istringstream out_of_range("x,y\n0.5,0.25\n1.4,0.9\n");
  CHECK_THROWS_AS(read_dataset_csv(out_of_range, RangePolicy::Reject),
                  ParseError);
  std::istringstream clipped("x,y\n0.5,0.25\n1.4,0.9\n");
  CHECK(read_dataset_csv(clipped, RangePolicy::Clip)[1].x == 1.0);

  std::istringstream header("a,b\n1,2\n");
  CHECK_THROWS_AS(read_dataset_csv(header, RangePolicy::Clip), ParseError);
}

TEST_CASE("dataset csv round trip") {
  Dataset d({{0.125, 0.875}, {0.0, 1.0}, {0.3333333333333333, 0.1}});
  std::ostringstream os;
  write_dataset_csv(os, d);
  std::istringstream is(os.str());
  auto back = read_dataset_csv(is, RangePolicy::Reject);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back[i].x == d[i].x);  // exact: shortest round-trip formatting
    CHECK(back[i].y == d[i].y);
  }
}

TEST_CASE("run_fit is deterministic: identical config gives identical bytes") {
  TempDir dir_a("dpslr_test_a");
  TempDir dir_b("dpslr_test_b");
  auto config = parse_config_text(kBaseConfig);
  config.suppress_timestamps = true;

  config.out_dir = dir_a.path.string();
  config.workers = 1;
  write_fit_outputs(config, run_fit(config));

  config.out_dir = dir_b.path.string();
  config.workers = 4;  // scheduling must not affect results
  write_fit_outputs(config, run_fit(config));

  for (const auto& entry : fs::directory_iterator(dir_a.path)) {
    auto other = dir_b.path / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
  }
}

TEST_CASE("noisystats at huge epsilon reproduces the ols row") {
  auto config = parse_config_text(kBaseConfig);
  config.trials = 10;
  config.epsilons = {{"1000000", Rat(1000000)}};
  config.input.synthetic_datasets = 1;
  config.suppress_timestamps = true;
  auto result = run_fit(config);

  const CellResult* ols = nullptr;
  const CellResult* ns = nullptr;
  for (const auto& cell : result.cells) {
    if (cell.algorithm == "OLS") ols = &cell;
    if (cell.algorithm == "NoisyStats") ns = &cell;
  }
  REQUIRE(ols != nullptr);
  REQUIRE(ns != nullptr);
  auto baseline = ols->reports[0].trials[0];
  for (const auto& trial : ns->reports[0].trials) {
    REQUIRE(trial.has_value());
    CHECK(std::fabs(trial->p25 - baseline->p25) < 1e-3);
    CHECK(std::fabs(trial->p75 - baseline->p75) < 1e-3);
  }
}

TEST_CASE("family runs emit one ratio-cdf file per algorithm and epsilon") {
  TempDir dir("dpslr_test_family");
  auto config = parse_config_text(R"({
    "seed": 11,
    "trials": 6,
    "epsilons": [10],
    "input": {"type": "synthetic", "n": 50, "sigma_x2": 0.02,
              "sigma_e2": 0.05, "datasets": 6},
    "algorithms": [{"name": "noisystats"}, {"name": "noisyintercept"},
                   {"name": "dpexptheilsen"}, {"name": "dpwidetheilsen"},
                   {"name": "dpsstheilsen"}, {"name": "dpgdzcdp"}],
    "out": "unused"
  })");
  config.out_dir = dir.path.string();
  config.suppress_timestamps = true;
  write_fit_outputs(config, run_fit(config));
  for (const char* name :
       {"ratio_cdf_NoisyStats_10.csv", "ratio_cdf_NoisyIntercept_10.csv",
        "ratio_cdf_DPExpTheilSen_10.csv", "ratio_cdf_DPWideTheilSen_10.csv",
        "ratio_cdf_DPSSTheilSen_10.csv", "ratio_cdf_DPGDzCDP_10.csv",
        "trials.csv", "metrics.csv", "summary.json"}) {
    CHECK(fs::exists(dir.path / name));
  }
}

TEST_CASE("sweep with a single grid point matches run_fit") {
  auto config = parse_config_text(R"({
    "seed": 3,
    "epsilons": [1],
    "input": {"type": "synthetic", "n": 40, "sigma_x2": 0.02, "sigma_e2": 0.01},
    "algorithms": [{"name": "noisystats"}],
    "sweep": {"parameter": "epsilon", "values": [2.0], "datasets": 4,
              "trials": 5},
    "out": "unused"
  })");
  auto sweep = run_sweep(config);
  REQUIRE(sweep.rows.size() == 1);

  // Reproduce the same cell through run_fit with the sweep's derived config.
  ExperimentConfig point = config;
  point.sweep.reset();
  point.trials = 5;
  point.input.synthetic_datasets = 4;
  point.epsilons = {{"2", Rat(2)}};
  point.seed =
      RngStream(derive_stream(RandomSeed{config.seed, 0}, "sweep:2")).next_u64();
  auto fit = run_fit(point);
  REQUIRE(fit.cells.size() == 1);
  double sigma = synthetic_sigma(point.input.synthetic, 0.25);
  double sum = 0.0;
  for (const auto& report : fit.cells[0].reports) {
    sum += empirical_error_bound(report, 68, Which::P25, Reference::Truth) /
           sigma;
  }
  CHECK(sweep.rows[0].mean_ratio_true ==
        doctest::Approx(sum / 4.0).epsilon(1e-12));
}

TEST_CASE("ledger rendering names every mechanism spend") {
  auto config = parse_config_text(kBaseConfig);
  auto text = render_ledger(config);
  CHECK(text.find("noisy-stats") != std::string::npos);
  CHECK(text.find("dp-theilsen:p25") != std::string::npos);
  CHECK(text.find("within budget") != std::string::npos);
  CHECK(text.find("OLS: non-private baseline") != std::string::npos);
}
