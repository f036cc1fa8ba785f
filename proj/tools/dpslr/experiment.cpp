#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dpslr/csv.hpp"
#include "dpslr/errors.hpp"
#include "dpslr/ols.hpp"
#include "dpslr/theilsen.hpp"
#include "json.hpp"

namespace dpslr::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

//===----------------------------------------------------------------------===//
// Config parsing
//===----------------------------------------------------------------------===//

namespace {

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

// Numbers keep their JSON literal so the Rat is exact (e.g. "0.1" -> 1/10).
std::pair<std::string, Rat> parse_budget_value(const ordered_json& v,
                                               const std::string& where) {
  std::string literal = v.is_string() ? v.get<std::string>() : v.dump();
  try {
    Rat r = Rat::parse(literal);
    return {literal, r};
  } catch (const Error& e) {
    throw ConfigError("bad value '" + literal + "' in " + where + ": " +
                      e.what());
  }
}

AlgorithmKind algorithm_kind(const std::string& name) {
  if (name == "ols") return AlgorithmKind::Ols;
  if (name == "theilsen") return AlgorithmKind::TheilSen;
  if (name == "noisystats") return AlgorithmKind::NoisyStats;
  if (name == "noisyintercept") return AlgorithmKind::NoisyIntercept;
  if (name == "dpexptheilsen") return AlgorithmKind::DpExpTheilSen;
  if (name == "dpwidetheilsen") return AlgorithmKind::DpWideTheilSen;
  if (name == "dpsstheilsen") return AlgorithmKind::DpSsTheilSen;
  if (name == "dpgdpure") return AlgorithmKind::DpGdPure;
  if (name == "dpgdapprox") return AlgorithmKind::DpGdApprox;
  if (name == "dpgdzcdp") return AlgorithmKind::DpGdZcdp;
  if (name == "oimos") return AlgorithmKind::OiMos;
  throw ConfigError("unknown algorithm '" + name + "'");
}

AlgorithmSpec parse_algorithm(const ordered_json& obj) {
  check_keys(obj,
             {"name", "matchings", "range", "theta", "d", "beta", "iterations",
              "tau", "delta"},
             "algorithm");
  if (!obj.contains("name")) throw ConfigError("algorithm without 'name'");
  AlgorithmSpec spec;
  spec.key = obj.at("name").get<std::string>();
  spec.kind = algorithm_kind(spec.key);
  if (obj.contains("matchings")) {
    const auto& m = obj.at("matchings");
    if (m.is_string()) {
      if (m.get<std::string>() != "all") {
        throw ConfigError("matchings must be \"all\" or a positive integer");
      }
      spec.matchings = 0;
    } else {
      spec.matchings = m.get<std::size_t>();
      if (spec.matchings == 0) throw ConfigError("matchings must be >= 1");
    }
  }
  if (obj.contains("range")) {
    const auto& r = obj.at("range");
    if (!r.is_array() || r.size() != 2) {
      throw ConfigError("range must be [r_l, r_u]");
    }
    spec.r_l = r[0].get<double>();
    spec.r_u = r[1].get<double>();
    if (!(*spec.r_l < *spec.r_u)) throw ConfigError("range needs r_l < r_u");
  }
  if (obj.contains("theta")) spec.theta = obj.at("theta").get<double>();
  if (obj.contains("d")) spec.d = obj.at("d").get<int>();
  if (obj.contains("beta")) spec.beta = obj.at("beta").get<double>();
  if (obj.contains("iterations")) {
    spec.iterations = obj.at("iterations").get<std::size_t>();
  }
  if (obj.contains("tau")) spec.tau = obj.at("tau").get<double>();
  if (obj.contains("delta")) {
    spec.delta = parse_budget_value(obj.at("delta"), "delta").second;
  }
  if (spec.theta < 0) throw ConfigError("theta must be >= 0");
  if (spec.d < 1) throw ConfigError("d must be >= 1");
  if (!(spec.beta > 0 && spec.beta < 1)) throw ConfigError("beta in (0,1)");
  if (spec.iterations < 2 || spec.iterations % 2 != 0) {
    throw ConfigError("iterations must be even and >= 2");
  }
  if (!(spec.tau > 0)) throw ConfigError("tau must be > 0");
  return spec;
}

InputSpec parse_input(const ordered_json& obj) {
  check_keys(obj,
             {"type", "paths", "strict", "n", "sigma_x2", "sigma_e2", "alpha",
              "beta", "xbar", "x_new", "datasets", "tracts"},
             "input");
  InputSpec input;
  std::string type = obj.value("type", std::string("synthetic"));
  if (type == "csv") {
    input.kind = InputSpec::Kind::Csv;
    if (!obj.contains("paths")) throw ConfigError("csv input needs 'paths'");
    for (const auto& p : obj.at("paths")) {
      input.csv_paths.push_back(p.get<std::string>());
    }
    input.strict_csv = obj.value("strict", false);
  } else if (type == "synthetic") {
    input.kind = InputSpec::Kind::Synthetic;
    auto& s = input.synthetic;
    s.n = obj.value("n", s.n);
    s.sigma_x2 = obj.value("sigma_x2", s.sigma_x2);
    s.sigma_e2 = obj.value("sigma_e2", s.sigma_e2);
    s.alpha = obj.value("alpha", s.alpha);
    s.beta = obj.value("beta", s.beta);
    s.xbar = obj.value("xbar", s.xbar);
    s.x_new = obj.value("x_new", s.x_new);
    input.synthetic_datasets = obj.value("datasets", input.synthetic_datasets);
  } else if (type == "oi_family") {
    input.kind = InputSpec::Kind::OiFamily;
    input.oi_tracts = obj.value("tracts", input.oi_tracts);
    if (input.oi_tracts == 0) throw ConfigError("tracts must be >= 1");
  } else {
    throw ConfigError("input type must be csv | synthetic | oi_family");
  }
  return input;
}

}  // namespace

std::string AlgorithmSpec::display_name() const {
  std::string base;
  switch (kind) {
    case AlgorithmKind::Ols:
      return "OLS";
    case AlgorithmKind::TheilSen:
      base = "TheilSen";
      break;
    case AlgorithmKind::NoisyStats:
      return "NoisyStats";
    case AlgorithmKind::NoisyIntercept:
      return "NoisyIntercept";
    case AlgorithmKind::DpExpTheilSen:
      base = "DPExpTheilSen";
      break;
    case AlgorithmKind::DpWideTheilSen:
      base = "DPWideTheilSen";
      break;
    case AlgorithmKind::DpSsTheilSen:
      base = "DPSSTheilSen";
      break;
    case AlgorithmKind::DpGdPure:
      return "DPGDPure";
    case AlgorithmKind::DpGdApprox:
      return "DPGDApprox";
    case AlgorithmKind::DpGdZcdp:
      return "DPGDzCDP";
    case AlgorithmKind::OiMos:
      return "OI-MOS";
  }
  if (matchings == 0) return base;
  if (matchings == 1) return base + "Match";
  return base + std::to_string(matchings) + "Match";
}

ExperimentConfig parse_config_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc,
             {"seed", "trials", "q", "epsilons", "input", "algorithms", "sweep",
              "out", "workers", "suppress_timestamps"},
             "config");
  ExperimentConfig config;
  config.seed = doc.value("seed", std::uint64_t{0});
  config.trials = doc.value("trials", std::size_t{100});
  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  if (doc.contains("q")) {
    config.qs.clear();
    for (const auto& q : doc.at("q")) {
      double v = q.get<double>();
      if (v < 0 || v > 100) throw ConfigError("q values must be in [0,100]");
      config.qs.push_back(v);
    }
  }
  if (doc.contains("epsilons")) {
    for (const auto& e : doc.at("epsilons")) {
      auto [literal, value] = parse_budget_value(e, "epsilons");
      if (!(value.to_double() > 0)) throw ConfigError("epsilon must be > 0");
      config.epsilons.emplace_back(literal, value);
    }
  }
  if (doc.contains("input")) config.input = parse_input(doc.at("input"));
  if (doc.contains("algorithms")) {
    for (const auto& a : doc.at("algorithms")) {
      config.algorithms.push_back(parse_algorithm(a));
    }
  }
  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    check_keys(s, {"parameter", "values", "datasets", "trials"}, "sweep");
    SweepSpec sweep;
    sweep.parameter = s.at("parameter").get<std::string>();
    if (sweep.parameter != "n" && sweep.parameter != "sigma_x2" &&
        sweep.parameter != "sigma_e2" && sweep.parameter != "epsilon" &&
        sweep.parameter != "x_new") {
      throw ConfigError("sweep parameter must be one of n | sigma_x2 | "
                        "sigma_e2 | epsilon | x_new");
    }
    for (const auto& v : s.at("values")) sweep.values.push_back(v.get<double>());
    if (sweep.values.empty()) throw ConfigError("sweep values must be non-empty");
    sweep.datasets = s.value("datasets", sweep.datasets);
    sweep.trials = s.value("trials", sweep.trials);
    config.sweep = sweep;
  }
  config.out_dir = doc.value("out", config.out_dir);
  config.workers = doc.value("workers", std::size_t{0});
  config.suppress_timestamps = doc.value("suppress_timestamps", false);

  if (config.algorithms.empty()) throw ConfigError("no algorithms configured");
  bool needs_eps = false;
  for (const auto& a : config.algorithms) needs_eps |= a.is_private();
  if (needs_eps && config.epsilons.empty() &&
      (!config.sweep || config.sweep->parameter != "epsilon")) {
    throw ConfigError("private algorithms need an 'epsilons' list");
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_overrides(ExperimentConfig& config, const CliOverrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.trials) config.trials = *overrides.trials;
  if (!overrides.epsilons.empty()) {
    config.epsilons.clear();
    for (const auto& e : overrides.epsilons) {
      Rat value = Rat::parse(e);
      if (!(value.to_double() > 0)) throw ConfigError("epsilon must be > 0");
      config.epsilons.emplace_back(e, value);
    }
  }
  if (!overrides.algos.empty()) {
    std::vector<AlgorithmSpec> kept;
    for (const auto& a : config.algorithms) {
      if (std::find(overrides.algos.begin(), overrides.algos.end(), a.key) !=
          overrides.algos.end()) {
        kept.push_back(a);
      }
    }
    if (kept.empty()) throw ConfigError("--algo filter matched nothing");
    config.algorithms = std::move(kept);
  }
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.workers) config.workers = *overrides.workers;
  if (overrides.strict_csv) config.input.strict_csv = true;
  if (overrides.suppress_timestamps) config.suppress_timestamps = true;
}

//===----------------------------------------------------------------------===//
// Input loading
//===----------------------------------------------------------------------===//

LoadedInput load_input(const ExperimentConfig& config) {
  LoadedInput loaded;
  RandomSeed base{config.seed, 0};
  switch (config.input.kind) {
    case InputSpec::Kind::Csv: {
      for (const auto& path : config.input.csv_paths) {
        Dataset d = read_dataset_csv_file(path, config.input.strict_csv
                                                    ? RangePolicy::Reject
                                                    : RangePolicy::Clip);
        loaded.datasets.push_back(
            NamedDataset{fs::path(path).stem().string(), std::move(d), {}});
      }
      break;
    }
    case InputSpec::Kind::Synthetic: {
      RandomSeed gen = derive_stream(base, "datagen");
      for (std::size_t i = 0; i < config.input.synthetic_datasets; ++i) {
        auto data = gen_synthetic(config.input.synthetic, derive_stream(gen, i));
        loaded.datasets.push_back(NamedDataset{
            "synthetic" + std::to_string(i), std::move(data.dataset),
            data.truth});
      }
      break;
    }
    case InputSpec::Kind::OiFamily: {
      RandomSeed gen = derive_stream(base, "oi-family");
      RngStream spec_rng(derive_stream(gen, "tract-specs"));
      std::vector<TractSpec> specs;
      specs.reserve(config.input.oi_tracts);
      for (std::size_t t = 0; t < config.input.oi_tracts; ++t) {
        TractSpec spec;
        // Mostly tracts whose income spread is on the order of the
        // between-tract spread, plus a tail of near-degenerate tracts where
        // every parent earns almost the same (the nvar(x) ~ 0 tracts census
        // families exhibit). The degenerate ones sit near the middle of the
        // income range so they straddle the state median.
        if (spec_rng.below(5) == 0) {
          spec.mu = spec_rng.uniform(45.0, 65.0);
          spec.var_mu = std::exp(
              spec_rng.uniform(std::log(0.05), std::log(5.0)));
        } else {
          spec.mu = spec_rng.uniform(30.0, 80.0);
          spec.var_mu = spec_rng.uniform(50.0, 250.0);
        }
        spec.beta_tm = spec_rng.uniform(0.2, 0.5);
        spec.alpha_tm = (1.0 - spec.beta_tm) * std::log(spec.mu) +
                        spec_rng.uniform(-0.1, 0.1);
        specs.push_back(spec);
      }
      TractFamily family =
          gen_oi_family("sim", specs, derive_stream(gen, "tracts"));
      for (const auto& [id, tract] : family.tracts) {
        loaded.datasets.push_back(NamedDataset{id, tract, {}});
      }
      loaded.family = std::move(family);
      break;
    }
  }
  if (loaded.datasets.empty()) throw ConfigError("input produced no datasets");
  return loaded;
}

//===----------------------------------------------------------------------===//
// Running releases
//===----------------------------------------------------------------------===//

namespace {

std::size_t resolve_k(const AlgorithmSpec& algo, std::size_t n) {
  std::size_t all = (n % 2 == 0) ? n - 1 : n;
  if (algo.matchings == 0) return all;
  if (algo.matchings > all) {
    throw ConfigError("matchings=" + std::to_string(algo.matchings) +
                      " exceeds the " + std::to_string(all) +
                      " matchings of n=" + std::to_string(n));
  }
  return algo.matchings;
}

std::pair<double, double> resolve_range(const AlgorithmSpec& algo,
                                        const InputSpec& input) {
  // Hyperparameter defaults: [-2, 2] on synthetic data, [-0.5, 1.5] on
  // real/OI data.
  if (algo.r_l && algo.r_u) return {*algo.r_l, *algo.r_u};
  if (input.kind == InputSpec::Kind::Synthetic) return {-2.0, 2.0};
  return {-0.5, 1.5};
}

PrivacyBudget algorithm_budget(const AlgorithmSpec& algo, const Rat& eps) {
  switch (algo.kind) {
    case AlgorithmKind::DpGdApprox:
      return PrivacyBudget::approx(eps, algo.delta);
    case AlgorithmKind::DpGdZcdp:
      // Fair-comparison convention: run at rho = eps^2 / 2.
      return PrivacyBudget::zcdp(eps * eps / Rat(2));
    default:
      return PrivacyBudget::pure(eps);
  }
}

std::optional<PredictionPair> run_release(const AlgorithmSpec& algo,
                                          const Dataset& d, const Rat& eps,
                                          double r_l, double r_u,
                                          RandomSeed seed, BudgetLedger* ledger,
                                          const MatchingSchedule* schedule) {
  try {
    switch (algo.kind) {
      case AlgorithmKind::Ols:
        return ols_predictions(ols_fit(d));
      case AlgorithmKind::TheilSen: {
        std::size_t k = resolve_k(algo, d.size());
        if (schedule != nullptr && schedule->n == d.size()) {
          return theilsen_fit(pairwise_estimates(d, *schedule, k, seed));
        }
        auto local = matching_schedule(d.size());
        return theilsen_fit(pairwise_estimates(d, local, k, seed));
      }
      case AlgorithmKind::NoisyStats:
        return noisy_stats(d, eps, seed, ledger).result;
      case AlgorithmKind::NoisyIntercept:
        return noisy_intercept(d, eps, seed, ledger);
      case AlgorithmKind::DpExpTheilSen:
        return dp_theilsen(d, eps, resolve_k(algo, d.size()),
                           MedianVariant::exp_mech(), r_l, r_u, seed, ledger,
                           schedule);
      case AlgorithmKind::DpWideTheilSen:
        return dp_theilsen(d, eps, resolve_k(algo, d.size()),
                           MedianVariant::wide(algo.theta), r_l, r_u, seed,
                           ledger, schedule);
      case AlgorithmKind::DpSsTheilSen:
        return dp_theilsen(d, eps, resolve_k(algo, d.size()),
                           MedianVariant::smooth_sens(algo.d, algo.beta), r_l,
                           r_u, seed, ledger, schedule);
      case AlgorithmKind::DpGdPure:
      case AlgorithmKind::DpGdApprox:
      case AlgorithmKind::DpGdZcdp: {
        GradDescentParams params;
        params.iterations = algo.iterations;
        params.tau = algo.tau;
        return dp_grad_descent(d, algorithm_budget(algo, eps), params, seed,
                               ledger);
      }
      case AlgorithmKind::OiMos:
        throw ConfigError("OI-MOS runs at the family level");
    }
  } catch (const DegenerateX&) {
    return std::nullopt;
  } catch (const NoValidPairs&) {
    return std::nullopt;
  }
  return std::nullopt;
}

struct CellTask {
  std::size_t cell_index;
  std::size_t dataset_index;
};

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return s;
}

std::string timestamp_line() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return std::string("# generated ") + buf;
}

}  // namespace

double synthetic_sigma(const SyntheticSpec& spec, double x_new) {
  double dx = x_new - spec.xbar;
  double n = static_cast<double>(spec.n);
  return std::sqrt(spec.sigma_e2 *
                   (1.0 / n + dx * dx / (n * spec.sigma_x2)));
}

FitResult run_fit(const ExperimentConfig& config) {
  LoadedInput input = load_input(config);
  RandomSeed base{config.seed, 0};

  // Baselines run once under a "nonprivate" pseudo-epsilon; private
  // algorithms run once per configured epsilon.
  struct CellPlan {
    AlgorithmSpec algo;
    std::string eps_literal;
    Rat eps;
  };
  std::vector<CellPlan> plans;
  for (const auto& algo : config.algorithms) {
    if (!algo.is_private()) {
      plans.push_back(CellPlan{algo, "nonprivate", Rat(1)});
    } else {
      for (const auto& [literal, eps] : config.epsilons) {
        plans.push_back(CellPlan{algo, literal, eps});
      }
    }
  }

  FitResult result;
  result.cells.resize(plans.size());
  std::vector<std::vector<std::vector<TrialRow>>> rows(plans.size());

  // Precompute per-dataset reference values once.
  std::vector<PredictionPair> ols_baselines(input.datasets.size());
  std::vector<std::pair<double, double>> sigmas(input.datasets.size());
  for (std::size_t di = 0; di < input.datasets.size(); ++di) {
    const auto& d = input.datasets[di].data;
    try {
      auto fit = ols_fit(d);
      auto stats = sufficient_stats(d);
      ols_baselines[di] = ols_predictions(fit);
      if (d.size() >= 3) {
        sigmas[di] = {ols_standard_error(fit, stats, 0.25),
                      ols_standard_error(fit, stats, 0.75)};
      }
    } catch (const DegenerateX&) {
      ols_baselines[di] = PredictionPair{0.0, 0.0};
      sigmas[di] = {0.0, 0.0};
    }
  }

  for (std::size_t ci = 0; ci < plans.size(); ++ci) {
    auto& cell = result.cells[ci];
    cell.algorithm = plans[ci].algo.display_name();
    cell.epsilon = plans[ci].eps_literal;
    cell.budget = plans[ci].algo.is_private()
                      ? algorithm_budget(plans[ci].algo, plans[ci].eps)
                      : PrivacyBudget::pure(Rat(0));
    cell.reports.resize(input.datasets.size());
    rows[ci].resize(input.datasets.size());
  }

  auto run_dataset_cell = [&](std::size_t ci, std::size_t di) {
    const CellPlan& plan = plans[ci];
    const NamedDataset& nd = input.datasets[di];
    auto [r_l, r_u] = resolve_range(plan.algo, config.input);
    RandomSeed cell_seed = derive_stream(
        base, plan.algo.display_name() + "|" + plan.eps_literal);
    RandomSeed data_seed = derive_stream(cell_seed, nd.id);

    // The K_n decomposition only depends on n; build it once per dataset.
    MatchingSchedule schedule;
    const MatchingSchedule* schedule_ptr = nullptr;
    if (plan.algo.kind == AlgorithmKind::TheilSen ||
        plan.algo.kind == AlgorithmKind::DpExpTheilSen ||
        plan.algo.kind == AlgorithmKind::DpWideTheilSen ||
        plan.algo.kind == AlgorithmKind::DpSsTheilSen) {
      schedule = matching_schedule(nd.data.size());
      schedule_ptr = &schedule;
    }

    TrialReport report;
    report.dataset_id = nd.id;
    report.algorithm = plan.algo.display_name();
    report.ols_baseline = ols_baselines[di];
    report.sigma_hat = sigmas[di];
    report.truth = nd.truth;
    auto& out_rows = rows[ci][di];
    out_rows.reserve(config.trials);
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      BudgetLedger ledger(plan.algo.is_private()
                              ? algorithm_budget(plan.algo, plan.eps)
                              : PrivacyBudget::pure(Rat(0)));
      auto t0 = std::chrono::steady_clock::now();
      auto release = run_release(
          plan.algo, nd.data, plan.eps, r_l, r_u,
          derive_stream(data_seed, trial),
          plan.algo.is_private() ? &ledger : nullptr, schedule_ptr);
      auto t1 = std::chrono::steady_clock::now();
      report.trials.push_back(release);
      TrialRow row;
      row.dataset_id = nd.id;
      row.algorithm = report.algorithm;
      row.epsilon = plan.eps_literal;
      row.trial = trial;
      row.release = release;
      row.wall_us =
          config.suppress_timestamps
              ? 0
              : std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0)
                    .count();
      out_rows.push_back(std::move(row));
      if (trial == 0 && plan.algo.is_private()) {
        result.cells[ci].ledger = ledger.entries();
      }
    }
    result.cells[ci].reports[di] = std::move(report);
  };

  // OI-MOS releases the whole family at once per trial.
  auto run_mos_cell = [&](std::size_t ci) {
    const CellPlan& plan = plans[ci];
    if (!input.family.has_value()) {
      throw ConfigError("oimos needs an oi_family input");
    }
    RandomSeed cell_seed = derive_stream(
        base, plan.algo.display_name() + "|" + plan.eps_literal);
    for (std::size_t di = 0; di < input.datasets.size(); ++di) {
      auto& report = result.cells[ci].reports[di];
      report.dataset_id = input.datasets[di].id;
      report.algorithm = plan.algo.display_name();
      report.ols_baseline = ols_baselines[di];
      report.sigma_hat = sigmas[di];
    }
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      BudgetLedger ledger(algorithm_budget(plan.algo, plan.eps));
      auto t0 = std::chrono::steady_clock::now();
      MosRelease mos = mos_release(*input.family, plan.eps,
                                   derive_stream(cell_seed, trial), &ledger);
      auto t1 = std::chrono::steady_clock::now();
      std::int64_t us =
          config.suppress_timestamps
              ? 0
              : std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0)
                    .count();
      for (std::size_t di = 0; di < mos.tracts.size(); ++di) {
        result.cells[ci].reports[di].trials.push_back(mos.tracts[di].second);
        TrialRow row;
        row.dataset_id = mos.tracts[di].first;
        row.algorithm = plan.algo.display_name();
        row.epsilon = plan.eps_literal;
        row.trial = trial;
        row.release = mos.tracts[di].second;
        row.wall_us = us;
        rows[ci][di].push_back(std::move(row));
      }
      if (trial == 0) result.cells[ci].ledger = ledger.entries();
    }
  };

  // Fan out (cell, dataset) units over a worker pool; per-trial seeds are
  // derived from (config seed, dataset id, trial), so scheduling order does
  // not affect any output.
  std::vector<CellTask> tasks;
  for (std::size_t ci = 0; ci < plans.size(); ++ci) {
    if (plans[ci].algo.kind == AlgorithmKind::OiMos) continue;
    for (std::size_t di = 0; di < input.datasets.size(); ++di) {
      tasks.push_back(CellTask{ci, di});
    }
  }
  std::size_t workers = config.workers == 0
                            ? std::max<std::size_t>(
                                  1, std::thread::hardware_concurrency())
                            : config.workers;
  workers = std::min(workers, std::max<std::size_t>(1, tasks.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string failure_message;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size() || failed.load()) return;
      try {
        run_dataset_cell(tasks[i].cell_index, tasks[i].dataset_index);
      } catch (const std::exception& e) {
        std::scoped_lock lock(failure_mutex);
        failed.store(true);
        failure_message = e.what();
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw Error("trial execution failed: " + failure_message);

  for (std::size_t ci = 0; ci < plans.size(); ++ci) {
    if (plans[ci].algo.kind == AlgorithmKind::OiMos) run_mos_cell(ci);
  }

  for (std::size_t ci = 0; ci < plans.size(); ++ci) {
    for (auto& per_dataset : rows[ci]) {
      for (auto& row : per_dataset) result.rows.push_back(std::move(row));
    }
  }
  return result;
}

//===----------------------------------------------------------------------===//
// Output files
//===----------------------------------------------------------------------===//

namespace {

ordered_json budget_json(const PrivacyBudget& b) {
  ordered_json j;
  j["flavor"] = b.flavor_name();
  j["epsilon"] = b.epsilon.to_string();
  j["delta"] = b.delta.to_string();
  j["rho"] = b.rho.to_string();
  return j;
}

}  // namespace

void write_fit_outputs(const ExperimentConfig& config, const FitResult& result) {
  fs::create_directories(config.out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(config.out_dir) / name);
    if (!out) throw Error("cannot write " + name + " in " + config.out_dir);
    return out;
  };

  {
    auto out = open("trials.csv");
    if (!config.suppress_timestamps) out << timestamp_line() << '\n';
    out << "dataset,algorithm,epsilon,trial,p25,p75,failed,wall_us\n";
    for (const auto& row : result.rows) {
      out << row.dataset_id << ',' << row.algorithm << ',' << row.epsilon << ','
          << row.trial << ',';
      if (row.release) {
        out << format_double(row.release->p25) << ','
            << format_double(row.release->p75) << ",0,";
      } else {
        out << ",,1,";
      }
      out << row.wall_us << '\n';
    }
  }

  bool any_truth = false;
  for (const auto& cell : result.cells) {
    for (const auto& report : cell.reports) any_truth |= report.truth.has_value();
  }

  auto write_metrics = [&](const std::string& name, Reference vs) {
    auto out = open(name);
    if (!config.suppress_timestamps) out << timestamp_line() << '\n';
    out << "dataset,algorithm,epsilon,q,c_q,sigma_hat,ratio\n";
    for (const auto& cell : result.cells) {
      for (const auto& report : cell.reports) {
        if (vs == Reference::Truth && !report.truth.has_value()) continue;
        for (double q : config.qs) {
          double c;
          try {
            c = empirical_error_bound(report, q, Which::P25, vs);
          } catch (const AllFailures&) {
            continue;  // structurally suppressed (e.g. ineligible MOS tract)
          }
          double sigma = report.sigma_hat.first;
          out << report.dataset_id << ',' << report.algorithm << ','
              << cell.epsilon << ',' << format_double(q) << ','
              << format_double(c) << ',' << format_double(sigma) << ','
              << format_double(sigma > 0 ? c / sigma
                                         : std::numeric_limits<double>::quiet_NaN())
              << '\n';
        }
      }
    }
  };
  write_metrics("metrics.csv", Reference::Ols);
  if (any_truth) write_metrics("metrics_true.csv", Reference::Truth);

  // Family inputs get one ratio-CDF file per (algorithm, epsilon); single
  // datasets get the output-distribution CDF instead.
  for (const auto& cell : result.cells) {
    std::string stem = sanitize(cell.algorithm) + "_" + sanitize(cell.epsilon);
    if (cell.reports.size() > 1) {
      std::vector<TrialReport> usable;
      for (const auto& report : cell.reports) {
        bool all_failed = true;
        for (const auto& t : report.trials) all_failed &= !t.has_value();
        if (!all_failed) usable.push_back(report);
      }
      if (usable.empty()) continue;
      auto cdf = ratio_cdf(usable, config.qs.front());
      auto out = open("ratio_cdf_" + stem + ".csv");
      if (!config.suppress_timestamps) out << timestamp_line() << '\n';
      out << "ratio,cdf\n";
      for (const auto& [ratio, frac] : cdf.points) {
        out << format_double(ratio) << ',' << format_double(frac) << '\n';
      }
    } else if (cell.reports.size() == 1) {
      std::vector<double> outputs;
      for (const auto& t : cell.reports.front().trials) {
        if (t.has_value()) outputs.push_back(t->p25);
      }
      if (outputs.empty()) continue;
      std::sort(outputs.begin(), outputs.end());
      auto out = open("output_cdf_" + stem + ".csv");
      if (!config.suppress_timestamps) out << timestamp_line() << '\n';
      out << "p25,cdf\n";
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        out << format_double(outputs[i]) << ','
            << format_double(static_cast<double>(i + 1) /
                             static_cast<double>(outputs.size()))
            << '\n';
      }
    }
  }

  // Run-level JSON summary.
  ordered_json summary;
  summary["schema_version"] = 1;
  if (!config.suppress_timestamps) summary["generated"] = timestamp_line();
  summary["seed"] = config.seed;
  summary["trials"] = config.trials;
  summary["q"] = config.qs;
  ordered_json cells = ordered_json::array();
  for (const auto& cell : result.cells) {
    ordered_json jc;
    jc["algorithm"] = cell.algorithm;
    jc["epsilon"] = cell.epsilon;
    jc["budget"] = budget_json(cell.budget);
    ordered_json ledger = ordered_json::array();
    Rat spent_eps, spent_delta, spent_rho;
    for (const auto& entry : cell.ledger) {
      ordered_json je;
      je["mechanism"] = entry.mechanism;
      je["spent"] = budget_json(entry.spent);
      ledger.push_back(je);
      spent_eps = spent_eps + entry.spent.epsilon;
      spent_delta = spent_delta + entry.spent.delta;
      spent_rho = spent_rho + entry.spent.rho;
    }
    jc["ledger"] = ledger;
    jc["ledger_spent_epsilon"] = spent_eps.to_string();
    jc["ledger_spent_delta"] = spent_delta.to_string();
    jc["ledger_spent_rho"] = spent_rho.to_string();
    jc["ledger_within_budget"] = !(spent_eps > cell.budget.epsilon ||
                                   spent_delta > cell.budget.delta ||
                                   spent_rho > cell.budget.rho);
    ordered_json datasets = ordered_json::array();
    for (const auto& report : cell.reports) {
      ordered_json jd;
      jd["dataset"] = report.dataset_id;
      std::size_t failures = 0;
      for (const auto& t : report.trials) failures += !t.has_value();
      jd["failure_rate"] = report.trials.empty()
                               ? 0.0
                               : static_cast<double>(failures) /
                                     static_cast<double>(report.trials.size());
      jd["sigma_hat_p25"] = report.sigma_hat.first;
      ordered_json bounds;
      for (double q : config.qs) {
        try {
          bounds[format_double(q)] =
              empirical_error_bound(report, q, Which::P25, Reference::Ols);
        } catch (const AllFailures&) {
          bounds[format_double(q)] = "all_failed";
        }
      }
      jd["c_q_p25_vs_ols"] = bounds;
      datasets.push_back(jd);
    }
    jc["datasets"] = datasets;
    cells.push_back(jc);
  }
  summary["cells"] = cells;
  auto out = open("summary.json");
  out << summary.dump(2) << '\n';
}

//===----------------------------------------------------------------------===//
// Sweeps
//===----------------------------------------------------------------------===//

namespace {

double interp_prediction(const PredictionPair& p, double x_new) {
  // Line through (0.25, p25) and (0.75, p75).
  return p.p25 * (1.5 - 2.0 * x_new) + p.p75 * (2.0 * x_new - 0.5);
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config) {
  if (!config.sweep.has_value()) throw ConfigError("run_sweep without 'sweep'");
  if (config.input.kind != InputSpec::Kind::Synthetic) {
    throw ConfigError("sweeps run on synthetic input");
  }
  const SweepSpec& sweep = *config.sweep;

  SweepResult result;
  for (double value : sweep.values) {
    ExperimentConfig point = config;
    point.sweep.reset();
    point.trials = sweep.trials;
    point.input.synthetic_datasets = sweep.datasets;
    if (sweep.parameter == "n") {
      point.input.synthetic.n = static_cast<std::size_t>(value);
    } else if (sweep.parameter == "sigma_x2") {
      point.input.synthetic.sigma_x2 = value;
    } else if (sweep.parameter == "sigma_e2") {
      point.input.synthetic.sigma_e2 = value;
    } else if (sweep.parameter == "x_new") {
      point.input.synthetic.x_new = value;
    } else {  // epsilon
      point.epsilons = {{format_double(value), Rat::parse(format_double(value))}};
    }
    // Grid points draw independent datasets; fold the grid value and the
    // configured seed into one 64-bit stream seed.
    point.seed = RngStream(derive_stream(RandomSeed{config.seed, 0},
                                         "sweep:" + format_double(value)))
                     .next_u64();

    FitResult fit = run_fit(point);
    double x_new = point.input.synthetic.x_new;
    double truth = point.input.synthetic.alpha * x_new +
                   point.input.synthetic.beta;
    double sigma = synthetic_sigma(point.input.synthetic, x_new);
    for (const auto& cell : fit.cells) {
      double ratio_sum = 0.0;
      std::size_t ratio_count = 0;
      std::size_t failures = 0, total = 0;
      for (const auto& report : cell.reports) {
        std::vector<double> errors;
        errors.reserve(report.trials.size());
        for (const auto& trial : report.trials) {
          ++total;
          if (trial.has_value()) {
            errors.push_back(std::fabs(interp_prediction(*trial, x_new) - truth));
          } else {
            ++failures;
            errors.push_back(std::numeric_limits<double>::infinity());
          }
        }
        try {
          double c = error_bound(std::move(errors), config.qs.front());
          ratio_sum += c / sigma;
          ++ratio_count;
        } catch (const AllFailures&) {
        }
      }
      SweepRow row;
      row.value = value;
      row.algorithm = cell.algorithm;
      row.mean_ratio_true =
          ratio_count > 0 ? ratio_sum / static_cast<double>(ratio_count)
                          : std::numeric_limits<double>::infinity();
      row.failure_rate =
          total > 0 ? static_cast<double>(failures) / static_cast<double>(total)
                    : 0.0;
      result.rows.push_back(row);
    }
  }
  return result;
}

void write_sweep_outputs(const ExperimentConfig& config,
                         const SweepResult& result) {
  fs::create_directories(config.out_dir);
  std::ofstream out(fs::path(config.out_dir) / "sweep.csv");
  if (!out) throw Error("cannot write sweep.csv in " + config.out_dir);
  if (!config.suppress_timestamps) out << timestamp_line() << '\n';
  out << "parameter,value,algorithm,mean_ratio_true,failure_rate\n";
  for (const auto& row : result.rows) {
    out << config.sweep->parameter << ',' << format_double(row.value) << ','
        << row.algorithm << ',' << format_double(row.mean_ratio_true) << ','
        << format_double(row.failure_rate) << '\n';
  }
}

//===----------------------------------------------------------------------===//
// datagen + ledger subcommands
//===----------------------------------------------------------------------===//

void run_datagen(const ExperimentConfig& config) {
  if (config.input.kind == InputSpec::Kind::Csv) {
    throw ConfigError("datagen needs a synthetic or oi_family input");
  }
  fs::create_directories(config.out_dir);
  LoadedInput input = load_input(config);
  ordered_json manifest;
  manifest["schema_version"] = 1;
  manifest["seed"] = config.seed;
  ordered_json list = ordered_json::array();
  for (const auto& nd : input.datasets) {
    std::string name = sanitize(nd.id) + ".csv";
    write_dataset_csv_file((fs::path(config.out_dir) / name).string(), nd.data);
    ordered_json jd;
    jd["id"] = nd.id;
    jd["file"] = name;
    jd["n"] = nd.data.size();
    if (nd.truth) {
      jd["truth_p25"] = nd.truth->p25;
      jd["truth_p75"] = nd.truth->p75;
    }
    list.push_back(jd);
  }
  manifest["datasets"] = list;
  std::ofstream out(fs::path(config.out_dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::string render_ledger(const ExperimentConfig& config) {
  // Run each private algorithm once on a small input to materialize its
  // per-release ledger entries; the entries depend only on hyperparameters.
  std::ostringstream os;
  ExperimentConfig small = config;
  if (small.input.kind == InputSpec::Kind::Synthetic) {
    std::size_t max_k = 0;
    for (const auto& algo : config.algorithms) {
      max_k = std::max(max_k, algo.matchings);
    }
    small.input.synthetic_datasets = 1;
    small.input.synthetic.n = std::max<std::size_t>(8, max_k + 2);
  } else if (small.input.kind == InputSpec::Kind::OiFamily) {
    small.input.oi_tracts = std::min<std::size_t>(small.input.oi_tracts, 3);
  }
  LoadedInput input = load_input(small);
  const Dataset& probe = input.datasets.front().data;

  for (const auto& algo : config.algorithms) {
    if (!algo.is_private()) {
      os << algo.display_name() << ": non-private baseline, no budget\n";
      continue;
    }
    for (const auto& [literal, eps] : config.epsilons) {
      PrivacyBudget total = algorithm_budget(algo, eps);
      BudgetLedger ledger(total);
      auto [r_l, r_u] = resolve_range(algo, small.input);
      if (algo.kind == AlgorithmKind::OiMos) {
        if (!input.family) throw ConfigError("oimos needs an oi_family input");
        mos_release(*input.family, eps, RandomSeed{config.seed, 0}, &ledger);
      } else {
        run_release(algo, probe, eps, r_l, r_u, RandomSeed{config.seed, 0},
                    &ledger, nullptr);
      }
      os << algo.display_name() << " @ epsilon=" << literal << " ["
         << total.flavor_name() << ", eps=" << total.epsilon.to_string()
         << ", delta=" << total.delta.to_string()
         << ", rho=" << total.rho.to_string() << "]\n";
      for (const auto& entry : ledger.entries()) {
        os << "  " << entry.mechanism << ": eps="
           << entry.spent.epsilon.to_string()
           << " delta=" << entry.spent.delta.to_string()
           << " rho=" << entry.spent.rho.to_string() << '\n';
      }
      os << "  total spent: eps=" << ledger.spent_epsilon().to_string()
         << " delta=" << ledger.spent_delta().to_string()
         << " rho=" << ledger.spent_rho().to_string() << " (within budget)\n";
    }
  }
  return os.str();
}

}  // namespace dpslr::cli
