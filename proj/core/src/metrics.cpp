#include "dpslr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "dpslr/errors.hpp"

namespace dpslr {

namespace {

double pick(const PredictionPair& p, Which which) {
  return which == Which::P25 ? p.p25 : p.p75;
}

}  // namespace

double error_bound(std::vector<double> absolute_errors, double q) {
  if (absolute_errors.empty()) throw EmptyInput("error bound: no trials");
  if (q < 0 || q > 100) throw InvalidValue("error bound: q must be in [0,100]");
  if (q == 0) return 0.0;  // c = 0 already covers "at least 0% of trials"
  std::size_t failures = 0;
  for (double e : absolute_errors) {
    if (std::isinf(e)) ++failures;
  }
  if (failures == absolute_errors.size()) {
    throw AllFailures("error bound: every trial failed");
  }
  std::sort(absolute_errors.begin(), absolute_errors.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(q / 100.0 * static_cast<double>(absolute_errors.size())));
  return absolute_errors[rank - 1];
}

double empirical_error_bound(const TrialReport& report, double q, Which which,
                             Reference vs) {
  if (report.trials.empty()) throw EmptyInput("error bound: no trials");
  if (vs == Reference::Truth && !report.truth.has_value()) {
    throw InvalidValue("error bound: truth unavailable for dataset " +
                       report.dataset_id);
  }
  double ref = pick(vs == Reference::Ols ? report.ols_baseline : *report.truth,
                    which);

  std::vector<double> errors;
  errors.reserve(report.trials.size());
  for (const auto& trial : report.trials) {
    if (trial.has_value()) {
      errors.push_back(std::fabs(pick(*trial, which) - ref));
    } else {
      errors.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return error_bound(std::move(errors), q);
}

RatioCdf ratio_cdf(const std::vector<TrialReport>& reports, double q,
                   Which which, Reference vs) {
  RatioCdf out;
  std::vector<double> ratios;
  for (const auto& report : reports) {
    double sigma =
        which == Which::P25 ? report.sigma_hat.first : report.sigma_hat.second;
    if (!(sigma > 0)) {
      ++out.excluded_zero_sigma;
      continue;
    }
    ratios.push_back(empirical_error_bound(report, q, which, vs) / sigma);
  }
  std::sort(ratios.begin(), ratios.end());
  out.points.reserve(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    out.points.emplace_back(ratios[i], static_cast<double>(i + 1) /
                                           static_cast<double>(ratios.size()));
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_metrics_csv(std::ostream& os, const std::vector<TrialReport>& reports,
                       const std::vector<double>& qs, Which which,
                       Reference vs) {
  os << "dataset,algorithm,q,c_q,sigma_hat,ratio\n";
  for (const auto& report : reports) {
    double sigma =
        which == Which::P25 ? report.sigma_hat.first : report.sigma_hat.second;
    for (double q : qs) {
      double c = empirical_error_bound(report, q, which, vs);
      os << report.dataset_id << ',' << report.algorithm << ','
         << format_double(q) << ',' << format_double(c) << ','
         << format_double(sigma) << ','
         << format_double(sigma > 0
                              ? c / sigma
                              : std::numeric_limits<double>::quiet_NaN())
         << '\n';
    }
  }
}

}  // namespace dpslr
