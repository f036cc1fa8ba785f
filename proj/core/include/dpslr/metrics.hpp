#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dpslr/types.hpp"

namespace dpslr {

// Monte Carlo record for one (dataset, algorithm) cell: the DP releases from
// every trial plus the non-private reference values they are judged against.
struct TrialReport {
  std::string dataset_id;
  std::string algorithm;
  // One entry per trial; empty optional is a failed release.
  std::vector<std::optional<PredictionPair>> trials;
  PredictionPair ols_baseline;
  std::pair<double, double> sigma_hat{0.0, 0.0};  // standard errors at 0.25/0.75
  std::optional<PredictionPair> truth;  // known for synthetic data
};

enum class Which { P25, P75 };
enum class Reference { Ols, Truth };

// q% empirical error bound: the smallest c such that at least q% of trials
// have |release - reference| <= c, i.e. the ceil(q% * T)-th smallest absolute
// error. Failed trials count as infinite error, so the bound is +inf when
// fewer than q% of trials succeeded. Throws AllFailures when every trial
// failed and q > 0.
double empirical_error_bound(const TrialReport& report, double q, Which which,
                             Reference vs);

// Same order statistic over precomputed absolute errors (infinities allowed).
double error_bound(std::vector<double> absolute_errors, double q);

struct RatioCdf {
  // (ratio, cumulative fraction), sorted by ratio. Ratio 1 marks the point
  // where the noise due to privacy equals the standard error.
  std::vector<std::pair<double, double>> points;
  std::size_t excluded_zero_sigma = 0;
};

// Empirical CDF of C_hat(q)/sigma_hat across a family of reports. Reports
// with zero standard error are excluded and counted.
RatioCdf ratio_cdf(const std::vector<TrialReport>& reports, double q,
                   Which which = Which::P25, Reference vs = Reference::Ols);

// CSV rows "dataset,algorithm,q,c_q,sigma_hat,ratio" (header included).
void write_metrics_csv(std::ostream& os, const std::vector<TrialReport>& reports,
                       const std::vector<double>& qs, Which which = Which::P25,
                       Reference vs = Reference::Ols);

std::string format_double(double v);

}  // namespace dpslr
