#pragma once

#include <cstddef>

#include "dpslr/types.hpp"

namespace dpslr {

// Empirical quantities of a dataset:
//   xbar = mean(x), ybar = mean(y),
//   nvar = sum_i (x_i - xbar)^2        (n * var(x))
//   ncov = sum_i (x_i - xbar)(y_i - ybar)
struct SufficientStats {
  double xbar = 0.0;
  double ybar = 0.0;
  double nvar = 0.0;
  double ncov = 0.0;
  std::size_t n = 0;
};

struct OlsFit {
  double alpha_hat = 0.0;       // slope
  double beta_hat = 0.0;        // intercept
  double residual_norm = 0.0;   // ||y - alpha*x - beta*1||_2
  std::size_t n = 0;
};

// Two-pass computation of the definitional sums.
SufficientStats sufficient_stats(const Dataset& d);

// Closed-form least squares: alpha = ncov/nvar, beta = ybar - alpha*xbar.
// Throws DegenerateX when all x coincide.
OlsFit ols_fit(const Dataset& d);

double ols_predict(const OlsFit& fit, double x_new);
PredictionPair ols_predictions(const OlsFit& fit);

// Standard error of the prediction at x_new under Gaussian noise:
//   (residual_norm / sqrt(n-2)) * sqrt(1/n + (x_new - xbar)^2 / nvar).
// Throws TooFewPoints for n < 3 and DegenerateX for nvar = 0.
double ols_standard_error(const OlsFit& fit, const SufficientStats& stats,
                          double x_new);

}  // namespace dpslr
