#include "dpslr/ols.hpp"

#include <cmath>

namespace dpslr {

SufficientStats sufficient_stats(const Dataset& d) {
  SufficientStats s;
  s.n = d.size();
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& p : d) {
    sx += p.x;
    sy += p.y;
  }
  s.xbar = sx / static_cast<double>(s.n);
  s.ybar = sy / static_cast<double>(s.n);
  // Second pass over centered values keeps the sums well conditioned.
  double nvar = 0.0;
  double ncov = 0.0;
  for (const auto& p : d) {
    double dx = p.x - s.xbar;
    nvar += dx * dx;
    ncov += dx * (p.y - s.ybar);
  }
  s.nvar = nvar;
  s.ncov = ncov;
  return s;
}

OlsFit ols_fit(const Dataset& d) {
  SufficientStats s = sufficient_stats(d);
  if (s.nvar <= 0.0) throw DegenerateX("ols_fit: nvar(x) = 0");
  OlsFit fit;
  fit.n = s.n;
  fit.alpha_hat = s.ncov / s.nvar;
  fit.beta_hat = s.ybar - fit.alpha_hat * s.xbar;
  double ss = 0.0;
  for (const auto& p : d) {
    double r = p.y - fit.alpha_hat * p.x - fit.beta_hat;
    ss += r * r;
  }
  fit.residual_norm = std::sqrt(ss);
  return fit;
}

double ols_predict(const OlsFit& fit, double x_new) {
  return fit.alpha_hat * x_new + fit.beta_hat;
}

PredictionPair ols_predictions(const OlsFit& fit) {
  return PredictionPair{ols_predict(fit, 0.25), ols_predict(fit, 0.75)};
}

double ols_standard_error(const OlsFit& fit, const SufficientStats& stats,
                          double x_new) {
  if (stats.n < 3) throw TooFewPoints("standard error needs n >= 3");
  if (stats.nvar <= 0.0) throw DegenerateX("standard error: nvar(x) = 0");
  double dx = x_new - stats.xbar;
  return fit.residual_norm / std::sqrt(static_cast<double>(stats.n) - 2.0) *
         std::sqrt(1.0 / static_cast<double>(stats.n) + dx * dx / stats.nvar);
}

}  // namespace dpslr
