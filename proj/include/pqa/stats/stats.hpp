#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pqa::stats {

double mean(const std::vector<double>& v);

// Population standard deviation (divide by N, not N-1).
double stddev_pop(const std::vector<double>& v);

// Pearson linear correlation. Throws std::invalid_argument on length
// mismatch or N < 2, std::domain_error when either input is constant.
double plcc(const std::vector<double>& x, const std::vector<double>& y);

// 1-based ranks with ties averaged: (1,2,2,3) -> (1, 2.5, 2.5, 4).
std::vector<double> average_ranks(const std::vector<double>& x);

// Spearman rank correlation: Pearson correlation of average ranks.
double srcc(const std::vector<double>& x, const std::vector<double>& y);

// sqrt(mean((x-y)^2)). Throws std::invalid_argument on mismatch or empty.
double rmse(const std::vector<double>& x, const std::vector<double>& y);

// f(x) = rho1 * (1/2 - 1/(1 + exp(rho2 * (x - rho3)))) + rho4 * x + rho5
struct LogisticParams {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double rho4 = 0.0;
  double rho5 = 0.0;
};

double logistic_eval(const LogisticParams& p, double x);
std::vector<double> logistic_map(const LogisticParams& p, const std::vector<double>& x);

// Thrown when no Gauss-Newton start converges; carries the best attempt.
struct FitFailure : std::runtime_error {
  FitFailure(const std::string& msg, LogisticParams best_params, double best_residual)
      : std::runtime_error(msg), best(best_params), residual(best_residual) {}
  LogisticParams best;
  double residual;  // root-mean-square residual of the best attempt
};

// Least-squares fit of the five-parameter logistic map. Damped Gauss-Newton
// from the standard initialization (rho1 = max(y)-min(y), rho2 = 1/std(x),
// rho3 = mean(x), rho4 = 0, rho5 = mean(y)) plus up to four deterministic
// perturbed restarts; the start with the smallest residual wins.
// Throws std::invalid_argument for N < 5 or constant x, FitFailure when no
// start converges.
LogisticParams logistic_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pqa::stats
