#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace rcpolicy {

double normal_cdf(double x);
// Inverse standard normal CDF, accurate to ~1e-15 after one Halley step.
double normal_quantile(double p);
// Two-sided critical value for a confidence level, e.g. 0.95 -> 1.959964.
double critical_value(double confidence);

// Upper tail of the chi-square distribution with one degree of freedom.
double chi2_1df_survival(double x);

// Type-7 (linear interpolation) empirical quantile. Copies and sorts.
double quantile_type7(std::span<const double> values, double p);

double mean(std::span<const double> values);
// sqrt(mean(x^2)): the influence-function scale used for Wald intervals.
double root_mean_square(std::span<const double> values);

inline double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double x);

}  // namespace rcpolicy
