#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rcpolicy {

struct SimplexLsResult {
  std::vector<double> weights;
  double objective = 0.0;  // mean squared residual at weights
  int iterations = 0;
};

// Mean squared residual (1/n)||y - Z w||^2, computed directly.
double simplex_objective(const Eigen::MatrixXd& z, std::span<const double> y,
                         std::span<const double> weights);

/**
 * Least squares over the probability simplex: min (1/n)||y - Z w||^2 subject to
 * w >= 0 and sum(w) = 1.
 *
 * Primal active-set method started from the best single column, so the
 * objective never exceeds the best vertex. Columns enter only with a strictly
 * negative multiplier, which keeps duplicate or dominated candidates at zero
 * and breaks ties toward earlier columns.
 */
SimplexLsResult simplex_least_squares(const Eigen::MatrixXd& z, std::span<const double> y);

}  // namespace rcpolicy
