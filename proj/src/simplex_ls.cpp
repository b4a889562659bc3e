#include "rcpolicy/simplex_ls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcpolicy/errors.hpp"

namespace rcpolicy {

double simplex_objective(const Eigen::MatrixXd& z, std::span<const double> y,
                         std::span<const double> weights) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double pred = 0.0;
    for (Eigen::Index k = 0; k < z.cols(); ++k) pred += z(i, k) * weights[static_cast<std::size_t>(k)];
    const double r = y[static_cast<std::size_t>(i)] - pred;
    sse += r * r;
  }
  return sse / static_cast<double>(z.rows());
}

SimplexLsResult simplex_least_squares(const Eigen::MatrixXd& z, std::span<const double> y) {
  const Eigen::Index m = z.cols();
  require(m >= 1, "simplex least squares needs at least one candidate");
  require(static_cast<std::size_t>(z.rows()) == y.size() && z.rows() > 0,
          "simplex least squares: row count mismatch");
  require(z.allFinite(), "simplex least squares: non-finite candidate predictions");

  const double n = static_cast<double>(z.rows());
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), z.rows());
  const Eigen::MatrixXd gram = z.transpose() * z / n;
  const Eigen::VectorXd cross = z.transpose() * yv / n;

  // Start from the best vertex; ties go to the earliest column.
  std::vector<double> vertex_risk(static_cast<std::size_t>(m));
  Eigen::Index start = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    vertex_risk[static_cast<std::size_t>(k)] = (yv - z.col(k)).squaredNorm() / n;
    if (vertex_risk[static_cast<std::size_t>(k)] < vertex_risk[static_cast<std::size_t>(start)])
      start = k;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  x(start) = 1.0;
  std::vector<bool> free(static_cast<std::size_t>(m), false);
  free[static_cast<std::size_t>(start)] = true;

  const double mu_tol = 1e-13 * std::max(1.0, gram.diagonal().maxCoeff());
  int iterations = 0;
  const int max_iterations = 20 * static_cast<int>(m) + 20;
  for (; iterations < max_iterations; ++iterations) {
    std::vector<Eigen::Index> f;
    for (Eigen::Index k = 0; k < m; ++k)
      if (free[static_cast<std::size_t>(k)]) f.push_back(k);
    const auto nf = static_cast<Eigen::Index>(f.size());

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
    Eigen::VectorXd rhs(nf + 1);
    for (Eigen::Index r = 0; r < nf; ++r) {
      for (Eigen::Index s = 0; s < nf; ++s) kkt(r, s) = 2.0 * gram(f[r], f[s]);
      kkt(r, nf) = 1.0;
      kkt(nf, r) = 1.0;
      rhs(r) = 2.0 * cross(f[r]);
    }
    rhs(nf) = 1.0;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) break;

    Eigen::VectorXd target = Eigen::VectorXd::Zero(m);
    bool feasible = true;
    for (Eigen::Index r = 0; r < nf; ++r) {
      target(f[r]) = sol(r);
      if (sol(r) < -1e-15) feasible = false;
    }

    if (!feasible) {
      // Walk from x toward the subproblem optimum until a weight hits zero.
      double t = 1.0;
      for (Eigen::Index k : f) {
        if (target(k) < x(k) && target(k) < 0.0) t = std::min(t, x(k) / (x(k) - target(k)));
      }
      x += t * (target - x);
      for (Eigen::Index k : f) {
        if (x(k) <= 1e-15) {
          x(k) = 0.0;
          free[static_cast<std::size_t>(k)] = false;
        }
      }
      x /= x.sum();
      continue;
    }

    x = target.cwiseMax(0.0);
    x /= x.sum();
    const Eigen::VectorXd grad = 2.0 * (gram * x - cross);
    const double nu = sol(nf);
    Eigen::Index enter = -1;
    double most_negative = -mu_tol;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (free[static_cast<std::size_t>(k)]) continue;
      const double mu = grad(k) + nu;
      if (mu < most_negative) {
        most_negative = mu;
        enter = k;
      }
    }
    if (enter < 0) break;
    free[static_cast<std::size_t>(enter)] = true;
  }

  SimplexLsResult result;
  result.iterations = iterations;
  result.weights.assign(x.data(), x.data() + m);
  result.objective = simplex_objective(z, y, result.weights);
  std::vector<double> vertex(static_cast<std::size_t>(m), 0.0);
  vertex[static_cast<std::size_t>(start)] = 1.0;
  const double best_vertex = simplex_objective(z, y, vertex);
  if (!(result.objective <= best_vertex)) {
    result.weights = std::move(vertex);
    result.objective = best_vertex;
  }
  return result;
}

}  // namespace rcpolicy
