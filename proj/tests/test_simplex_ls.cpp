#include <doctest.h>

#include <limits>
#include <vector>

#include "rcpolicy/rng.hpp"
#include "rcpolicy/simplex_ls.hpp"

using namespace rcpolicy;

namespace {

// Exhaustive oracle: for every support, solve the equality-constrained least
// squares problem in closed form and keep the best feasible solution.
std::vector<double> brute_force(const Eigen::MatrixXd& z, const std::vector<double>& y) {
  const int k = static_cast<int>(z.cols());
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_w;
  for (int mask = 1; mask < (1 << k); ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) cols.push_back(j);
    const int m = static_cast<int>(cols.size());
    Eigen::MatrixXd zs(z.rows(), m);
    for (int c = 0; c < m; ++c) zs.col(c) = z.col(cols[static_cast<std::size_t>(c)]);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    kkt.topLeftCorner(m, m) = zs.transpose() * zs;
    kkt.block(0, m, m, 1).setOnes();
    kkt.block(m, 0, 1, m).setOnes();
    Eigen::VectorXd rhs(m + 1);
    rhs.head(m) = zs.transpose() * yv;
    rhs(m) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    if ((kkt * sol - rhs).norm() > 1e-8) continue;
    if (sol.head(m).minCoeff() < -1e-12) continue;
    std::vector<double> w(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < m; ++c) w[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])] = std::max(0.0, sol(c));
    const double obj = simplex_objective(z, y, w);
    if (obj < best) {
      best = obj;
      best_w = w;
    }
  }
  return best_w;
}

}  // namespace

TEST_SUITE("simplex_ls") {
  TEST_CASE("matches the exhaustive oracle on random problems") {
    Rng rng(2024);
    for (int rep = 0; rep < 200; ++rep) {
      const int n = 30 + static_cast<int>(rng.index(40));
      const int k = 2 + static_cast<int>(rng.index(5));
      Eigen::MatrixXd z(n, k);
      std::vector<double> y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const double signal = rng.normal();
        for (int j = 0; j < k; ++j) z(i, j) = signal * (0.3 + 0.2 * j) + rng.normal() * (0.5 + 0.1 * j);
        y[static_cast<std::size_t>(i)] = signal + 0.3 * rng.normal();
      }
      const SimplexLsResult r = simplex_least_squares(z, y);
      const std::vector<double> oracle = brute_force(z, y);
      CHECK(r.objective <= simplex_objective(z, y, oracle) + 1e-10);
      double sum = 0.0;
      for (double w : r.weights) {
        CHECK(w >= 0.0);
        sum += w;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-10);
      for (int j = 0; j < k; ++j) {
        std::vector<double> vertex(static_cast<std::size_t>(k), 0.0);
        vertex[static_cast<std::size_t>(j)] = 1.0;
        CHECK(r.objective <= simplex_objective(z, y, vertex) + 1e-10);
      }
    }
  }

  TEST_CASE("a dominant column takes all the weight") {
    Eigen::MatrixXd z(4, 2);
    z << 1, 0, 2, 0, 3, 0, 4, 0;
    const std::vector<double> y = {1, 2, 3, 4};
    const SimplexLsResult r = simplex_least_squares(z, y);
    CHECK(r.weights[0] == 1.0);
    CHECK(r.weights[1] == 0.0);
    CHECK(r.objective == 0.0);
  }

  TEST_CASE("duplicate columns stay sparse, first one wins") {
    Eigen::MatrixXd z(5, 3);
    z << 1, 1, 0, 2, 2, 0, 3, 3, 1, 4, 4, 1, 5, 5, 0;
    const std::vector<double> y = {1.1, 1.9, 3.2, 3.9, 5.0};
    const SimplexLsResult r = simplex_least_squares(z, y);
    CHECK(r.weights[1] == 0.0);
    CHECK(r.weights[0] > 0.9);
  }

  TEST_CASE("interior optimum averages two unbiased noisy predictors") {
    Eigen::MatrixXd z(4, 2);
    z << 1, -1, -1, 1, 1, -1, -1, 1;
    const std::vector<double> y = {0, 0, 0, 0};
    const SimplexLsResult r = simplex_least_squares(z, y);
    CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.objective == doctest::Approx(0.0));
  }
}
