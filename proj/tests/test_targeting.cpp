#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/rng.hpp"
#include "rcpolicy/stats.hpp"
#include "rcpolicy/targeting.hpp"

using namespace rcpolicy;

namespace {

struct Problem {
  std::vector<double> y, q0, q1, g1, policy1, tau;
  std::vector<int> a;
  double kappa = 0.3;

  TargetingInput input() const { return {y, a, q0, q1, g1, policy1, tau, kappa}; }
};

Problem random_problem(std::uint64_t seed, std::size_t n, double q_bias) {
  Rng rng(seed);
  Problem p;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.uniform();
    const double g = 0.2 + 0.6 * w;
    const int a = rng.bernoulli(g) ? 1 : 0;
    const double m0 = 0.2 + 0.3 * w, m1 = 0.35 + 0.4 * w;
    p.y.push_back(rng.bernoulli(a ? m1 : m0) ? 1.0 : 0.0);
    p.a.push_back(a);
    p.q0.push_back(std::clamp(m0 + q_bias, 0.01, 0.99));
    p.q1.push_back(std::clamp(m1 - q_bias, 0.01, 0.99));
    p.g1.push_back(g);
    p.policy1.push_back(w > 0.7 ? 1.0 : (w > 0.6 ? 0.5 : 0.0));
    p.tau.push_back(0.12);
  }
  return p;
}

// Independent fluctuation solve: plain bisection on the mean weighted score.
double bisect_epsilon(const Problem& p) {
  auto score = [&](double eps) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      const double h = p.a[i] ? p.policy1[i] / p.g1[i] : (1 - p.policy1[i]) / (1 - p.g1[i]);
      const double q = p.a[i] ? p.q1[i] : p.q0[i];
      s += h * (p.y[i] - 1.0 / (1.0 + std::exp(-(std::log(q / (1 - q)) + eps))));
    }
    return s / static_cast<double>(p.y.size());
  };
  double lo = -20, hi = 20;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("targeting") {
  TEST_CASE("fluctuation solves the score equation") {
    for (double bias : {0.0, 0.1, -0.15}) {
      const Problem p = random_problem(3, 2000, bias);
      const TargetingResult r = target_value(p.input());
      CHECK(std::abs(r.score_mean) <= 1e-8);
      CHECK(r.epsilon == doctest::Approx(bisect_epsilon(p)).epsilon(1e-9));
      CHECK(r.iterations < 100);
    }
  }

  TEST_CASE("plug-in value and EIF components are consistent") {
    const Problem p = random_problem(8, 1500, 0.08);
    const TargetingResult r = target_value(p.input());
    double psi = 0.0;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      const double plug = r.q1_star[i] * p.policy1[i] + r.q0_star[i] * (1 - p.policy1[i]);
      CHECK(r.eif.plug_in[i] == doctest::Approx(plug).epsilon(1e-14));
      CHECK(r.eif.centering[i] == -r.psi);
      CHECK(r.eif.penalty[i] == doctest::Approx(-0.12 * (p.policy1[i] - p.kappa)).epsilon(1e-14));
      psi += plug;
    }
    CHECK(r.psi == doctest::Approx(psi / p.y.size()).epsilon(1e-14));
    const auto d = r.eif.total();
    double spend = std::accumulate(p.policy1.begin(), p.policy1.end(), 0.0) / p.y.size();
    // Residual mean is the score and plug-in minus psi averages to zero, so
    // the EIF mean reduces to the mean budget penalty.
    CHECK(mean(d) == doctest::Approx(-0.12 * (spend - p.kappa)).epsilon(1e-9));
    CHECK(mean(r.eif.residual) == doctest::Approx(r.score_mean));
  }

  TEST_CASE("correct initial fit leaves the value near the truth") {
    const Problem p = random_problem(11, 40000, 0.0);
    const TargetingResult r = target_value(p.input());
    // Truth: E[m1 d + m0 (1-d)] over w ~ U(0,1).
    // Integral of (0.35+0.4w) on (0.7,1) + half of both on (0.6,0.7) + (0.2+0.3w) on (0,0.6).
    const double truth = (0.35 * 0.3 + 0.2 * (1 - 0.49)) + 0.5 * (0.35 * 0.1 + 0.2 * (0.49 - 0.36)) +
                         (0.2 * 0.6 + 0.15 * 0.36) + 0.5 * (0.2 * 0.1 + 0.15 * (0.49 - 0.36));
    CHECK(r.psi == doctest::Approx(truth).epsilon(0.02));
    CHECK(std::abs(r.epsilon) < 0.1);
  }

  TEST_CASE("zero clever weights give a zero fluctuation") {
    Problem p = random_problem(1, 50, 0.0);
    for (std::size_t i = 0; i < p.a.size(); ++i) p.policy1[i] = p.a[i] ? 0.0 : 1.0;
    const TargetingResult r = target_value(p.input());
    CHECK(r.epsilon == 0.0);
    for (std::size_t i = 0; i < p.q0.size(); ++i) CHECK(r.q0_star[i] == doctest::Approx(p.q0[i]).epsilon(1e-14));
  }

  TEST_CASE("mismatched inputs and degenerate predictions are rejected") {
    Problem p = random_problem(2, 20, 0.0);
    p.tau.pop_back();
    CHECK_THROWS_AS(target_value(p.input()), ValidationError);
    p = random_problem(2, 20, 0.0);
    p.q0.assign(p.q0.size(), 0.0);
    p.q1.assign(p.q1.size(), 0.0);
    CHECK_THROWS_AS(target_value(p.input()), NumericalError);
  }
}
