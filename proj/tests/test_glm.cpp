#include <doctest.h>

#include <vector>

#include "rcpolicy/glm.hpp"
#include "rcpolicy/rng.hpp"

using namespace rcpolicy;

namespace {

const std::vector<std::vector<double>> kW = {
    {-0.652, -0.175}, {1.664, 0.659},   {-1.641, -0.005}, {-0.623, 0.149}, {-1.608, 0.242},
    {0.235, 1.576},   {0.317, 0.511},   {-1.493, 2.253},  {-1.916, 1.102}, {-0.33, -0.881},
    {-0.656, -0.672}, {0.38, -0.11},    {1.483, -1.83},   {-0.003, -0.892}, {0.776, -2.118},
    {-0.344, 0.21},   {-1.484, 0.985},  {0.179, 1.007},   {0.959, -0.98},  {-0.798, -0.203},
    {0.748, 0.851},   {-0.71, -0.607},  {-0.798, -0.584}, {-0.238, -0.132}, {2.058, -0.506},
    {-0.289, 0.459},  {-0.953, -0.369}, {0.013, 0.774},   {-1.316, 1.371}, {-0.352, 0.169},
    {0.847, 0.661},   {1.059, 0.173},   {-0.02, 0.316},   {-0.996, 1.214}, {-0.775, -1.26},
    {2.056, -0.136},  {-1.179, 1.852},  {-0.33, 1.062},   {-0.829, -0.249}, {-1.689, -1.909}};
const std::vector<int> kA = {1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 1, 0, 0, 0, 0, 1, 1, 0, 1,
                             0, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 0, 1};
const std::vector<double> kYb = {0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0,
                                 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 0, 1};
const std::vector<double> kYg = {2.5082, 1.6362, 0.1183, 0.9769, 2.1655, 3.6889, 3.2228, 1.3612,
                                 1.9101, 3.3345, 0.6739, 3.0586, 1.4794, 1.3956, 1.6888, 1.0296,
                                 2.3864, 3.5218, 1.7259, 2.2321, 1.6045, 0.6959, 2.5679, 1.11,
                                 4.0375, 1.9754, 2.9907, 3.3178, 0.3052, 0.7123, 1.4915, 1.1442,
                                 3.0819, 2.4329, 0.5066, 1.7511, 2.2069, 1.1669, 0.986, 2.3064};

Eigen::MatrixXd matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::vector<Term> main_terms() {
  return {Term{}, Term{Term::Kind::treatment, -1}, Term{Term::Kind::covariate, 0},
          Term{Term::Kind::covariate, 1}};
}

}  // namespace

TEST_SUITE("glm") {
  TEST_CASE("logistic fit matches a reference IRLS solution") {
    const GlmFit f = fit_glm(main_terms(), kA, matrix(kW), kYb, Family::binomial);
    CHECK(f.converged);
    CHECK_FALSE(f.singular_fallback);
    CHECK(f.coef(0) == doctest::Approx(-1.6234603064).epsilon(1e-8));
    CHECK(f.coef(1) == doctest::Approx(1.35909261594).epsilon(1e-8));
    CHECK(f.coef(2) == doctest::Approx(2.06393506444).epsilon(1e-8));
    CHECK(f.coef(3) == doctest::Approx(-2.1978985912).epsilon(1e-8));
    CHECK(f.deviance == doctest::Approx(26.2286630035).epsilon(1e-9));
    CHECK(f.aic(40) == doctest::Approx(34.2286630035).epsilon(1e-9));
  }

  TEST_CASE("gaussian fit matches least squares") {
    const GlmFit f = fit_glm(main_terms(), kA, matrix(kW), kYg, Family::gaussian);
    CHECK(f.coef(0) == doctest::Approx(1.05563851282).epsilon(1e-9));
    CHECK(f.coef(1) == doctest::Approx(1.95361927863).epsilon(1e-9));
    CHECK(f.coef(2) == doctest::Approx(0.492682768743).epsilon(1e-9));
    CHECK(f.coef(3) == doctest::Approx(-0.059149281068).epsilon(1e-9));
    CHECK(f.deviance == doctest::Approx(3.91532514625).epsilon(1e-9));
  }

  TEST_CASE("aliased design falls back to the intercept") {
    Eigen::MatrixXd w = matrix(kW);
    w.col(1) = 2.0 * w.col(0);
    const GlmFit f = fit_glm(main_terms(), kA, w, kYg, Family::gaussian);
    CHECK(f.singular_fallback);
    CHECK(f.terms.size() == 1);
    double m = 0.0;
    for (double y : kYg) m += y;
    CHECK(f.coef(0) == doctest::Approx(m / 40.0));
  }

  TEST_CASE("all-zero binary response predicts near zero") {
    const std::vector<double> zeros(40, 0.0);
    const GlmFit f = fit_glm(main_terms(), kA, matrix(kW), zeros, Family::binomial);
    CHECK(f.predict(1, matrix(kW).row(0)) < 1e-12);
  }

  TEST_CASE("interaction term evaluates as a times w") {
    const Term t{Term::Kind::interaction, 1};
    Eigen::RowVectorXd w(2);
    w << 3.0, 5.0;
    CHECK(t.evaluate(1, w) == 5.0);
    CHECK(t.evaluate(0, w) == 0.0);
    CHECK(t.label({"x", "z"}) == "A:z");
  }

  TEST_CASE("stepwise AIC picks the signal terms first") {
    Rng rng(8);
    const int n = 400;
    Eigen::MatrixXd w(n, 4);
    std::vector<int> a(n, 0);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 4; ++j) w(i, j) = rng.normal();
      y[static_cast<std::size_t>(i)] = 2.0 * w(i, 2) - 1.0 * w(i, 0) + 0.5 * rng.normal();
    }
    std::vector<Term> pool;
    for (int j = 0; j < 4; ++j) pool.push_back(Term{Term::Kind::covariate, j});
    const GlmFit f = fit_stepwise_aic(pool, a, w, y, Family::gaussian, 5);
    REQUIRE(f.terms.size() >= 3);
    CHECK(f.terms[1] == Term{Term::Kind::covariate, 2});
    CHECK(f.terms[2] == Term{Term::Kind::covariate, 0});
    const GlmFit one = fit_stepwise_aic(pool, a, w, y, Family::gaussian, 1);
    CHECK(one.terms.size() == 2);
  }
}
