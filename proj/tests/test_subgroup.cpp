#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rcpolicy/errors.hpp"
#include "rcpolicy/stats.hpp"
#include "rcpolicy/subgroup.hpp"

using namespace rcpolicy;

namespace {

double rss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  return (y - x * beta).squaredNorm();
}

// Likelihood ratio p-value built straight from QR least squares.
double lrt_oracle(const Dataset& ds, Eigen::Index j) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = ds.treatment()[static_cast<std::size_t>(i)];
    const double w = ds.covariates()(i, j);
    x.row(i) << 1.0, a, w, a * w;
    y(i) = ds.outcome()[static_cast<std::size_t>(i)];
  }
  const double stat = static_cast<double>(n) * std::log(rss(x.leftCols(3), y) / rss(x, y));
  return std::erfc(std::sqrt(stat / 2.0));
}

}  // namespace

TEST_SUITE("subgroup") {
  TEST_CASE("p-values match an independent least-squares oracle") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 3000, 41);
    const auto res = subgroup_scan(ds, 0.1);
    REQUIRE(res.size() == 3);
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(res[static_cast<std::size_t>(j)].covariate == ds.covariate_names()[static_cast<std::size_t>(j)]);
      CHECK(res[static_cast<std::size_t>(j)].p_value == doctest::Approx(lrt_oracle(ds, j)).epsilon(1e-9));
    }
  }

  TEST_CASE("the true modifier is flagged and level effects are arm-mean differences") {
    const Dataset ds = testing::draw(DgpKind::strong_heterogeneity, 4000, 3);
    const auto res = subgroup_scan(ds, 0.1);
    CHECK(res[0].flagged);
    CHECK(res[0].p_value < 1e-10);
    REQUIRE(res[0].levels.size() == 2);
    for (const auto& lvl : res[0].levels) {
      double s1 = 0, s0 = 0;
      std::size_t n1 = 0, n0 = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.covariates()(static_cast<Eigen::Index>(i), 0) != lvl.level) continue;
        if (ds.treatment()[i] == 1) { s1 += ds.outcome()[i]; ++n1; }
        else { s0 += ds.outcome()[i]; ++n0; }
      }
      CHECK(lvl.n_treated == n1);
      CHECK(lvl.n_control == n0);
      CHECK(lvl.effect == doctest::Approx(s1 / n1 - s0 / n0).epsilon(1e-12));
    }
    CHECK(res[0].levels[1].effect > res[0].levels[0].effect);
  }

  TEST_CASE("alpha controls flagging") {
    const Dataset ds = testing::draw(DgpKind::null_effect, 500, 9);
    const auto loose = subgroup_scan(ds, 0.999);
    const auto strict = subgroup_scan(ds, 1e-9);
    for (std::size_t j = 0; j < loose.size(); ++j) {
      CHECK(loose[j].p_value == strict[j].p_value);
      CHECK(loose[j].flagged == (loose[j].p_value < 0.999));
      CHECK_FALSE(strict[j].flagged);
    }
    CHECK_THROWS_AS(subgroup_scan(ds, 0.0), ValidationError);
    CHECK_THROWS_AS(subgroup_scan(ds, 1.0), ValidationError);
  }

  TEST_CASE("constant and aliased covariates are skipped with a note") {
    std::vector<Observation> rows;
    for (int i = 0; i < 40; ++i)
      rows.push_back({{1.0, double(i % 2), double(i % 3)}, i % 2, double(i % 5 == 0), std::nullopt});
    const Dataset ds = Dataset::from_observations(rows, {"k", "same_as_a", "z"}, OutcomeKind::binary);
    const auto res = subgroup_scan(ds, 0.1);
    CHECK(res[0].skipped);
    CHECK(res[0].note.find("constant") != std::string::npos);
    CHECK(res[1].skipped);
    CHECK(res[1].note.find("aliased") != std::string::npos);
    CHECK_FALSE(res[2].skipped);
    CHECK(res[2].levels.size() == 3);
  }

  TEST_CASE("continuous covariates report no level table") {
    const Dataset ds = testing::draw(DgpKind::continuous_blip, 500, 1);
    const auto res = subgroup_scan(ds, 0.1);
    CHECK(res[0].levels.empty());
    CHECK(res[1].levels.empty());
  }
}
