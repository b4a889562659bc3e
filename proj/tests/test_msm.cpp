#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rcpolicy/errors.hpp"
#include "rcpolicy/msm.hpp"

using namespace rcpolicy;

namespace {

const std::vector<double> kReferenceValues = {0.6655, 0.6860, 0.6910, 0.7118, 0.7067, 0.7193,
                                              0.7225, 0.7369, 0.7457, 0.7561, 0.7720};

EstimatorConfig light() {
  EstimatorConfig c;
  c.folds = 3;
  c.sl_folds = 3;
  c.seed = 5;
  c.outcome_library = {{LearnerKind::mean}, {LearnerKind::main_terms}};
  c.blip_library = {{LearnerKind::mean}, {LearnerKind::main_terms}};
  c.propensity.known_value = 0.5;
  return c;
}

}  // namespace

TEST_SUITE("msm") {
  TEST_CASE("exact line is recovered") {
    const auto k = default_kappa_grid();
    std::vector<double> v;
    for (double x : k) v.push_back(0.66 + 0.10 * x);
    const auto c = fit_msm(k, v);
    CHECK(c.beta0 == doctest::Approx(0.66).epsilon(1e-12));
    CHECK(c.beta1 == doctest::Approx(0.10).epsilon(1e-12));
  }

  TEST_CASE("reference value column gives the reference coefficients") {
    const auto c = fit_msm(default_kappa_grid(), kReferenceValues);
    CHECK(std::abs(c.beta1 - 0.0948) <= 1e-3);
    CHECK(std::abs(c.beta0 - 0.6720) <= 1e-3);
    CHECK(c.beta1 == doctest::Approx(0.0948181818181818).epsilon(1e-12));
    CHECK(c.beta0 == doctest::Approx(0.672).epsilon(1e-12));
  }

  TEST_CASE("residuals are orthogonal to the design") {
    const auto k = default_kappa_grid();
    const auto c = fit_msm(k, kReferenceValues);
    double s = 0.0, sk = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double r = kReferenceValues[i] - c.beta0 - c.beta1 * k[i];
      s += r;
      sk += k[i] * r;
    }
    CHECK(std::abs(s) <= 1e-10);
    CHECK(std::abs(sk) <= 1e-10);
  }

  TEST_CASE("two points interpolate") {
    const std::vector<double> k = {0.0, 1.0}, v = {0.3, 0.8};
    const auto c = fit_msm(k, v);
    CHECK(c.beta0 == doctest::Approx(0.3));
    CHECK(c.beta1 == doctest::Approx(0.5));
  }

  TEST_CASE("weights move the fit toward precise points") {
    const std::vector<double> k = {0.0, 0.5, 1.0}, v = {0.0, 1.0, 0.0};
    const std::vector<double> w = {1.0, 1e-9, 1.0};
    const auto c = fit_msm(k, v, w);
    CHECK(c.beta0 == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::abs(c.beta1) < 1e-6);
  }

  TEST_CASE("degenerate inputs are rejected") {
    const std::vector<double> same = {0.3, 0.3, 0.3}, v = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(fit_msm(same, v), ValidationError);
    CHECK_THROWS_AS(fit_msm(std::vector<double>{0.5}, std::vector<double>{0.1}), ValidationError);
    CHECK_THROWS_AS(fit_msm(same, std::vector<double>{0.1, 0.2}), ValidationError);
    const std::vector<double> k = {0.0, 0.5, 1.0};
    CHECK_THROWS_AS(fit_msm(k, v, std::vector<double>{1.0, -1.0, 1.0}), ValidationError);
  }

  TEST_CASE("chord matches the static estimates at the ends") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 800, 7);
    const EstimatorConfig c = light();
    const CrossFit cf = cross_fit(ds, c);
    const MsmPoint p = msm_point(cf, default_kappa_grid(), c);
    CHECK(p.chord.at(0.0) == evaluate_rule(cf, RuleSpec::treat_none(), c).psi);
    CHECK(p.chord.at(1.0) == evaluate_rule(cf, RuleSpec::treat_all(), c).psi);
    CHECK(p.contrast_intercept == p.coef.beta0 - p.chord.intercept);
    CHECK(p.contrast_slope == p.coef.beta1 - p.chord.slope);
    CHECK(p.values.size() == 11);
  }

  TEST_CASE("bootstrap is reproducible and intervals are ordered") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 400, 3);
    MsmOptions opt;
    opt.replicates = 4;
    opt.kappas = {0.0, 0.5, 1.0};
    const MsmFit a = msm_with_bootstrap(ds, opt, light());
    const MsmFit b = msm_with_bootstrap(ds, opt, light());
    CHECK(a.point.coef.beta0 == b.point.coef.beta0);
    CHECK(a.beta1_ci.lo == b.beta1_ci.lo);
    CHECK(a.contrast_slope_ci.hi == b.contrast_slope_ci.hi);
    CHECK(a.draws.size() == 4);
    for (const Interval* i : {&a.beta0_ci, &a.beta1_ci, &a.chord_intercept_ci, &a.chord_slope_ci,
                              &a.contrast_intercept_ci, &a.contrast_slope_ci})
      CHECK(i->lo <= i->hi);
    opt.replicates = 1;
    const MsmFit one = msm_with_bootstrap(ds, opt, light());
    const MsmFit again = msm_with_bootstrap(ds, opt, light());
    CHECK(one.beta0_ci.lo == one.beta0_ci.hi);
    CHECK(one.draws[0].coef.beta1 == again.draws[0].coef.beta1);
  }

  TEST_CASE("fixed-rule bootstrap holds the full-data blips") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 400, 3);
    MsmOptions opt;
    opt.replicates = 3;
    opt.kappas = {0.0, 0.5, 1.0};
    opt.mode = BootstrapMode::fixed_rule;
    EstimatorConfig ser = light(), par = light();
    ser.execution = Execution::serial;
    set_thread_limit(4);
    const MsmFit a = msm_with_bootstrap(ds, opt, ser);
    const MsmFit b = msm_with_bootstrap(ds, opt, par);
    CHECK(a.contrast_intercept_ci.lo == b.contrast_intercept_ci.lo);
    CHECK(a.draws[2].values == b.draws[2].values);
    for (double v : a.draws[0].values) CHECK(std::isfinite(v));
  }

  TEST_CASE("mode names and option validation") {
    CHECK(bootstrap_mode_from_string("fixed-rule") == BootstrapMode::fixed_rule);
    CHECK(bootstrap_mode_from_string("refit") == BootstrapMode::refit);
    CHECK(std::string(to_string(BootstrapMode::fixed_rule)) == "fixed-rule");
    CHECK_THROWS_AS(bootstrap_mode_from_string("jackknife"), ValidationError);
    MsmOptions opt;
    opt.replicates = 0;
    CHECK_THROWS_AS(msm_with_bootstrap(testing::draw(DgpKind::adaptr_like, 100, 1), opt, light()),
                    ValidationError);
  }
}
