#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "rcpolicy/errors.hpp"
#include "rcpolicy/learners.hpp"
#include "rcpolicy/stats.hpp"

using namespace rcpolicy;

namespace {

Dataset two_cell(std::size_t n, std::uint64_t seed) {
  DgpSpec s = DgpSpec::preset(DgpKind::constant_blip);
  s.covariate_names = {"x"};
  s.cells = {{{0.0}, 0.5, 0.3, 0.2}, {{1.0}, 0.5, 0.6, -0.1}};
  s.with_cost = false;
  s.validate();
  return generate(s, n, seed);
}

double arm_cell_mean(const Dataset& ds, int a, double x) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.treatment()[i] == a && ds.covariates()(static_cast<Eigen::Index>(i), 0) == x) {
      sum += ds.outcome()[i];
      ++count;
    }
  return sum / count;
}

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("parse and name round trip") {
    const std::vector<std::string> names = {"age", "bmi"};
    for (const char* text : {"mean", "main_terms", "univariate", "stepwise_aic"})
      CHECK(parse_learner(text, names).name(names) == text);
    const LearnerSpec u = parse_learner("univariate:bmi", names);
    CHECK(u.kind == LearnerKind::univariate);
    CHECK(u.covariate == 1);
    CHECK(u.name(names) == "univariate:bmi");
    CHECK(parse_learner("univariate:0", names).covariate == 0);
    CHECK_THROWS_AS(parse_learner("random_forest", names), ValidationError);
    CHECK_THROWS_AS(parse_learner("univariate:height", names), ValidationError);
  }

  TEST_CASE("univariate placeholder expands per covariate") {
    const auto lib = expand_library(default_blip_library(), 3);
    REQUIRE(lib.size() == 6);
    for (int j = 0; j < 3; ++j) {
      CHECK(lib[static_cast<std::size_t>(j)].kind == LearnerKind::univariate);
      CHECK(lib[static_cast<std::size_t>(j)].covariate == j);
    }
    CHECK_THROWS_AS(expand_library({{LearnerKind::univariate, 5}}, 3), ValidationError);
    CHECK_THROWS_AS(expand_library({}, 3), ValidationError);
  }

  TEST_CASE("folds are stratified by arm and seeded") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 1003, 5);
    const auto f1 = assign_folds(ds.treatment(), 10, 99);
    const auto f2 = assign_folds(ds.treatment(), 10, 99);
    const auto f3 = assign_folds(ds.treatment(), 10, 100);
    CHECK(f1 == f2);
    CHECK(f1 != f3);
    std::vector<int> total(10, 0), treated(10, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      ++total[static_cast<std::size_t>(f1[i])];
      treated[static_cast<std::size_t>(f1[i])] += ds.treatment()[i];
    }
    CHECK(*std::max_element(total.begin(), total.end()) -
              *std::min_element(total.begin(), total.end()) <= 1);
    CHECK(*std::max_element(treated.begin(), treated.end()) -
              *std::min_element(treated.begin(), treated.end()) <= 1);
    CHECK_THROWS_AS(assign_folds(ds.treatment(), 1, 1), ValidationError);
  }

  TEST_CASE("saturated main-terms outcome model reproduces the cell means") {
    const Dataset ds = two_cell(4000, 11);
    const OutcomeModel q = fit_outcome(ds, {{{LearnerKind::main_terms}}, 5, 3});
    for (int a = 0; a < 2; ++a)
      for (double x : {0.0, 1.0}) {
        Eigen::RowVectorXd w(1);
        w << x;
        CHECK(q.predict(a, w) == doctest::Approx(arm_cell_mean(ds, a, x)).epsilon(1e-8));
      }
  }

  TEST_CASE("ensemble weights lie on the simplex and never lose to the best candidate") {
    const Dataset ds = testing::draw(DgpKind::one_interaction, 3000, 21);
    const OutcomeModel q = fit_outcome(ds, {default_outcome_library(), 10, 4});
    const StackedEnsemble& e = q.ensemble();
    CHECK(e.candidates.size() == 5);
    CHECK(e.weights.size() == e.candidates.size());
    CHECK(std::accumulate(e.weights.begin(), e.weights.end(), 0.0) == doctest::Approx(1.0));
    for (double w : e.weights) CHECK(w >= 0.0);
    CHECK(e.ensemble_cv_risk <= *std::min_element(e.cv_risks.begin(), e.cv_risks.end()) + 1e-12);
  }

  TEST_CASE("stacking is reproducible for a fixed seed") {
    const Dataset ds = testing::draw(DgpKind::one_interaction, 800, 2);
    const StackingOptions opt{default_outcome_library(), 5, 17};
    const OutcomeModel a = fit_outcome(ds, opt);
    const OutcomeModel b = fit_outcome(ds, opt);
    CHECK(a.ensemble().weights == b.ensemble().weights);
    CHECK(a.predict_rows(1, ds.covariates()) == b.predict_rows(1, ds.covariates()));
  }

  TEST_CASE("single-candidate library skips the cross-validation") {
    const Dataset ds = testing::draw(DgpKind::null_effect, 200, 1);
    const OutcomeModel q = fit_outcome(ds, {{{LearnerKind::mean}}, 5, 1});
    CHECK(q.ensemble().weights == std::vector<double>{1.0});
    CHECK(q.ensemble().cv_risks.empty());
    Eigen::RowVectorXd w = ds.covariates().row(0);
    CHECK(q.predict(1, w) == doctest::Approx(mean(ds.outcome())));
  }

  TEST_CASE("outcome regression rejects unscaled outcomes and single arms") {
    std::vector<Observation> rows;
    for (int i = 0; i < 20; ++i) rows.push_back({{double(i % 2)}, i % 2, 3.0 * i, std::nullopt});
    const Dataset raw = Dataset::from_observations(rows, {"x"}, OutcomeKind::bounded_real);
    CHECK_THROWS_AS(fit_outcome(raw, {default_outcome_library(), 5, 1}), ValidationError);
    CHECK_NOTHROW(fit_outcome(scale_outcome(raw), {default_outcome_library(), 5, 1}));
    for (auto& r : rows) r.a = 1;
    const Dataset single = Dataset::from_observations(rows, {"x"}, OutcomeKind::bounded_real);
    CHECK_THROWS_AS(fit_outcome(scale_outcome(single), {default_outcome_library(), 5, 1}),
                    ValidationError);
  }

  TEST_CASE("known propensity is constant and truncated") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 100, 3);
    PropensityOptions opt;
    opt.known_value = 0.5;
    const PropensityModel g = fit_propensity(ds, opt);
    CHECK(g.mode() == PropensityMode::known_constant);
    for (double v : g.treated_rows(ds.covariates())) CHECK(v == 0.5);
    const PropensityModel extreme = PropensityModel::constant(0.999, 0.05);
    CHECK(extreme.treated(ds.covariates().row(0)) == doctest::Approx(0.95));
    opt.fit_when_known = true;
    CHECK(fit_propensity(ds, opt).mode() == PropensityMode::estimated);
  }

  TEST_CASE("separated propensity reverts to a constant with a warning") {
    std::vector<Observation> rows;
    for (int i = 0; i < 40; ++i) rows.push_back({{double(i % 2)}, i % 2, double(i % 3 == 0), std::nullopt});
    const Dataset ds = Dataset::from_observations(rows, {"x"}, OutcomeKind::binary);
    const PropensityModel g = fit_propensity(ds, {});
    CHECK(g.mode() == PropensityMode::known_constant);
    REQUIRE(g.warnings().size() == 1);
    CHECK(g.warnings()[0].find("separation") != std::string::npos);
    CHECK(g.treated(ds.covariates().row(0)) == doctest::Approx(0.5));
  }

  TEST_CASE("pseudo-outcome averages to the arm-mean contrast under saturated nuisances") {
    const Dataset ds = two_cell(5000, 8);
    const OutcomeModel q = fit_outcome(ds, {{{LearnerKind::main_terms}}, 5, 3});
    const PropensityModel g = fit_propensity(ds, {});
    const std::vector<double> d = make_pseudo_outcome(ds, q, g);
    // Within each cell the saturated fits make the residual terms cancel
    // exactly, so the cell mean of D is the cell difference in arm means.
    for (double x : {0.0, 1.0}) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.covariates()(static_cast<Eigen::Index>(i), 0) == x) {
          sum += d[i];
          ++count;
        }
      CHECK(sum / count == doctest::Approx(arm_cell_mean(ds, 1, x) - arm_cell_mean(ds, 0, x)).epsilon(1e-8));
    }
  }

  TEST_CASE("blip model recovers a single effect modifier") {
    const Dataset ds = testing::draw(DgpKind::one_interaction, 20000, 13);
    PropensityOptions popt;
    popt.known_value = 0.5;
    const OutcomeModel q = fit_outcome(ds, {default_outcome_library(), 5, 1});
    const BlipModel b = fit_blip(ds, q, fit_propensity(ds, popt), {default_blip_library(), 5, 2});
    Eigen::RowVectorXd w(3);
    w << 1, 0, 1;
    CHECK(std::abs(b.predict(w) - 0.3) < 0.03);
    w << 0, 1, 0;
    CHECK(std::abs(b.predict(w)) < 0.03);
    CHECK(b.covariate_names() == ds.covariate_names());
  }

  TEST_CASE("constant outcome is predicted at the clip bound") {
    std::vector<Observation> rows;
    for (int i = 0; i < 40; ++i) rows.push_back({{double(i % 4)}, i % 2, 1.0, std::nullopt});
    const Dataset ds = Dataset::from_observations(rows, {"x"}, OutcomeKind::binary);
    const OutcomeModel q = fit_outcome(ds, {default_outcome_library(), 5, 1});
    for (int a = 0; a < 2; ++a)
      for (double v : q.predict_rows(a, ds.covariates())) CHECK(v == 1.0 - OutcomeModel::kClip);
  }

  // Cells with mass below 0.2 have sampling SEs of 0.015 to 0.035 at this n,
  // and the two walk5k-and-selfemploy cells sit 0.01 off an additive blip, so
  // +-0.02 is asserted on the three large cells and +-0.1 elsewhere.
  TEST_CASE("cell blips from the outcome model at n = 20000") {
    const DgpSpec s = DgpSpec::preset(DgpKind::adaptr_like);
    const Dataset ds = generate(s, 20000, 7);
    const OutcomeModel q = fit_outcome(ds, {default_outcome_library(), 10, 1});
    for (const auto& cell : s.cells) {
      const Eigen::RowVectorXd w = Eigen::Map<const Eigen::RowVectorXd>(cell.w.data(), 3);
      const double tol = cell.mass >= 0.2 ? 0.02 : 0.1;
      CHECK(std::abs(q.predict(1, w) - q.predict(0, w) - cell.blip) <= tol);
    }
  }

  TEST_CASE("uninformative covariate: predictions equal the arm means") {
    std::vector<Observation> rows;
    for (int w = 0; w < 2; ++w)
      for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 100; ++i) {
          const double y = i < (a == 1 ? 60 : 40) ? 1.0 : 0.0;
          rows.push_back({{double(w)}, a, y, std::nullopt});
        }
    const Dataset ds = Dataset::from_observations(rows, {"w"}, OutcomeKind::binary);
    // Saturated candidates only: cross-validated stacking would otherwise
    // shrink toward the grand mean.
    const std::vector<LearnerSpec> lib = {{LearnerKind::main_terms}, {LearnerKind::univariate}};
    const OutcomeModel q = fit_outcome(ds, {lib, 10, 1});
    for (double w : {0.0, 1.0}) {
      const Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(1, w);
      CHECK(std::abs(q.predict(0, row) - 0.4) <= 1e-6);
      CHECK(std::abs(q.predict(1, row) - 0.6) <= 1e-6);
    }
  }

  TEST_CASE("fitted propensity with randomized treatment tracks the treated fraction") {
    const Dataset ds = testing::draw(DgpKind::one_interaction, 10000, 4);
    const PropensityModel g = fit_propensity(ds, {});
    CHECK(g.mode() == PropensityMode::estimated);
    const double frac = static_cast<double>(ds.treated_count()) / ds.size();
    for (double v : g.treated_rows(ds.covariates())) CHECK(std::abs(v - frac) <= 0.02);
  }

  TEST_CASE("single-arm data cannot fit a propensity") {
    std::vector<Observation> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({{double(i)}, 1, double(i % 2), std::nullopt});
    const Dataset ds = Dataset::from_observations(rows, {"x"}, OutcomeKind::binary);
    CHECK_THROWS_WITH_AS(fit_propensity(ds, {}), doctest::Contains("single-arm"), ValidationError);
  }

  TEST_CASE("pseudo-outcome hand arithmetic") {
    // Mean-only outcome model gives 0.5 in both arms; known g = 0.5.
    std::vector<Observation> rows = {{{0.0}, 1, 1.0, std::nullopt}, {{0.0}, 0, 0.0, std::nullopt}};
    const Dataset ds = Dataset::from_observations(rows, {"x"}, OutcomeKind::binary);
    const OutcomeModel q = fit_outcome(ds, {{{LearnerKind::mean}}, 2, 1});
    PropensityOptions opt;
    opt.known_value = 0.5;
    const std::vector<double> d = make_pseudo_outcome(ds, q, fit_propensity(ds, opt));
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("pseudo-outcome averages to the ATE") {
    const Dataset ds = testing::draw(DgpKind::adaptr_like, 20000, 3);
    PropensityOptions opt;
    opt.known_value = 0.5;
    const OutcomeModel q = fit_outcome(ds, {default_outcome_library(), 10, 1});
    const std::vector<double> d = make_pseudo_outcome(ds, q, fit_propensity(ds, opt));
    CHECK(std::abs(mean(d) - 0.098956895689569) <= 0.01);
  }

  TEST_CASE("blip ensemble recovers the reference cell blips at n = 20000") {
    const DgpSpec s = DgpSpec::preset(DgpKind::adaptr_like);
    const Dataset ds = generate(s, 20000, 7);
    PropensityOptions opt;
    opt.known_value = 0.5;
    const std::vector<LearnerSpec> lib = {{LearnerKind::univariate}, {LearnerKind::mean}, {LearnerKind::main_terms}};
    const OutcomeModel q = fit_outcome(ds, {default_outcome_library(), 10, 1});
    const BlipModel b = fit_blip(ds, q, fit_propensity(ds, opt), {lib, 10, 2});
    for (const auto& cell : s.cells) {
      const Eigen::RowVectorXd w = Eigen::Map<const Eigen::RowVectorXd>(cell.w.data(), 3);
      const double tol = cell.mass >= 0.2 ? 0.02 : 0.1;
      CHECK(std::abs(b.predict(w) - cell.blip) <= tol);
    }
  }
}
