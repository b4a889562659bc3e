#include "rcpolicy/learners.hpp"

#include <algorithm>
#include <cmath>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/rng.hpp"
#include "rcpolicy/simplex_ls.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

std::string LearnerSpec::name(const std::vector<std::string>& covariate_names) const {
  switch (kind) {
    case LearnerKind::mean: return "mean";
    case LearnerKind::main_terms: return "main_terms";
    case LearnerKind::stepwise_aic: return "stepwise_aic";
    case LearnerKind::univariate:
      if (covariate < 0) return "univariate";
      if (static_cast<std::size_t>(covariate) < covariate_names.size())
        return "univariate:" + covariate_names[static_cast<std::size_t>(covariate)];
      return "univariate:" + std::to_string(covariate);
  }
  return "?";
}

LearnerSpec parse_learner(const std::string& text,
                          const std::vector<std::string>& covariate_names) {
  if (text == "mean") return {LearnerKind::mean};
  if (text == "main_terms") return {LearnerKind::main_terms};
  if (text == "stepwise_aic") return {LearnerKind::stepwise_aic};
  if (text == "univariate") return {LearnerKind::univariate};
  const std::string prefix = "univariate:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string target = text.substr(prefix.size());
    for (std::size_t j = 0; j < covariate_names.size(); ++j)
      if (covariate_names[j] == target) return {LearnerKind::univariate, static_cast<int>(j)};
    if (!target.empty() && std::all_of(target.begin(), target.end(), ::isdigit))
      return {LearnerKind::univariate, std::stoi(target)};
    throw ValidationError("learner '" + text + "' names an unknown covariate");
  }
  throw ValidationError("unknown learner '" + text +
                        "' (expected mean|main_terms|univariate[:cov]|stepwise_aic)");
}

std::vector<LearnerSpec> expand_library(const std::vector<LearnerSpec>& library,
                                        std::size_t num_covariates) {
  std::vector<LearnerSpec> out;
  for (const auto& spec : library) {
    if (spec.kind == LearnerKind::univariate && spec.covariate < 0) {
      for (std::size_t j = 0; j < num_covariates; ++j)
        out.push_back({LearnerKind::univariate, static_cast<int>(j), spec.max_terms});
    } else {
      require(spec.kind != LearnerKind::univariate ||
                  static_cast<std::size_t>(spec.covariate) < num_covariates,
              "univariate learner covariate index out of range");
      out.push_back(spec);
    }
  }
  require(!out.empty(), "learner library must not be empty");
  return out;
}

std::vector<LearnerSpec> default_outcome_library() {
  return {{LearnerKind::mean}, {LearnerKind::main_terms}, {LearnerKind::univariate}};
}

std::vector<LearnerSpec> default_blip_library() {
  return {{LearnerKind::univariate},
          {LearnerKind::mean},
          {LearnerKind::main_terms},
          {LearnerKind::stepwise_aic}};
}

GlmFit fit_candidate(const LearnerSpec& spec, FeatureSet features, std::span<const int> a,
                     const Eigen::MatrixXd& w, std::span<const double> y, Family family) {
  const bool with_a = features == FeatureSet::treatment_and_covariates;
  const int p = static_cast<int>(w.cols());
  using K = Term::Kind;
  std::vector<Term> terms = {Term{}};
  switch (spec.kind) {
    case LearnerKind::mean: break;
    case LearnerKind::main_terms:
      if (with_a) terms.push_back({K::treatment});
      for (int j = 0; j < p; ++j) terms.push_back({K::covariate, j});
      if (with_a)
        for (int j = 0; j < p; ++j) terms.push_back({K::interaction, j});
      break;
    case LearnerKind::univariate:
      if (with_a) terms.push_back({K::treatment});
      terms.push_back({K::covariate, spec.covariate});
      if (with_a) terms.push_back({K::interaction, spec.covariate});
      break;
    case LearnerKind::stepwise_aic: {
      std::vector<Term> pool;
      if (with_a) pool.push_back({K::treatment});
      for (int j = 0; j < p; ++j) pool.push_back({K::covariate, j});
      if (with_a)
        for (int j = 0; j < p; ++j) pool.push_back({K::interaction, j});
      return fit_stepwise_aic(pool, a, w, y, family, spec.max_terms);
    }
  }
  return fit_glm(terms, a, w, y, family);
}

std::vector<int> assign_folds(std::span<const int> a, int folds, std::uint64_t seed) {
  require(folds >= 2, "folds must be at least 2");
  require(a.size() >= static_cast<std::size_t>(folds), "folds must not exceed the sample size");
  std::vector<int> label(a.size(), 0);
  Rng rng(seed);
  std::size_t position = 0;
  for (int arm = 1; arm >= 0; --arm) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] == arm) members.push_back(i);
    const std::vector<std::size_t> order = permutation(members.size(), rng);
    for (std::size_t k = 0; k < members.size(); ++k) {
      label[members[order[k]]] = static_cast<int>(position % static_cast<std::size_t>(folds));
      ++position;
    }
  }
  return label;
}

double StackedEnsemble::predict(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  double out = 0.0;
  for (std::size_t k = 0; k < fits.size(); ++k)
    if (weights[k] != 0.0) out += weights[k] * fits[k].predict(a, w);
  return out;
}

Eigen::VectorXd StackedEnsemble::predict_rows(std::span<const int> a,
                                              const Eigen::MatrixXd& w) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.rows());
  for (std::size_t k = 0; k < fits.size(); ++k)
    if (weights[k] != 0.0) out += weights[k] * rcpolicy::predict_rows(fits[k], a, w);
  return out;
}

namespace {

std::vector<std::size_t> rows_where(const std::vector<int>& labels, int fold, bool equal) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if ((labels[i] == fold) == equal) rows.push_back(i);
  return rows;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& w, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), w.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = w.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

template <class T>
std::vector<T> take(std::span<const T> v, const std::vector<std::size_t>& rows) {
  std::vector<T> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = v[rows[k]];
  return out;
}

}  // namespace

StackedEnsemble fit_stacked(FeatureSet features, std::span<const int> a, const Eigen::MatrixXd& w,
                            std::span<const double> y, Family family,
                            const StackingOptions& options,
                            const std::vector<std::string>& covariate_names) {
  StackedEnsemble ens;
  ens.candidates = expand_library(options.library, static_cast<std::size_t>(w.cols()));
  const std::size_t m = ens.candidates.size();

  if (m > 1) {
    const std::vector<int> labels = assign_folds(a, options.folds, options.seed);
    Eigen::MatrixXd cv_pred(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(m));
    for (int v = 0; v < options.folds; ++v) {
      const auto train = rows_where(labels, v, false);
      const auto valid = rows_where(labels, v, true);
      if (valid.empty()) continue;
      const Eigen::MatrixXd w_train = take_rows(w, train);
      const Eigen::MatrixXd w_valid = take_rows(w, valid);
      const auto a_train = take(a, train);
      const auto a_valid = take(a, valid);
      const auto y_train = take(y, train);
      for (std::size_t k = 0; k < m; ++k) {
        const GlmFit f =
            fit_candidate(ens.candidates[k], features, a_train, w_train, y_train, family);
        const Eigen::VectorXd pred = rcpolicy::predict_rows(f, a_valid, w_valid);
        for (std::size_t r = 0; r < valid.size(); ++r)
          cv_pred(static_cast<Eigen::Index>(valid[r]), static_cast<Eigen::Index>(k)) =
              pred(static_cast<Eigen::Index>(r));
      }
    }
    const SimplexLsResult sls = simplex_least_squares(cv_pred, y);
    ens.weights = sls.weights;
    ens.ensemble_cv_risk = sls.objective;
    ens.cv_risks.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> vertex(m, 0.0);
      vertex[k] = 1.0;
      ens.cv_risks[k] = simplex_objective(cv_pred, y, vertex);
    }
  } else {
    ens.weights = {1.0};
  }

  ens.fits.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    // Zero-weight candidates are still refit so the saved model lists them.
    ens.fits.push_back(fit_candidate(ens.candidates[k], features, a, w, y, family));
    if (ens.fits.back().singular_fallback && ens.weights[k] > 0.0)
      ens.warnings.push_back(ens.candidates[k].name(covariate_names) +
                             ": singular design, intercept-only fallback");
    if (!ens.fits.back().converged && ens.weights[k] > 0.0)
      ens.warnings.push_back(ens.candidates[k].name(covariate_names) +
                             ": IRLS did not converge");
  }
  return ens;
}

double OutcomeModel::predict(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  return std::clamp(ensemble_.predict(a, w), kClip, 1.0 - kClip);
}

std::vector<double> OutcomeModel::predict_rows(int a, const Eigen::MatrixXd& w) const {
  const std::vector<int> arm(static_cast<std::size_t>(w.rows()), a);
  const Eigen::VectorXd raw = ensemble_.predict_rows(arm, w);
  std::vector<double> out(static_cast<std::size_t>(w.rows()));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(raw(static_cast<Eigen::Index>(i)), kClip, 1.0 - kClip);
  return out;
}

OutcomeModel fit_outcome(const Dataset& ds, const StackingOptions& options) {
  require(!options.library.empty(), "outcome library must not be empty");
  require(ds.size() >= static_cast<std::size_t>(options.folds),
          "outcome regression needs at least `folds` rows");
  require(ds.has_both_arms(), "outcome regression needs both treatment arms");
  for (double v : ds.outcome())
    require(v >= 0.0 && v <= 1.0, "outcome regression expects outcomes scaled to [0,1]");
  const Family family =
      ds.outcome_kind() == OutcomeKind::binary ? Family::binomial : Family::gaussian;
  return OutcomeModel(fit_stacked(FeatureSet::treatment_and_covariates, ds.treatment(),
                                  ds.covariates(), ds.outcome(), family, options,
                                  ds.covariate_names()));
}

PropensityModel PropensityModel::constant(double g1, double g_min) {
  require(g_min >= 0.0 && g_min < 0.5, "g_min must lie in [0, 0.5)");
  require(g1 > 0.0 && g1 < 1.0, "known propensity must lie in (0,1)");
  PropensityModel m;
  m.mode_ = PropensityMode::known_constant;
  m.constant_ = g1;
  m.g_min_ = g_min;
  return m;
}

PropensityModel PropensityModel::fitted(GlmFit fit, double g_min) {
  require(g_min >= 0.0 && g_min < 0.5, "g_min must lie in [0, 0.5)");
  PropensityModel m;
  m.mode_ = PropensityMode::estimated;
  m.fit_ = std::move(fit);
  m.g_min_ = g_min;
  return m;
}

double PropensityModel::treated(const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  const double raw = mode_ == PropensityMode::known_constant ? constant_ : fit_.predict(0, w);
  return std::clamp(raw, g_min_, 1.0 - g_min_);
}

std::vector<double> PropensityModel::treated_rows(const Eigen::MatrixXd& w) const {
  std::vector<double> out(static_cast<std::size_t>(w.rows()));
  if (mode_ == PropensityMode::known_constant) {
    std::fill(out.begin(), out.end(), std::clamp(constant_, g_min_, 1.0 - g_min_));
    return out;
  }
  const std::vector<int> dummy(out.size(), 0);
  const Eigen::VectorXd raw = rcpolicy::predict_rows(fit_, dummy, w);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(raw(static_cast<Eigen::Index>(i)), g_min_, 1.0 - g_min_);
  return out;
}

PropensityModel fit_propensity(const Dataset& ds, const PropensityOptions& options) {
  if (options.known_value && !options.fit_when_known)
    return PropensityModel::constant(*options.known_value, options.g_min);
  if (!ds.has_both_arms()) throw ValidationError("single-arm dataset: propensity not estimable");

  std::vector<double> a(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) a[i] = ds.treatment()[i];
  const double treated_fraction = mean(a);
  const GlmFit fit = fit_candidate({LearnerKind::main_terms}, FeatureSet::covariates_only,
                                   ds.treatment(), ds.covariates(), a, Family::binomial);

  // Separation shows up as a non-converged IRLS or fitted values pinned at 0/1.
  bool separated = !fit.converged;
  if (!separated) {
    const std::vector<int> dummy(ds.size(), 0);
    const Eigen::VectorXd g = rcpolicy::predict_rows(fit, dummy, ds.covariates());
    separated = g.minCoeff() < 1e-8 || g.maxCoeff() > 1.0 - 1e-8;
  }
  if (separated || fit.singular_fallback) {
    const double fallback = options.known_value.value_or(treated_fraction);
    PropensityModel m = PropensityModel::constant(fallback, options.g_min);
    m.add_warning(separated ? "propensity: perfect separation, reverted to constant"
                            : "propensity: singular design, reverted to constant");
    return m;
  }
  return PropensityModel::fitted(fit, options.g_min);
}

std::vector<double> make_pseudo_outcome(const Dataset& ds, const OutcomeModel& q,
                                        const PropensityModel& g) {
  const std::vector<double> q1 = q.predict_rows(1, ds.covariates());
  const std::vector<double> q0 = q.predict_rows(0, ds.covariates());
  const std::vector<double> g1 = g.treated_rows(ds.covariates());
  std::vector<double> d(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int a = ds.treatment()[i];
    const double ga = a == 1 ? g1[i] : 1.0 - g1[i];
    const double qa = a == 1 ? q1[i] : q0[i];
    d[i] = (2.0 * a - 1.0) / ga * (ds.outcome()[i] - qa) + q1[i] - q0[i];
  }
  return d;
}

std::vector<double> BlipModel::predict_rows(const Eigen::MatrixXd& w) const {
  const std::vector<int> dummy(static_cast<std::size_t>(w.rows()), 0);
  const Eigen::VectorXd b = ensemble_.predict_rows(dummy, w);
  return {b.data(), b.data() + b.size()};
}

BlipModel fit_blip_on_pseudo(const Dataset& ds, std::span<const double> pseudo,
                             const StackingOptions& options) {
  require(pseudo.size() == ds.size(), "pseudo-outcome length mismatch");
  require(ds.size() >= static_cast<std::size_t>(options.folds),
          "blip regression needs at least `folds` rows");
  for (double v : pseudo) if (!std::isfinite(v)) throw NumericalError("non-finite pseudo-outcome");
  return BlipModel(fit_stacked(FeatureSet::covariates_only, ds.treatment(), ds.covariates(), pseudo,
                               Family::gaussian, options, ds.covariate_names()),
                   ds.covariate_names());
}

BlipModel fit_blip(const Dataset& ds, const OutcomeModel& q, const PropensityModel& g,
                   const StackingOptions& options) {
  const std::vector<double> pseudo = make_pseudo_outcome(ds, q, g);
  return fit_blip_on_pseudo(ds, pseudo, options);
}

}  // namespace rcpolicy
