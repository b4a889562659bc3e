#include "rcpolicy/msm.hpp"

#include <cmath>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/rng.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

const char* to_string(BootstrapMode mode) {
  return mode == BootstrapMode::refit ? "refit" : "fixed-rule";
}

BootstrapMode bootstrap_mode_from_string(const std::string& name) {
  if (name == "refit") return BootstrapMode::refit;
  if (name == "fixed-rule" || name == "fixed_rule") return BootstrapMode::fixed_rule;
  throw ValidationError("--mode: expected refit or fixed-rule, got '" + name + "'");
}

std::vector<double> default_kappa_grid() {
  std::vector<double> k(11);
  for (int i = 0; i <= 10; ++i) k[static_cast<std::size_t>(i)] = i / 10.0;
  return k;
}

MsmCoefficients fit_msm(std::span<const double> kappas, std::span<const double> values,
                        std::span<const double> weights) {
  require(kappas.size() == values.size(), "kappa and value lists differ in length");
  require(weights.empty() || weights.size() == kappas.size(), "weight list length mismatch");
  require(kappas.size() >= 2, "the working model needs at least two kappa values");
  double sw = 0.0, sk = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    require(std::isfinite(kappas[i]) && std::isfinite(values[i]), "MSM inputs must be finite");
    const double w = weights.empty() ? 1.0 : weights[i];
    require(w >= 0.0 && std::isfinite(w), "MSM weights must be finite and nonnegative");
    sw += w;
    sk += w * kappas[i];
    sv += w * values[i];
  }
  require(sw > 0.0, "MSM weights sum to zero");
  const double kbar = sk / sw, vbar = sv / sw;
  double skk = 0.0, skv = 0.0;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    skk += w * (kappas[i] - kbar) * (kappas[i] - kbar);
    skv += w * (kappas[i] - kbar) * (values[i] - vbar);
  }
  require(skk > 0.0, "the working model needs at least two distinct kappa values");
  MsmCoefficients c;
  c.beta1 = skv / skk;
  c.beta0 = vbar - c.beta1 * kbar;
  return c;
}

MsmPoint msm_point(const CrossFit& cf, std::span<const double> kappas,
                   const EstimatorConfig& config, bool weighted) {
  MsmPoint p;
  p.kappas.assign(kappas.begin(), kappas.end());
  std::vector<double> weights;
  for (double k : kappas) {
    const ValueEstimate v = evaluate_rule(cf, RuleSpec::constrained(k), config);
    p.values.push_back(v.psi);
    p.ses.push_back(v.se);
    if (weighted) {
      require(v.se > 0.0, "precision weights need a positive standard error at every kappa");
      weights.push_back(1.0 / (v.se * v.se));
    }
  }
  p.coef = fit_msm(p.kappas, p.values, weights);
  const double none = evaluate_rule(cf, RuleSpec::treat_none(), config).psi;
  const double all = evaluate_rule(cf, RuleSpec::treat_all(), config).psi;
  p.chord = Chord{none, all - none};
  p.contrast_intercept = p.coef.beta0 - p.chord.intercept;
  p.contrast_slope = p.coef.beta1 - p.chord.slope;
  return p;
}

namespace {

constexpr std::uint64_t kDrawStream = 50000;
constexpr std::uint64_t kFitStream = 60000;
constexpr int kMaxRedraws = 10;

bool both_arms_twice(const std::vector<std::size_t>& rows, std::span<const int> a) {
  std::size_t treated = 0;
  for (std::size_t i : rows) treated += static_cast<std::size_t>(a[i]);
  return treated >= 2 && rows.size() - treated >= 2;
}

// Bootstrap rows for replicate r; redraws when an arm has fewer than two rows.
std::vector<std::size_t> draw_rows(std::size_t n, std::span<const int> a, std::uint64_t seed,
                                   std::size_t r, int& redraws) {
  Rng rng(derive_seed(seed, kDrawStream + r));
  std::vector<std::size_t> rows(n);
  for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
    for (auto& i : rows) i = rng.index(n);
    if (both_arms_twice(rows, a)) return rows;
    ++redraws;
  }
  throw NumericalError("bootstrap replicate " + std::to_string(r + 1) +
                       " drew a single arm in " + std::to_string(kMaxRedraws + 1) + " attempts");
}

// Non-CV fit on a bootstrap sample that keeps the full-data rule: blips are
// the full-data predictions of the drawn rows and thresholds are solved on
// the full-data blip distribution.
CrossFit fixed_rule_fit(const Dataset& sample, const std::vector<std::size_t>& rows,
                        const CrossFit& full, const EstimatorConfig& config) {
  const Dataset scaled = scale_outcome(sample);
  const OutcomeModel q = fit_outcome(
      scaled, StackingOptions{config.outcome_library, config.sl_folds, config.seed});
  const PropensityModel g = fit_propensity(scaled, config.propensity);
  CrossFit cf;
  cf.cross_validated = false;
  cf.a.assign(scaled.treatment().begin(), scaled.treatment().end());
  cf.fold.assign(rows.size(), 0);
  cf.g1 = g.treated_rows(scaled.covariates());
  cf.blip.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) cf.blip[r] = full.blip[rows[r]];
  OutcomeTrack y;
  y.name = full.tracks[kOutcomeTrack].name;
  y.kind = scaled.outcome_kind();
  y.scale = scaled.outcome_scale();
  y.y.assign(scaled.outcome().begin(), scaled.outcome().end());
  y.q0 = q.predict_rows(0, scaled.covariates());
  y.q1 = q.predict_rows(1, scaled.covariates());
  cf.tracks.push_back(std::move(y));
  FoldFit f;
  f.valid.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) f.valid[r] = r;
  f.train = f.valid;
  f.train_blips = full.folds[0].train_blips;
  cf.folds.push_back(std::move(f));
  return cf;
}

Interval quantile_interval(const std::vector<MsmPoint>& draws, double confidence,
                           double (*pick)(const MsmPoint&)) {
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& d : draws) v.push_back(pick(d));
  const double alpha = (1.0 - confidence) / 2.0;
  return {quantile_type7(v, alpha), quantile_type7(v, 1.0 - alpha)};
}

}  // namespace

MsmFit msm_with_bootstrap(const Dataset& ds, const MsmOptions& options,
                          const EstimatorConfig& config) {
  require(options.replicates >= 1, "--bootstrap: at least one replicate is required");
  const std::vector<double> kappas = options.kappas.empty() ? default_kappa_grid() : options.kappas;

  MsmFit fit;
  fit.point = msm_point(cross_fit(ds, config), kappas, config, options.weighted);
  fit.replicates = options.replicates;

  CrossFit full_rule;
  if (options.mode == BootstrapMode::fixed_rule) full_rule = in_sample_fit(ds, config);

  const std::size_t reps = static_cast<std::size_t>(options.replicates);
  fit.draws.resize(reps);
  std::vector<int> redraws(reps, 0);
  for_each_index(config.execution, reps, [&](std::size_t r) {
    const std::vector<std::size_t> rows = draw_rows(ds.size(), ds.treatment(), config.seed, r, redraws[r]);
    const Dataset sample = ds.subset(rows);
    EstimatorConfig rc = config;
    rc.seed = derive_seed(config.seed, kFitStream + r);
    const CrossFit cf = options.mode == BootstrapMode::refit ? cross_fit(sample, rc)
                                                             : fixed_rule_fit(sample, rows, full_rule, rc);
    fit.draws[r] = msm_point(cf, kappas, rc, options.weighted);
  });
  for (int d : redraws) fit.redraws += d;

  const double conf = config.confidence;
  fit.beta0_ci = quantile_interval(fit.draws, conf, [](const MsmPoint& p) { return p.coef.beta0; });
  fit.beta1_ci = quantile_interval(fit.draws, conf, [](const MsmPoint& p) { return p.coef.beta1; });
  fit.chord_intercept_ci = quantile_interval(fit.draws, conf, [](const MsmPoint& p) { return p.chord.intercept; });
  fit.chord_slope_ci = quantile_interval(fit.draws, conf, [](const MsmPoint& p) { return p.chord.slope; });
  fit.contrast_intercept_ci =
      quantile_interval(fit.draws, conf, [](const MsmPoint& p) { return p.contrast_intercept; });
  fit.contrast_slope_ci = quantile_interval(fit.draws, conf, [](const MsmPoint& p) { return p.contrast_slope; });
  return fit;
}

}  // namespace rcpolicy
