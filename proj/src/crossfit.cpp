#include "rcpolicy/crossfit.hpp"

#include <algorithm>
#include <memory>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/rng.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

namespace {

// Stream offsets for derive_seed, one block per kind of fit.
constexpr std::uint64_t kOutcomeStream = 1000;
constexpr std::uint64_t kBlipStream = 2000;
constexpr std::uint64_t kCostStream = 3000;
constexpr std::uint64_t kSharedBlipStream = 4000;

Dataset cost_dataset(const Dataset& scaled, const OutcomeScale& scale) {
  std::vector<double> unit(scaled.size());
  const auto c = scaled.cost();
  for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = std::clamp(scale.to_unit(c[i]), 0.0, 1.0);
  return scaled.with_outcome(std::move(unit), OutcomeKind::bounded_real, Bounds{0.0, 1.0},
                             scaled.columns().cost);
}

StackingOptions stacking(const std::vector<LearnerSpec>& library, const EstimatorConfig& config,
                         std::uint64_t stream) {
  return StackingOptions{library, config.sl_folds, derive_seed(config.seed, stream)};
}

struct Prepared {
  Dataset outcome;
  std::optional<Dataset> cost;
  OutcomeScale cost_scale;
};

Prepared prepare(const Dataset& ds, bool with_cost) {
  require(ds.has_both_arms(), "single-arm dataset: both treatment arms are required");
  Prepared p{scale_outcome(ds), std::nullopt, {}};
  if (with_cost) {
    require(ds.has_cost(), "cost column required for cost estimation");
    p.cost_scale = cost_scale(ds.cost());
    p.cost = cost_dataset(p.outcome, p.cost_scale);
  }
  return p;
}

CrossFit empty_fit(const Prepared& p, std::size_t folds) {
  const std::size_t n = p.outcome.size();
  CrossFit cf;
  cf.a.assign(p.outcome.treatment().begin(), p.outcome.treatment().end());
  cf.fold.assign(n, 0);
  cf.g1.assign(n, 0.0);
  cf.blip.assign(n, 0.0);
  OutcomeTrack y{p.outcome.columns().outcome, p.outcome.outcome_kind(), p.outcome.outcome_scale(),
                 {p.outcome.outcome().begin(), p.outcome.outcome().end()},
                 std::vector<double>(n), std::vector<double>(n)};
  cf.tracks.push_back(std::move(y));
  if (p.cost) {
    OutcomeTrack c{p.cost->columns().outcome, OutcomeKind::bounded_real, p.cost_scale,
                   {p.cost->outcome().begin(), p.cost->outcome().end()},
                   std::vector<double>(n), std::vector<double>(n)};
    cf.tracks.push_back(std::move(c));
  }
  cf.folds.resize(folds);
  return cf;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& w, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), w.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = w.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

// Fits fold v on its training rows and writes predictions into its
// validation rows. Folds own disjoint validation rows.
void fit_fold(const Prepared& p, const EstimatorConfig& config, const BlipModel* shared,
              std::size_t v, CrossFit& cf) {
  FoldFit& f = cf.folds[v];
  const Dataset train = p.outcome.subset(f.train);
  const OutcomeModel q = fit_outcome(train, stacking(config.outcome_library, config, kOutcomeStream + v));
  const PropensityModel g = fit_propensity(train, config.propensity);
  for (const auto& w : q.ensemble().warnings) f.warnings.push_back("outcome: " + w);
  for (const auto& w : g.warnings()) f.warnings.push_back("propensity: " + w);

  BlipModel local;
  if (shared == nullptr) {
    local = fit_blip(train, q, g, stacking(config.blip_library, config, kBlipStream + v));
    for (const auto& w : local.ensemble().warnings) f.warnings.push_back("blip: " + w);
  }
  const BlipModel& b = shared != nullptr ? *shared : local;
  f.train_blips = b.predict_rows(train.covariates());

  const Eigen::MatrixXd wv = rows_of(p.outcome.covariates(), f.valid);
  const std::vector<double> g1 = g.treated_rows(wv);
  const std::vector<double> blip = b.predict_rows(wv);
  const std::vector<double> q0 = q.predict_rows(0, wv);
  const std::vector<double> q1 = q.predict_rows(1, wv);
  OutcomeTrack& y = cf.tracks[kOutcomeTrack];
  for (std::size_t r = 0; r < f.valid.size(); ++r) {
    const std::size_t i = f.valid[r];
    cf.fold[i] = static_cast<int>(v);
    cf.g1[i] = g1[r];
    cf.blip[i] = blip[r];
    y.q0[i] = q0[r];
    y.q1[i] = q1[r];
  }

  if (p.cost) {
    const Dataset cost_train = p.cost->subset(f.train);
    const OutcomeModel qc = fit_outcome(cost_train, stacking(config.outcome_library, config, kCostStream + v));
    for (const auto& w : qc.ensemble().warnings) f.warnings.push_back("cost: " + w);
    const std::vector<double> c0 = qc.predict_rows(0, wv);
    const std::vector<double> c1 = qc.predict_rows(1, wv);
    OutcomeTrack& c = cf.tracks[kCostTrack];
    for (std::size_t r = 0; r < f.valid.size(); ++r) {
      c.q0[f.valid[r]] = c0[r];
      c.q1[f.valid[r]] = c1[r];
    }
  }
}

std::unique_ptr<BlipModel> shared_blip(const Prepared& p, const EstimatorConfig& config) {
  if (config.blip_fit != BlipFit::shared) return nullptr;
  const OutcomeModel q = fit_outcome(p.outcome, stacking(config.outcome_library, config, kSharedBlipStream));
  const PropensityModel g = fit_propensity(p.outcome, config.propensity);
  return std::make_unique<BlipModel>(
      fit_blip(p.outcome, q, g, stacking(config.blip_library, config, kSharedBlipStream + 1)));
}

}  // namespace

OutcomeScale cost_scale(std::span<const double> cost) {
  require(!cost.empty(), "empty cost column");
  const auto [lo, hi] = std::minmax_element(cost.begin(), cost.end());
  // A constant cost still needs an invertible map.
  return *hi > *lo ? OutcomeScale{*lo, *hi} : OutcomeScale{*lo, *lo + 1.0};
}

CrossFit cross_fit(const Dataset& ds, const EstimatorConfig& config, bool with_cost) {
  require(config.folds >= 2, "folds must be at least 2");
  const Prepared p = prepare(ds, with_cost);
  const std::size_t folds = static_cast<std::size_t>(config.folds);
  CrossFit cf = empty_fit(p, folds);

  const std::vector<int> labels = assign_folds(cf.a, config.folds, config.seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t v = 0; v < folds; ++v) {
      if (labels[i] == static_cast<int>(v))
        cf.folds[v].valid.push_back(i);
      else
        cf.folds[v].train.push_back(i);
    }
  }

  const auto shared = shared_blip(p, config);
  for_each_index(config.execution, folds,
                 [&](std::size_t v) { fit_fold(p, config, shared.get(), v, cf); });
  return cf;
}

CrossFit in_sample_fit(const Dataset& ds, const EstimatorConfig& config, bool with_cost) {
  const Prepared p = prepare(ds, with_cost);
  CrossFit cf = empty_fit(p, 1);
  cf.cross_validated = false;
  cf.folds[0].train.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) cf.folds[0].train[i] = i;
  cf.folds[0].valid = cf.folds[0].train;
  EstimatorConfig full = config;
  full.blip_fit = BlipFit::per_fold;
  fit_fold(p, full, nullptr, 0, cf);
  return cf;
}

PolicyAssignment assign_policy(const CrossFit& cf, RuleSpec rule, PolicyKind kind) {
  require(rule.kappa >= 0.0 && rule.kappa <= 1.0, "kappa must lie in [0,1]");
  const std::size_t n = cf.size();
  PolicyAssignment out;
  out.policy1.assign(n, 0.0);
  out.tau.assign(n, 0.0);
  out.fold_tau.assign(cf.folds.size(), 0.0);
  if (rule.kind != RuleKind::resource_constrained) {
    std::fill(out.policy1.begin(), out.policy1.end(), rule.kind == RuleKind::treat_all ? 1.0 : 0.0);
    return out;
  }
  for (std::size_t v = 0; v < cf.folds.size(); ++v) {
    const FoldFit& f = cf.folds[v];
    const ThresholdSolution t = solve_threshold(f.train_blips, rule.kappa);
    out.fold_tau[v] = t.tau;
    for (std::size_t i : f.valid) {
      out.policy1[i] = kind == PolicyKind::stochastic ? stochastic_assignment(t, cf.blip[i])
                                                      : deterministic_assignment(t, cf.blip[i]);
      out.tau[i] = t.tau;
    }
  }
  return out;
}

ValueEstimate evaluate_rule(const CrossFit& cf, RuleSpec rule, const EstimatorConfig& config,
                            std::size_t track) {
  require(track < cf.tracks.size(), "requested outcome track is not available");
  const OutcomeTrack& t = cf.tracks[track];
  const PolicyAssignment pa = assign_policy(cf, rule, config.policy);
  TargetingInput in{t.y, cf.a, t.q0, t.q1, cf.g1, pa.policy1, pa.tau, rule.kappa};
  ValueEstimate est = make_estimate(target_value(in), pa.policy1, t.scale, rule, config.confidence);
  est.fold_tau = pa.fold_tau;
  est.tau = mean(pa.fold_tau);
  est.cross_validated = cf.cross_validated;
  return est;
}

ValueEstimate cv_tmle_value(const Dataset& ds, double kappa, const EstimatorConfig& config) {
  return evaluate_rule(cross_fit(ds, config), RuleSpec::constrained(kappa), config);
}

std::vector<GridEntry> evaluate_grid(const CrossFit& cf, std::span<const double> kappas,
                                     const EstimatorConfig& config) {
  const ValueEstimate all = evaluate_rule(cf, RuleSpec::treat_all(), config);
  const ValueEstimate none = evaluate_rule(cf, RuleSpec::treat_none(), config);
  std::vector<GridEntry> out;
  out.reserve(kappas.size());
  for (double k : kappas) {
    GridEntry e;
    e.value = evaluate_rule(cf, RuleSpec::constrained(k), config);
    e.vs_treat_all = contrast(e.value, all);
    e.vs_treat_none = contrast(e.value, none);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rcpolicy
