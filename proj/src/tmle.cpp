#include "rcpolicy/tmle.hpp"

#include <cmath>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

const char* to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::resource_constrained: return "resource_constrained";
    case RuleKind::treat_all: return "treat_all";
    case RuleKind::treat_none: return "treat_none";
  }
  return "unknown";
}

namespace {

void set_interval(ValueEstimate& est) {
  const double n = static_cast<double>(est.eif.size());
  est.se = root_mean_square(est.eif) / std::sqrt(n);
  const double z = critical_value(est.confidence);
  est.ci_lo = est.psi - z * est.se;
  est.ci_hi = est.psi + z * est.se;
}

struct Nuisance {
  std::vector<double> q0, q1, g1;
};

Nuisance evaluate_nuisance(const Dataset& ds, const OutcomeModel& q, const PropensityModel& g) {
  for (double v : ds.outcome())
    require(v >= 0.0 && v <= 1.0, "TMLE expects an outcome scaled to [0,1]");
  return {q.predict_rows(0, ds.covariates()), q.predict_rows(1, ds.covariates()),
          g.treated_rows(ds.covariates())};
}

}  // namespace

ValueEstimate make_estimate(const TargetingResult& targeted, std::span<const double> policy1,
                            const OutcomeScale& scale, RuleSpec rule, double confidence) {
  ValueEstimate est;
  est.rule = rule.kind;
  est.kappa = rule.kappa;
  est.confidence = confidence;
  est.psi = scale.to_original(targeted.psi);
  est.eif = targeted.eif.total();
  for (double& d : est.eif) d *= scale.range();
  est.epsilon = targeted.epsilon;
  est.score_mean = targeted.score_mean;
  est.pct_treated = mean(policy1);
  est.pct_stochastic = fraction_stochastic(policy1);
  set_interval(est);
  return est;
}

ValueEstimate tmle_value(const Dataset& ds, const RulePolicy& policy, const OutcomeModel& q,
                         const PropensityModel& g, double confidence) {
  const Nuisance nu = evaluate_nuisance(ds, q, g);
  const std::vector<double> policy1 = policy.assign_rows(ds.covariates());
  const double tau = policy.threshold().tau;
  const std::vector<double> taus(ds.size(), tau);
  const RuleSpec rule = RuleSpec::constrained(policy.threshold().kappa);
  const TargetingInput in{ds.outcome(), ds.treatment(), nu.q0, nu.q1, nu.g1, policy1, taus, rule.kappa};
  ValueEstimate est = make_estimate(target_value(in), policy1, ds.outcome_scale(), rule, confidence);
  est.tau = tau;
  est.fold_tau = {tau};
  return est;
}

ValueEstimate tmle_static(const Dataset& ds, RuleKind kind, const OutcomeModel& q,
                          const PropensityModel& g, double confidence) {
  require(kind != RuleKind::resource_constrained, "tmle_static needs a static rule");
  const Nuisance nu = evaluate_nuisance(ds, q, g);
  const RuleSpec rule = kind == RuleKind::treat_all ? RuleSpec::treat_all() : RuleSpec::treat_none();
  const std::vector<double> policy1(ds.size(), rule.kappa);
  const std::vector<double> taus(ds.size(), 0.0);
  const TargetingInput in{ds.outcome(), ds.treatment(), nu.q0, nu.q1, nu.g1, policy1, taus, rule.kappa};
  ValueEstimate est = make_estimate(target_value(in), policy1, ds.outcome_scale(), rule, confidence);
  est.fold_tau = {0.0};
  return est;
}

ValueEstimate contrast(const ValueEstimate& target, const ValueEstimate& comparator) {
  require(target.eif.size() == comparator.eif.size(),
          "contrast needs estimates computed on the same rows");
  ValueEstimate d = target;
  d.psi = target.psi - comparator.psi;
  for (std::size_t i = 0; i < d.eif.size(); ++i) d.eif[i] = target.eif[i] - comparator.eif[i];
  set_interval(d);
  return d;
}

}  // namespace rcpolicy
