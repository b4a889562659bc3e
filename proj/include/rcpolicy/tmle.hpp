#pragma once

#include <span>
#include <string>
#include <vector>

#include "rcpolicy/data.hpp"
#include "rcpolicy/learners.hpp"
#include "rcpolicy/rc_rule.hpp"
#include "rcpolicy/targeting.hpp"

namespace rcpolicy {

enum class RuleKind { resource_constrained, treat_all, treat_none };

struct RuleSpec {
  RuleKind kind = RuleKind::resource_constrained;
  double kappa = 0.0;

  static RuleSpec constrained(double kappa) { return {RuleKind::resource_constrained, kappa}; }
  static RuleSpec treat_all() { return {RuleKind::treat_all, 1.0}; }
  static RuleSpec treat_none() { return {RuleKind::treat_none, 0.0}; }
};

const char* to_string(RuleKind kind);

/**
 * Value estimate with influence-function inference, on the outcome's original
 * scale. ci = psi -/+ z * se with se = sqrt(mean(eif^2) / n).
 */
struct ValueEstimate {
  RuleKind rule = RuleKind::resource_constrained;
  double kappa = 0.0;
  double psi = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> eif;
  double pct_treated = 0.0;
  double pct_stochastic = 0.0;
  double tau = 0.0;               // mean of fold_tau
  std::vector<double> fold_tau;
  bool cross_validated = false;
  double epsilon = 0.0;
  double score_mean = 0.0;        // post-fluctuation, unit scale
  double confidence = 0.95;
};

ValueEstimate make_estimate(const TargetingResult& targeted, std::span<const double> policy1,
                            const OutcomeScale& scale, RuleSpec rule, double confidence);

// TMLE of the value of a fitted policy; ds must carry a [0,1] outcome (see
// scale_outcome). Nuisances are evaluated on the rows of ds.
ValueEstimate tmle_value(const Dataset& ds, const RulePolicy& policy, const OutcomeModel& q,
                         const PropensityModel& g, double confidence = 0.95);

// TMLE of a static rule (treat everyone or no one) through the same kernel.
ValueEstimate tmle_static(const Dataset& ds, RuleKind rule, const OutcomeModel& q,
                          const PropensityModel& g, double confidence = 0.95);

// Difference target - comparator with per-row EIF difference. Both estimates
// must come from the same rows (and folds).
ValueEstimate contrast(const ValueEstimate& target, const ValueEstimate& comparator);

}  // namespace rcpolicy
