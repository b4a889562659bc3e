#include "rcpolicy/icer.hpp"

#include <cmath>
#include <limits>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

const char* to_string(Comparator c) { return c == Comparator::treat_none ? "treat-none" : "treat-all"; }

Comparator comparator_from_string(const std::string& name) {
  if (name == "treat-none" || name == "treat_none") return Comparator::treat_none;
  if (name == "treat-all" || name == "treat_all") return Comparator::treat_all;
  throw ValidationError("--comparator: expected treat-none or treat-all, got '" + name + "'");
}

double icer_ratio(double numerator, double denominator) {
  require(denominator != 0.0, "ICER denominator is zero");
  return numerator / denominator;
}

IcerEstimate icer(const CrossFit& cf, double kappa, Comparator comparator,
                  const EstimatorConfig& config, const IcerOptions& options) {
  require(cf.has_cost(), "ICER needs a cost column (--cost-col)");
  const RuleSpec policy = RuleSpec::constrained(kappa);
  const RuleSpec other = comparator == Comparator::treat_none ? RuleSpec::treat_none() : RuleSpec::treat_all();

  IcerEstimate e;
  e.kappa = kappa;
  e.comparator = comparator;
  e.outcome_policy = evaluate_rule(cf, policy, config, kOutcomeTrack);
  e.outcome_comparator = evaluate_rule(cf, other, config, kOutcomeTrack);
  e.cost_policy = evaluate_rule(cf, policy, config, kCostTrack);
  e.cost_comparator = evaluate_rule(cf, other, config, kCostTrack);

  const ValueEstimate num = contrast(e.cost_policy, e.cost_comparator);
  ValueEstimate den = contrast(e.outcome_policy, e.outcome_comparator);
  const OutcomeScale& yscale = cf.tracks[kOutcomeTrack].scale;
  const bool binary = cf.tracks[kOutcomeTrack].kind == OutcomeKind::binary;
  const double unit_den = den.psi / yscale.range();

  e.percentage_points = binary && options.percentage_points;
  const double units = e.percentage_points ? 100.0 : 1.0;
  e.numerator = num.psi;
  e.denominator = den.psi * units;

  if (std::abs(unit_den) <= options.eps_den) {
    e.unstable = true;
    e.ratio = e.se = e.ci_lo = e.ci_hi = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  e.ratio = icer_ratio(e.numerator, e.denominator);
  e.ic.resize(num.eif.size());
  for (std::size_t i = 0; i < e.ic.size(); ++i)
    e.ic[i] = (num.eif[i] - e.ratio * den.eif[i] * units) / e.denominator;
  e.se = root_mean_square(e.ic) / std::sqrt(static_cast<double>(e.ic.size()));
  const double z = critical_value(config.confidence);
  e.ci_lo = e.ratio - z * e.se;
  e.ci_hi = e.ratio + z * e.se;
  return e;
}

std::vector<IcerEstimate> icer_curve(const CrossFit& cf, std::span<const double> kappas,
                                     Comparator comparator, const EstimatorConfig& config,
                                     const IcerOptions& options) {
  std::vector<IcerEstimate> out(kappas.size());
  for_each_index(config.execution, kappas.size(),
                 [&](std::size_t k) { out[k] = icer(cf, kappas[k], comparator, config, options); });
  return out;
}

}  // namespace rcpolicy
