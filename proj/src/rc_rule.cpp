#include "rcpolicy/rc_rule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rcpolicy/errors.hpp"

namespace rcpolicy {

double survival(std::span<const double> blips, double tau) {
  require(!blips.empty(), "survival of an empty blip list");
  std::size_t above = 0;
  for (double b : blips) {
    require(std::isfinite(b), "blip values must be finite");
    if (b > tau) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(blips.size());
}

double survival(std::span<const double> values, std::span<const double> masses, double tau) {
  require(values.size() == masses.size() && !values.empty(), "mass function length mismatch");
  double total = 0.0, above = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    total += masses[i];
    if (values[i] > tau) above += masses[i];
  }
  require(total > 0.0, "mass function has zero total mass");
  return above / total;
}

ThresholdSolution solve_threshold(std::span<const double> values, std::span<const double> masses,
                                  double kappa) {
  require(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0,1]");
  require(values.size() == masses.size() && !values.empty(), "mass function length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "blip values must be finite");
    require(masses[i] >= 0.0, "masses must be nonnegative");
    total += masses[i];
  }
  require(total > 0.0, "mass function has zero total mass");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] > values[r]; });

  // Atoms: each group spans [top - tol, top] and is represented by its top.
  std::vector<double> atom_value;
  std::vector<double> atom_mass;
  for (std::size_t idx : order) {
    if (atom_value.empty() || values[idx] < atom_value.back() - kBlipTieTolerance) {
      atom_value.push_back(values[idx]);
      atom_mass.push_back(0.0);
    }
    atom_mass.back() += masses[idx] / total;
  }

  ThresholdSolution t;
  t.kappa = kappa;
  // K = number of top atoms that fit entirely in the budget.
  std::size_t fit = 0;
  double cumulative = 0.0;
  while (fit < atom_value.size() && cumulative + atom_mass[fit] <= kappa + 1e-12) {
    cumulative += atom_mass[fit];
    ++fit;
  }
  t.eta = fit == atom_value.size() ? -std::numeric_limits<double>::infinity() : atom_value[fit];
  t.tau = std::max(t.eta, 0.0);

  if (t.tau > 0.0) {
    t.s_at_tau = cumulative;
    t.tie_mass = atom_mass[fit];
    t.tie_prob = std::clamp((kappa - cumulative) / t.tie_mass, 0.0, 1.0);
  } else {
    // Unconstrained rule I[B > 0]; no randomization at zero.
    double above = 0.0, at_zero = 0.0;
    for (std::size_t k = 0; k < atom_value.size(); ++k) {
      if (atom_value[k] > 0.0)
        above += atom_mass[k];
      else if (atom_value[k] >= -kBlipTieTolerance)
        at_zero += atom_mass[k];
    }
    t.s_at_tau = above;
    t.tie_mass = at_zero;
    t.tie_prob = 0.0;
  }
  return t;
}

ThresholdSolution solve_threshold(std::span<const double> blips, double kappa) {
  const std::vector<double> unit(blips.size(), 1.0);
  return solve_threshold(blips, unit, kappa);
}

double stochastic_assignment(const ThresholdSolution& t, double blip) {
  if (blip > t.tau) return 1.0;
  if (t.tau > 0.0 && blip >= t.tau - kBlipTieTolerance) return t.tie_prob;
  return 0.0;
}

double deterministic_assignment(const ThresholdSolution& t, double blip) {
  return blip > t.tau ? 1.0 : 0.0;
}

RulePolicy::RulePolicy(std::shared_ptr<const BlipModel> model, ThresholdSolution threshold,
                       PolicyKind kind, double pct_treated, double pct_stochastic)
    : model_(std::move(model)),
      threshold_(threshold),
      kind_(kind),
      pct_treated_(pct_treated),
      pct_stochastic_(pct_stochastic) {
  require(model_ != nullptr, "policy requires a fitted blip model");
}

double RulePolicy::assign_blip(double blip) const {
  return kind_ == PolicyKind::stochastic ? stochastic_assignment(threshold_, blip)
                                         : deterministic_assignment(threshold_, blip);
}

std::vector<double> RulePolicy::assign_rows(const Eigen::MatrixXd& w) const {
  std::vector<double> out = model_->predict_rows(w);
  for (double& v : out) v = assign_blip(v);
  return out;
}

double fraction_stochastic(std::span<const double> assignment) {
  if (assignment.empty()) return 0.0;
  std::size_t k = 0;
  for (double p : assignment)
    if (p > 0.0 && p < 1.0) ++k;
  return static_cast<double>(k) / static_cast<double>(assignment.size());
}

RulePolicy build_policy(std::shared_ptr<const BlipModel> model, const Dataset& ds, double kappa,
                        PolicyKind kind) {
  require(model != nullptr, "policy requires a fitted blip model");
  require(ds.size() > 0, "cannot build a policy on an empty dataset");
  const std::vector<double> blips = model->predict_rows(ds.covariates());
  const ThresholdSolution t = solve_threshold(blips, kappa);
  std::vector<double> assignment(blips.size());
  for (std::size_t i = 0; i < blips.size(); ++i)
    assignment[i] = kind == PolicyKind::stochastic ? stochastic_assignment(t, blips[i])
                                                   : deterministic_assignment(t, blips[i]);
  double treated = 0.0;
  for (double p : assignment) treated += p;
  return RulePolicy(std::move(model), t, kind, treated / static_cast<double>(assignment.size()),
                    fraction_stochastic(assignment));
}

}  // namespace rcpolicy
