#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "rcpolicy/data.hpp"
#include "rcpolicy/learners.hpp"

namespace rcpolicy {

// Blip values closer than this are one atom of the blip distribution.
inline constexpr double kBlipTieTolerance = 1e-9;

/**
 * Threshold of the resource-constrained rule for budget kappa.
 *
 * eta = inf{t : S(t) <= kappa} with S(t) = P(B > t); tau = max(eta, 0).
 * Units with B = tau > 0 are treated with probability tie_prob, which spends
 * exactly the budget left after everyone with B > tau.
 */
struct ThresholdSolution {
  double kappa = 0.0;
  double eta = 0.0;       // -infinity when the budget never binds
  double tau = 0.0;
  double s_at_tau = 0.0;  // S(tau)
  double tie_mass = 0.0;  // P(B = tau)
  double tie_prob = 0.0;

  bool eta_unbounded() const { return std::isinf(eta) && eta < 0.0; }
  double expected_treated() const { return s_at_tau + tie_prob * tie_mass; }
};

// Fraction of blips strictly greater than tau.
double survival(std::span<const double> blips, double tau);
// Mass-function form: masses need not be normalized.
double survival(std::span<const double> values, std::span<const double> masses, double tau);

ThresholdSolution solve_threshold(std::span<const double> blips, double kappa);
ThresholdSolution solve_threshold(std::span<const double> values, std::span<const double> masses,
                                  double kappa);

// Stochastic rule: 1 above tau, tie_prob at tau when tau > 0, 0 otherwise.
double stochastic_assignment(const ThresholdSolution& t, double blip);
// Deterministic rule: I[B > tau].
double deterministic_assignment(const ThresholdSolution& t, double blip);

enum class PolicyKind { deterministic, stochastic };

/**
 * Resource-constrained treatment rule bound to a fitted blip model. The
 * threshold is solved once on the in-sample blip distribution; any new w is
 * assigned by comparing B_n(w) against the stored tau.
 */
class RulePolicy {
 public:
  RulePolicy(std::shared_ptr<const BlipModel> model, ThresholdSolution threshold, PolicyKind kind,
             double pct_treated, double pct_stochastic);

  PolicyKind kind() const { return kind_; }
  const ThresholdSolution& threshold() const { return threshold_; }
  const BlipModel& model() const { return *model_; }
  std::shared_ptr<const BlipModel> model_ptr() const { return model_; }

  double assign_blip(double blip) const;
  double assign(const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
    return assign_blip(model_->predict(w));
  }
  std::vector<double> assign_rows(const Eigen::MatrixXd& w) const;

  // In-sample mean assignment and fraction of rows with 0 < assign < 1.
  double pct_treated() const { return pct_treated_; }
  double pct_stochastic() const { return pct_stochastic_; }

 private:
  std::shared_ptr<const BlipModel> model_;
  ThresholdSolution threshold_;
  PolicyKind kind_;
  double pct_treated_;
  double pct_stochastic_;
};

RulePolicy build_policy(std::shared_ptr<const BlipModel> model, const Dataset& ds, double kappa,
                        PolicyKind kind = PolicyKind::stochastic);

// Fraction of probabilities strictly inside (0,1).
double fraction_stochastic(std::span<const double> assignment);

}  // namespace rcpolicy
