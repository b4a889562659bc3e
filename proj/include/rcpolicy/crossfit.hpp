#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcpolicy/data.hpp"
#include "rcpolicy/learners.hpp"
#include "rcpolicy/parallel.hpp"
#include "rcpolicy/rc_rule.hpp"
#include "rcpolicy/tmle.hpp"

namespace rcpolicy {

// Whether each CV fold refits its own blip model or reuses one full-data fit.
enum class BlipFit { per_fold, shared };

struct EstimatorConfig {
  std::vector<LearnerSpec> outcome_library = default_outcome_library();
  std::vector<LearnerSpec> blip_library = default_blip_library();
  int folds = 10;     // outer CV-TMLE folds
  int sl_folds = 10;  // inner stacking folds
  std::uint64_t seed = 1;
  PropensityOptions propensity;
  BlipFit blip_fit = BlipFit::per_fold;
  PolicyKind policy = PolicyKind::stochastic;
  double confidence = 0.95;
  Execution execution = Execution::parallel;
};

// One outcome column carried through cross-fitting (the outcome, or the cost).
struct OutcomeTrack {
  std::string name;
  OutcomeKind kind = OutcomeKind::binary;
  OutcomeScale scale;     // unit scale -> original scale
  std::vector<double> y;  // unit scale
  std::vector<double> q0;
  std::vector<double> q1;
};

struct FoldFit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<double> train_blips;  // the distribution the fold's threshold is solved on
  std::vector<std::string> warnings;
};

/**
 * Out-of-fold nuisance and blip predictions for every row. Track 0 is the
 * outcome; track 1, when present, is the cost.
 *
 * An in-sample fit is the single-fold case with train = valid = all rows.
 */
struct CrossFit {
  bool cross_validated = true;
  std::vector<int> a;
  std::vector<int> fold;
  std::vector<double> g1;
  std::vector<double> blip;
  std::vector<OutcomeTrack> tracks;
  std::vector<FoldFit> folds;

  std::size_t size() const { return a.size(); }
  bool has_cost() const { return tracks.size() > 1; }
};

inline constexpr std::size_t kOutcomeTrack = 0;
inline constexpr std::size_t kCostTrack = 1;

// Scales a cost column to [0,1] by its observed bounds.
OutcomeScale cost_scale(std::span<const double> cost);

CrossFit cross_fit(const Dataset& ds, const EstimatorConfig& config, bool with_cost = false);
CrossFit in_sample_fit(const Dataset& ds, const EstimatorConfig& config, bool with_cost = false);

struct PolicyAssignment {
  std::vector<double> policy1;
  std::vector<double> tau;       // per row
  std::vector<double> fold_tau;  // per fold
};

PolicyAssignment assign_policy(const CrossFit& cf, RuleSpec rule, PolicyKind kind);

ValueEstimate evaluate_rule(const CrossFit& cf, RuleSpec rule, const EstimatorConfig& config,
                            std::size_t track = kOutcomeTrack);

ValueEstimate cv_tmle_value(const Dataset& ds, double kappa, const EstimatorConfig& config);

struct GridEntry {
  ValueEstimate value;
  ValueEstimate vs_treat_all;
  ValueEstimate vs_treat_none;
};

std::vector<GridEntry> evaluate_grid(const CrossFit& cf, std::span<const double> kappas,
                                     const EstimatorConfig& config);

}  // namespace rcpolicy
