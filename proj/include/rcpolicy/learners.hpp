#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcpolicy/data.hpp"
#include "rcpolicy/glm.hpp"
#include "rcpolicy/parallel.hpp"

namespace rcpolicy {

enum class LearnerKind { mean, main_terms, univariate, stepwise_aic };

/**
 * One candidate in a stacked library.
 *
 * In an outcome regression the features are (A, W, A*W); in a propensity or
 * blip regression they are W alone. A univariate learner without a covariate
 * index is a placeholder that expands to one learner per covariate.
 */
struct LearnerSpec {
  LearnerKind kind = LearnerKind::mean;
  int covariate = -1;
  int max_terms = 5;  // stepwise_aic only

  std::string name(const std::vector<std::string>& covariate_names = {}) const;
  bool operator==(const LearnerSpec&) const = default;
};

// Accepts "mean", "main_terms", "univariate", "univariate:<index or name>",
// "stepwise_aic".
LearnerSpec parse_learner(const std::string& text, const std::vector<std::string>& covariate_names);
std::vector<LearnerSpec> expand_library(const std::vector<LearnerSpec>& library,
                                        std::size_t num_covariates);
std::vector<LearnerSpec> default_outcome_library();
std::vector<LearnerSpec> default_blip_library();

enum class FeatureSet { treatment_and_covariates, covariates_only };

GlmFit fit_candidate(const LearnerSpec& spec, FeatureSet features, std::span<const int> a,
                     const Eigen::MatrixXd& w, std::span<const double> y, Family family);

// Seeded fold labels in [0, folds), permuted separately within each arm.
std::vector<int> assign_folds(std::span<const int> a, int folds, std::uint64_t seed);

/**
 * Convex combination of candidate fits, weighted by simplex least squares on
 * cross-validated predictions and refit on all rows.
 */
struct StackedEnsemble {
  std::vector<LearnerSpec> candidates;
  std::vector<GlmFit> fits;
  std::vector<double> weights;
  std::vector<double> cv_risks;  // empty when the library has one candidate
  double ensemble_cv_risk = 0.0;
  std::vector<std::string> warnings;

  double predict(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  Eigen::VectorXd predict_rows(std::span<const int> a, const Eigen::MatrixXd& w) const;
};

struct StackingOptions {
  std::vector<LearnerSpec> library;
  int folds = 10;
  std::uint64_t seed = 1;
};

StackedEnsemble fit_stacked(FeatureSet features, std::span<const int> a, const Eigen::MatrixXd& w,
                            std::span<const double> y, Family family,
                            const StackingOptions& options,
                            const std::vector<std::string>& covariate_names = {});

// Ê[Y|A,W] on the unit outcome scale.
class OutcomeModel {
 public:
  static constexpr double kClip = 1e-6;

  OutcomeModel() = default;
  explicit OutcomeModel(StackedEnsemble ensemble) : ensemble_(std::move(ensemble)) {}

  // Clipped to [1e-6, 1 - 1e-6].
  double predict(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  std::vector<double> predict_rows(int a, const Eigen::MatrixXd& w) const;
  const StackedEnsemble& ensemble() const { return ensemble_; }

 private:
  StackedEnsemble ensemble_;
};

OutcomeModel fit_outcome(const Dataset& ds, const StackingOptions& options);

enum class PropensityMode { known_constant, estimated };

class PropensityModel {
 public:
  PropensityModel() = default;
  static PropensityModel constant(double g1, double g_min);
  static PropensityModel fitted(GlmFit fit, double g_min);

  // ĝ(1|w), truncated to [g_min, 1 - g_min].
  double treated(const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  double probability(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
    const double g1 = treated(w);
    return a == 1 ? g1 : 1.0 - g1;
  }
  std::vector<double> treated_rows(const Eigen::MatrixXd& w) const;
  PropensityMode mode() const { return mode_; }
  double g_min() const { return g_min_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  PropensityMode mode_ = PropensityMode::known_constant;
  double constant_ = 0.5;
  GlmFit fit_;
  double g_min_ = 0.01;
  std::vector<std::string> warnings_;
};

struct PropensityOptions {
  std::optional<double> known_value;
  // With a known value, still fit the main-terms logistic A ~ W.
  bool fit_when_known = false;
  double g_min = 0.01;
};

PropensityModel fit_propensity(const Dataset& ds, const PropensityOptions& options);

// Doubly robust blip transform:
// D = (2A-1)/ĝ(A|W) (Y - Ê[Y|A,W]) + Ê[Y|1,W] - Ê[Y|0,W].
std::vector<double> make_pseudo_outcome(const Dataset& ds, const OutcomeModel& q,
                                        const PropensityModel& g);

// B_n(w): a stacked regression of the pseudo-outcome on W.
class BlipModel {
 public:
  BlipModel() = default;
  BlipModel(StackedEnsemble ensemble, std::vector<std::string> covariate_names)
      : ensemble_(std::move(ensemble)), names_(std::move(covariate_names)) {}

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
    return ensemble_.predict(0, w);
  }
  std::vector<double> predict_rows(const Eigen::MatrixXd& w) const;
  const StackedEnsemble& ensemble() const { return ensemble_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

 private:
  StackedEnsemble ensemble_;
  std::vector<std::string> names_;
};

BlipModel fit_blip(const Dataset& ds, const OutcomeModel& q, const PropensityModel& g,
                   const StackingOptions& options);
BlipModel fit_blip_on_pseudo(const Dataset& ds, std::span<const double> pseudo,
                             const StackingOptions& options);

}  // namespace rcpolicy
