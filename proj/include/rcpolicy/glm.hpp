#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rcpolicy {

// One column of a regression design built from (A, W).
struct Term {
  enum class Kind { intercept, treatment, covariate, interaction };
  Kind kind = Kind::intercept;
  int covariate = -1;  // index into W for covariate/interaction

  double evaluate(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
    switch (kind) {
      case Kind::intercept: return 1.0;
      case Kind::treatment: return static_cast<double>(a);
      case Kind::covariate: return w(covariate);
      case Kind::interaction: return static_cast<double>(a) * w(covariate);
    }
    return 0.0;
  }
  std::string label(const std::vector<std::string>& names) const;
  bool operator==(const Term&) const = default;
};

enum class Family { gaussian, binomial };

struct GlmFit {
  std::vector<Term> terms;
  Eigen::VectorXd coef;
  Family family = Family::gaussian;
  double deviance = 0.0;  // RSS for gaussian, -2 loglik for binomial
  bool converged = true;
  bool singular_fallback = false;

  double linear_predictor(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  // Mean on the response scale (expit for binomial).
  double predict(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const;
  double aic(std::size_t n) const;
};

Eigen::MatrixXd build_design(const std::vector<Term>& terms, std::span<const int> a,
                             const Eigen::MatrixXd& w);

/**
 * Maximum-likelihood GLM fit: least squares for gaussian, IRLS with step
 * halving for binomial. A rank-deficient design falls back to the
 * intercept-only model and sets singular_fallback.
 */
GlmFit fit_glm(const std::vector<Term>& terms, std::span<const int> a, const Eigen::MatrixXd& w,
               std::span<const double> y, Family family);

// Response-scale predictions for every row of w, with treatment a.
Eigen::VectorXd predict_rows(const GlmFit& fit, std::span<const int> a, const Eigen::MatrixXd& w);

// Forward selection from {intercept} over `pool`, adding the term that most
// lowers AIC until no term helps or max_terms non-intercept terms are in.
GlmFit fit_stepwise_aic(const std::vector<Term>& pool, std::span<const int> a,
                        const Eigen::MatrixXd& w, std::span<const double> y, Family family,
                        int max_terms);

}  // namespace rcpolicy
