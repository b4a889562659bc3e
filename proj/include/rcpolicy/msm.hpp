#pragma once

#include <span>
#include <vector>

#include "rcpolicy/crossfit.hpp"
#include "rcpolicy/data.hpp"

namespace rcpolicy {

struct MsmCoefficients {
  double beta0 = 0.0;
  double beta1 = 0.0;
};

// OLS of values on kappas. With weights, minimizes sum w (v - b0 - b1 k)^2.
MsmCoefficients fit_msm(std::span<const double> kappas, std::span<const double> values,
                        std::span<const double> weights = {});

// Straight line from the treat-none value to the treat-all value: what random
// allocation of the budget achieves.
struct Chord {
  double intercept = 0.0;  // treat-none value
  double slope = 0.0;      // treat-all minus treat-none
  double at(double kappa) const { return intercept + slope * kappa; }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool covers(double x) const { return lo <= x && x <= hi; }
};

// Point quantities of the working model on one fit.
struct MsmPoint {
  std::vector<double> kappas;
  std::vector<double> values;
  std::vector<double> ses;
  MsmCoefficients coef;
  Chord chord;
  double contrast_intercept = 0.0;  // beta0 - chord intercept
  double contrast_slope = 0.0;      // beta1 - chord slope
};

enum class BootstrapMode { refit, fixed_rule };

const char* to_string(BootstrapMode mode);
BootstrapMode bootstrap_mode_from_string(const std::string& name);

struct MsmOptions {
  std::vector<double> kappas;
  int replicates = 1000;
  BootstrapMode mode = BootstrapMode::refit;
  bool weighted = false;  // inverse-variance weights 1/se^2
};

struct MsmFit {
  MsmPoint point;
  int replicates = 0;
  int redraws = 0;  // bootstrap samples rejected for lacking an arm
  Interval beta0_ci;
  Interval beta1_ci;
  Interval chord_intercept_ci;
  Interval chord_slope_ci;
  Interval contrast_intercept_ci;
  Interval contrast_slope_ci;
  std::vector<MsmPoint> draws;
};

MsmPoint msm_point(const CrossFit& cf, std::span<const double> kappas,
                   const EstimatorConfig& config, bool weighted = false);

/**
 * Point fit from full-data CV-TMLE values plus nonparametric bootstrap
 * quantile intervals (type 7). In refit mode every replicate reruns the whole
 * cross-fitted pipeline; in fixed_rule mode the full-data rule is held and
 * only the nuisances and values are re-estimated (non-CV TMLE).
 */
MsmFit msm_with_bootstrap(const Dataset& ds, const MsmOptions& options,
                          const EstimatorConfig& config);

std::vector<double> default_kappa_grid();

}  // namespace rcpolicy
