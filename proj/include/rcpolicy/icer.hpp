#pragma once

#include <span>
#include <string>
#include <vector>

#include "rcpolicy/crossfit.hpp"
#include "rcpolicy/tmle.hpp"

namespace rcpolicy {

enum class Comparator { treat_none, treat_all };

const char* to_string(Comparator c);
Comparator comparator_from_string(const std::string& name);

struct IcerOptions {
  // Report the effectiveness difference in percentage points for binary outcomes.
  bool percentage_points = true;
  // Instability guard on |denominator| measured on the unit outcome scale.
  double eps_den = 1e-4;
};

struct IcerEstimate {
  double kappa = 0.0;
  Comparator comparator = Comparator::treat_none;
  double numerator = 0.0;    // incremental cost
  double denominator = 0.0;  // incremental effectiveness, reporting units
  bool percentage_points = false;
  double ratio = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool unstable = false;  // ratio, se and ci are NaN when set
  std::vector<double> ic;
  ValueEstimate outcome_policy;
  ValueEstimate outcome_comparator;
  ValueEstimate cost_policy;
  ValueEstimate cost_comparator;
};

double icer_ratio(double numerator, double denominator);

// Needs a CrossFit built with costs. The four TMLEs share folds and nuisances.
IcerEstimate icer(const CrossFit& cf, double kappa, Comparator comparator,
                  const EstimatorConfig& config, const IcerOptions& options = {});

std::vector<IcerEstimate> icer_curve(const CrossFit& cf, std::span<const double> kappas,
                                     Comparator comparator, const EstimatorConfig& config,
                                     const IcerOptions& options = {});

}  // namespace rcpolicy
