#pragma once

#include <string>
#include <vector>

#include "rcpolicy/data.hpp"

namespace rcpolicy {

// Difference in arm means within one level of a discrete covariate.
struct SubgroupLevel {
  double level = 0.0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  double effect = 0.0;  // NaN when an arm is empty at this level
};

struct SubgroupResult {
  std::string covariate;
  double p_value = 1.0;
  bool flagged = false;
  bool skipped = false;
  std::string note;
  std::vector<SubgroupLevel> levels;  // only for covariates with <= 10 distinct values
};

/**
 * Per-covariate effect-modification scan. For each W_j, a gaussian likelihood
 * ratio test of Y ~ A + W_j + A:W_j against Y ~ A + W_j (1 df); p < alpha is
 * flagged. Constant covariates are skipped with a note.
 */
std::vector<SubgroupResult> subgroup_scan(const Dataset& ds, double alpha = 0.1);

}  // namespace rcpolicy
