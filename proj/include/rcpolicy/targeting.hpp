#pragma once

#include <span>
#include <vector>

namespace rcpolicy {

// Per-row inputs to one targeting step, all on the unit outcome scale.
struct TargetingInput {
  std::span<const double> y;
  std::span<const int> a;
  std::span<const double> q0;       // Ê[Y|0,W_i], clipped away from {0,1}
  std::span<const double> q1;       // Ê[Y|1,W_i]
  std::span<const double> g1;       // ĝ(1|W_i), truncated
  std::span<const double> policy1;  // g̃(1|W_i)
  std::span<const double> tau;      // threshold used in the penalty term, per row
  double kappa = 0.0;
};

// The four additive pieces of the efficient influence function, per row.
struct EifComponents {
  std::vector<double> residual;   // H (Y - Q*(A,W))
  std::vector<double> plug_in;    // Q*(1,W) g̃(1|W) + Q*(0,W) g̃(0|W)
  std::vector<double> centering;  // -psi
  std::vector<double> penalty;    // -tau (g̃(1|W) - kappa)

  std::vector<double> total() const;
};

struct TargetingResult {
  double epsilon = 0.0;
  int iterations = 0;
  double score_mean = 0.0;  // (1/n) sum H (Y - Q*), ~0 after targeting
  double psi = 0.0;         // unit scale
  std::vector<double> clever;
  std::vector<double> q0_star;
  std::vector<double> q1_star;
  EifComponents eif;
};

/**
 * Weighted intercept-only logistic fluctuation of Ê[Y|A,W] with clever
 * covariate weights H = g̃(A|W)/ĝ(A|W), solved by safeguarded 1-D Newton to a
 * mean-score tolerance of 1e-12, then the plug-in value and its EIF.
 * Throws NumericalError if Newton fails within 100 iterations.
 */
TargetingResult target_value(const TargetingInput& in);

}  // namespace rcpolicy
