#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcpolicy/data.hpp"

namespace rcpolicy {

enum class DgpKind {
  adaptr_like,
  constant_blip,
  continuous_blip,
  null_effect,
  one_interaction,
  strong_heterogeneity,
};

const char* to_string(DgpKind kind);
DgpKind dgp_kind_from_string(const std::string& name);

// One covariate profile of a discrete process.
struct DgpCell {
  std::vector<double> w;
  double mass = 0.0;      // renormalized on construction of the spec
  double baseline = 0.0;  // P(Y=1 | A=0, cell)
  double blip = 0.0;      // P(Y=1 | A=1, cell) - baseline
};

/**
 * Synthetic point-treatment process. Discrete kinds draw a cell by mass;
 * continuous_blip draws w1 ~ U(blip_lo, blip_hi) as the blip itself and w2 ~
 * U(0,1) as noise. A ~ Bernoulli(propensity), Y ~ Bernoulli(baseline +
 * A * blip), C = unit_cost * A (+ optional gaussian noise, floored at 0).
 */
struct DgpSpec {
  DgpKind kind = DgpKind::adaptr_like;
  std::vector<std::string> covariate_names;
  std::vector<DgpCell> cells;
  double propensity = 0.5;
  bool with_cost = true;
  double unit_cost = 52.60;
  double cost_noise_sd = 0.0;
  // continuous_blip only
  double blip_lo = 0.01;
  double blip_hi = 0.3;
  double baseline = 0.5;

  static DgpSpec preset(DgpKind kind);
  bool discrete() const { return kind != DgpKind::continuous_blip; }
  // Checks masses, probabilities and propensity; renormalizes masses.
  void validate();
};

Dataset generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

struct OraclePoint {
  double kappa = 0.0;
  double psi = 0.0;
  double tau = 0.0;
  double tie_prob = 0.0;
  double treated = 0.0;  // fraction treated by the optimal stochastic rule
  double chord = 0.0;
  double cost_vs_none = 0.0;    // incremental cost against treat-none
  double effect_vs_none = 0.0;  // psi - E[Y0]
  double icer_vs_none = 0.0;    // cost per percentage point, NaN when effect is 0
};

struct OracleReport {
  double ey0 = 0.0;
  double ey1 = 0.0;
  double ate = 0.0;
  std::vector<OraclePoint> points;
};

// Closed-form truth by greedy allocation of the budget over blip-sorted cells.
OracleReport oracle(const DgpSpec& spec, std::span<const double> kappas);
double oracle_value(const DgpSpec& spec, double kappa);

}  // namespace rcpolicy
