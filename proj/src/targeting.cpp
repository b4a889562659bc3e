#include "rcpolicy/targeting.hpp"

#include <algorithm>
#include <cmath>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

std::vector<double> EifComponents::total() const {
  std::vector<double> d(residual.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = residual[i] + plug_in[i] + centering[i] + penalty[i];
  return d;
}

namespace {

struct Fluctuation {
  std::span<const double> y;
  std::span<const double> offset;
  std::span<const double> weight;

  // Mean weighted score and its derivative at epsilon.
  void score(double eps, double& s, double& ds) const {
    s = 0.0;
    ds = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (weight[i] == 0.0) continue;
      const double p = expit(offset[i] + eps);
      s += weight[i] * (y[i] - p);
      ds -= weight[i] * p * (1.0 - p);
    }
    const double n = static_cast<double>(y.size());
    s /= n;
    ds /= n;
  }
};

}  // namespace

TargetingResult target_value(const TargetingInput& in) {
  const std::size_t n = in.y.size();
  require(n > 0, "targeting needs at least one row");
  require(in.a.size() == n && in.q0.size() == n && in.q1.size() == n && in.g1.size() == n &&
              in.policy1.size() == n && in.tau.size() == n,
          "targeting inputs have mismatched lengths");

  TargetingResult out;
  out.clever.resize(n);
  std::vector<double> offset(n);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool treated = in.a[i] == 1;
    const double ga = treated ? in.g1[i] : 1.0 - in.g1[i];
    const double pa = treated ? in.policy1[i] : 1.0 - in.policy1[i];
    out.clever[i] = pa / ga;
    offset[i] = logit(treated ? in.q1[i] : in.q0[i]);
    total_weight += out.clever[i];
    if (!std::isfinite(out.clever[i]) || !std::isfinite(offset[i]))
      throw NumericalError("non-finite clever covariate or offset at row " + std::to_string(i + 1));
  }

  // The weighted log-likelihood is concave in epsilon: Newton with a bracket.
  double eps = 0.0;
  if (total_weight > 0.0) {
    const Fluctuation f{in.y, offset, out.clever};
    double lo = -50.0, hi = 50.0;
    double s = 0.0, ds = 0.0;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      f.score(eps, s, ds);
      out.iterations = iter;
      if (std::abs(s) <= 1e-12) {
        converged = true;
        break;
      }
      // score decreases in epsilon
      if (s > 0.0) lo = eps; else hi = eps;
      double next = ds < 0.0 ? eps - s / ds : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      eps = next;
      if (hi - lo <= 1e-12 * (1.0 + std::abs(eps))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericalError("TMLE fluctuation did not converge in 100 iterations");
  }
  out.epsilon = eps;

  out.q0_star.resize(n);
  out.q1_star.resize(n);
  auto& eif = out.eif;
  eif.residual.resize(n);
  eif.plug_in.resize(n);
  eif.centering.resize(n);
  eif.penalty.resize(n);
  double psi = 0.0, score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.q0_star[i] = expit(logit(in.q0[i]) + eps);
    out.q1_star[i] = expit(logit(in.q1[i]) + eps);
    const double qa = in.a[i] == 1 ? out.q1_star[i] : out.q0_star[i];
    eif.residual[i] = out.clever[i] * (in.y[i] - qa);
    eif.plug_in[i] = out.q1_star[i] * in.policy1[i] + out.q0_star[i] * (1.0 - in.policy1[i]);
    eif.penalty[i] = -in.tau[i] * (in.policy1[i] - in.kappa);
    psi += eif.plug_in[i];
    score += eif.residual[i];
  }
  out.psi = psi / static_cast<double>(n);
  out.score_mean = score / static_cast<double>(n);
  std::fill(eif.centering.begin(), eif.centering.end(), -out.psi);
  return out;
}

}  // namespace rcpolicy
