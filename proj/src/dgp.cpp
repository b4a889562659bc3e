#include "rcpolicy/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/rng.hpp"

namespace rcpolicy {

namespace {

struct KindName {
  DgpKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {DgpKind::adaptr_like, "adaptr_like"},
    {DgpKind::constant_blip, "constant_blip"},
    {DgpKind::continuous_blip, "continuous_blip"},
    {DgpKind::null_effect, "null_effect"},
    {DgpKind::one_interaction, "one_interaction"},
    {DgpKind::strong_heterogeneity, "strong_heterogeneity"},
};

// Eight cells over three binary covariates, w1 varying slowest.
template <class Baseline, class Blip>
std::vector<DgpCell> cube(Baseline baseline, Blip blip) {
  std::vector<DgpCell> cells;
  for (int w1 = 0; w1 < 2; ++w1)
    for (int w2 = 0; w2 < 2; ++w2)
      for (int w3 = 0; w3 < 2; ++w3)
        cells.push_back({{double(w1), double(w2), double(w3)}, 0.125, baseline(w1, w2, w3), blip(w1, w2, w3)});
  return cells;
}

}  // namespace

const char* to_string(DgpKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

DgpKind dgp_kind_from_string(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw ValidationError("--dgp: unknown process '" + name + "'");
}

DgpSpec DgpSpec::preset(DgpKind kind) {
  DgpSpec s;
  s.kind = kind;
  switch (kind) {
    case DgpKind::adaptr_like:
      s.covariate_names = {"wagework", "selfemploy", "walk5k"};
      s.cells = {
          {{1, 0, 0}, 0.2170, 0.665, 0.07}, {{0, 0, 0}, 0.3440, 0.665, 0.08},
          {{1, 1, 0}, 0.0521, 0.665, 0.10}, {{0, 1, 0}, 0.3137, 0.665, 0.11},
          {{1, 0, 1}, 0.0109, 0.665, 0.20}, {{0, 0, 1}, 0.0294, 0.665, 0.21},
          {{1, 1, 1}, 0.0034, 0.665, 0.24}, {{0, 1, 1}, 0.0294, 0.665, 0.25},
      };
      break;
    case DgpKind::constant_blip:
      s.covariate_names = {"w1", "w2", "w3"};
      s.cells = cube([](int, int, int) { return 0.5; }, [](int, int, int) { return 0.1; });
      break;
    case DgpKind::null_effect:
      s.covariate_names = {"w1", "w2", "w3"};
      s.cells = cube([](int, int, int) { return 0.5; }, [](int, int, int) { return 0.0; });
      break;
    case DgpKind::one_interaction:
      s.covariate_names = {"w1", "w2", "w3"};
      s.cells = cube([](int, int w2, int) { return 0.4 + 0.1 * w2; },
                     [](int w1, int, int) { return 0.3 * w1; });
      break;
    case DgpKind::strong_heterogeneity:
      s.covariate_names = {"w1", "w2", "w3"};
      s.cells = cube([](int, int, int) { return 0.35; }, [](int w1, int, int) { return 0.3 * w1; });
      break;
    case DgpKind::continuous_blip:
      s.covariate_names = {"w1", "w2"};
      break;
  }
  s.validate();
  return s;
}

void DgpSpec::validate() {
  require(propensity > 0.0 && propensity < 1.0, "propensity must lie in (0,1)");
  require(unit_cost >= 0.0 && cost_noise_sd >= 0.0, "cost parameters must be nonnegative");
  if (!discrete()) {
    require(covariate_names.size() == 2, "continuous_blip has two covariates");
    require(blip_lo > 0.0 && blip_lo < blip_hi, "continuous blip range must satisfy 0 < lo < hi");
    require(baseline >= 0.0 && baseline + blip_hi <= 1.0, "baseline + blip must be a probability");
    return;
  }
  require(!cells.empty(), "a discrete process needs at least one cell");
  double total = 0.0;
  for (const auto& c : cells) {
    require(c.w.size() == covariate_names.size(), "cell covariate arity mismatch");
    require(c.mass >= 0.0, "cell masses must be nonnegative");
    require(c.baseline >= 0.0 && c.baseline <= 1.0 && c.baseline + c.blip >= 0.0 &&
                c.baseline + c.blip <= 1.0,
            "baseline and baseline + blip must be probabilities");
    total += c.mass;
  }
  require(total > 0.0, "cell masses sum to zero");
  for (auto& c : cells) c.mass /= total;
}

Dataset generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "--n: sample size must be at least 1");
  const std::size_t p = spec.covariate_names.size();
  Rng rng(seed);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<int> a(n);
  std::vector<double> y(n);
  std::vector<double> c(n);

  std::vector<double> cumulative;
  for (const auto& cell : spec.cells)
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + cell.mass);

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double base = 0.0, blip = 0.0;
    if (spec.discrete()) {
      const double u = rng.uniform() * cumulative.back();
      std::size_t k = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      k = std::min(k, spec.cells.size() - 1);
      const DgpCell& cell = spec.cells[k];
      for (std::size_t j = 0; j < p; ++j) w(row, static_cast<Eigen::Index>(j)) = cell.w[j];
      base = cell.baseline;
      blip = cell.blip;
    } else {
      blip = spec.blip_lo + (spec.blip_hi - spec.blip_lo) * rng.uniform();
      w(row, 0) = blip;
      w(row, 1) = rng.uniform();
      base = spec.baseline;
    }
    a[i] = rng.bernoulli(spec.propensity) ? 1 : 0;
    y[i] = rng.bernoulli(base + a[i] * blip) ? 1.0 : 0.0;
    if (spec.with_cost) {
      double cost = spec.unit_cost;
      if (spec.cost_noise_sd > 0.0) cost = std::max(0.0, cost + spec.cost_noise_sd * rng.normal());
      c[i] = a[i] * cost;
    }
  }
  std::optional<std::vector<double>> cost;
  if (spec.with_cost) cost = std::move(c);
  return Dataset(std::move(w), std::move(a), std::move(y), std::move(cost), spec.covariate_names,
                 OutcomeKind::binary, Bounds{0.0, 1.0});
}

namespace {

struct Atom {
  double blip;
  double mass;
};

OraclePoint discrete_point(const std::vector<Atom>& atoms, double ey0, double kappa) {
  OraclePoint pt;
  pt.kappa = kappa;
  pt.psi = ey0;
  double remaining = kappa;
  bool split = false;
  for (const Atom& at : atoms) {
    if (at.blip <= 0.0) break;
    const double take = std::min(at.mass, remaining);
    pt.psi += take * at.blip;
    pt.treated += take;
    remaining -= take;
    if (take < at.mass) {
      pt.tau = at.blip;
      pt.tie_prob = take / at.mass;
      split = true;
      break;
    }
  }
  if (!split) {
    pt.tau = 0.0;
    pt.tie_prob = 0.0;
  }
  return pt;
}

OraclePoint continuous_point(const DgpSpec& s, double kappa) {
  OraclePoint pt;
  pt.kappa = kappa;
  const double lo = s.blip_lo, hi = s.blip_hi;
  const double eta = kappa >= 1.0 ? lo : hi - kappa * (hi - lo);
  pt.tau = kappa >= 1.0 ? 0.0 : eta;
  pt.treated = kappa;
  pt.psi = s.baseline + (hi * hi - eta * eta) / (2.0 * (hi - lo));
  return pt;
}

}  // namespace

OracleReport oracle(const DgpSpec& spec, std::span<const double> kappas) {
  OracleReport r;
  std::vector<Atom> atoms;
  if (spec.discrete()) {
    for (const auto& c : spec.cells) {
      r.ey0 += c.mass * c.baseline;
      r.ate += c.mass * c.blip;
    }
    // Sorted descending; equal blips merge into one atom.
    std::vector<DgpCell> sorted = spec.cells;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const DgpCell& l, const DgpCell& rr) { return l.blip > rr.blip; });
    for (const auto& c : sorted) {
      if (!atoms.empty() && std::abs(atoms.back().blip - c.blip) <= 1e-12)
        atoms.back().mass += c.mass;
      else
        atoms.push_back({c.blip, c.mass});
    }
  } else {
    r.ey0 = spec.baseline;
    r.ate = 0.5 * (spec.blip_lo + spec.blip_hi);
  }
  r.ey1 = r.ey0 + r.ate;
  for (double k : kappas) {
    require(k >= 0.0 && k <= 1.0, "kappa must lie in [0,1]");
    OraclePoint pt = spec.discrete() ? discrete_point(atoms, r.ey0, k) : continuous_point(spec, k);
    pt.chord = r.ey0 + k * r.ate;
    pt.effect_vs_none = pt.psi - r.ey0;
    pt.cost_vs_none = spec.with_cost ? spec.unit_cost * pt.treated : 0.0;
    pt.icer_vs_none = pt.effect_vs_none > 0.0 ? pt.cost_vs_none / (100.0 * pt.effect_vs_none)
                                              : std::numeric_limits<double>::quiet_NaN();
    r.points.push_back(pt);
  }
  return r;
}

double oracle_value(const DgpSpec& spec, double kappa) {
  const double k[] = {kappa};
  return oracle(spec, k).points.front().psi;
}

}  // namespace rcpolicy
