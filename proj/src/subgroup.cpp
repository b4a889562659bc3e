#include "rcpolicy/subgroup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/glm.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

std::vector<SubgroupResult> subgroup_scan(const Dataset& ds, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  require(ds.size() > 4, "subgroup scan needs more than 4 observations");
  const auto& w = ds.covariates();
  const double n = static_cast<double>(ds.size());
  using K = Term::Kind;

  std::vector<SubgroupResult> out;
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    SubgroupResult r;
    r.covariate = ds.covariate_names()[static_cast<std::size_t>(j)];
    if (w.col(j).minCoeff() == w.col(j).maxCoeff()) {
      r.skipped = true;
      r.note = "covariate constant in sample";
      out.push_back(std::move(r));
      continue;
    }
    const int jj = static_cast<int>(j);
    const GlmFit reduced = fit_glm({Term{}, {K::treatment}, {K::covariate, jj}}, ds.treatment(), w,
                                   ds.outcome(), Family::gaussian);
    const GlmFit full =
        fit_glm({Term{}, {K::treatment}, {K::covariate, jj}, {K::interaction, jj}},
                ds.treatment(), w, ds.outcome(), Family::gaussian);
    if (reduced.singular_fallback || full.singular_fallback) {
      r.skipped = true;
      r.note = "interaction model not estimable (treatment aliased with covariate)";
      out.push_back(std::move(r));
      continue;
    }
    // Gaussian LRT with profiled variance: n log(RSS0 / RSS1) ~ chi2(1).
    const double stat =
        full.deviance > 0.0 ? n * std::log(reduced.deviance / full.deviance)
                            : std::numeric_limits<double>::infinity();
    r.p_value = chi2_1df_survival(std::max(stat, 0.0));
    r.flagged = r.p_value < alpha;

    std::map<double, std::array<double, 4>> cells;  // sum1, n1, sum0, n0
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto& c = cells[w(static_cast<Eigen::Index>(i), j)];
      if (ds.treatment()[i] == 1) {
        c[0] += ds.outcome()[i];
        c[1] += 1.0;
      } else {
        c[2] += ds.outcome()[i];
        c[3] += 1.0;
      }
      if (cells.size() > 10) break;
    }
    if (cells.size() <= 10) {
      for (const auto& [level, c] : cells) {
        SubgroupLevel l;
        l.level = level;
        l.n_treated = static_cast<std::size_t>(c[1]);
        l.n_control = static_cast<std::size_t>(c[3]);
        l.effect = (c[1] > 0 && c[3] > 0) ? c[0] / c[1] - c[2] / c[3]
                                          : std::numeric_limits<double>::quiet_NaN();
        r.levels.push_back(l);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rcpolicy
