#include "rcpolicy/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcpolicy/errors.hpp"
#include "rcpolicy/stats.hpp"

namespace rcpolicy {

namespace {

constexpr double kMaxLogit = 30.0;
constexpr int kMaxIrls = 50;

double binomial_deviance(std::span<const double> y, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = std::clamp(mu(static_cast<Eigen::Index>(i)), 1e-15, 1.0 - 1e-15);
    if (y[i] > 0.0) dev -= 2.0 * y[i] * std::log(m);
    if (y[i] < 1.0) dev -= 2.0 * (1.0 - y[i]) * std::log(1.0 - m);
  }
  return dev;
}

GlmFit intercept_only(std::span<const double> y, Family family) {
  GlmFit fit;
  fit.terms = {Term{}};
  fit.family = family;
  const double ybar = mean(y);
  fit.coef = Eigen::VectorXd::Constant(1, ybar);
  if (family == Family::binomial) {
    fit.coef(0) = ybar <= 0.0 ? -kMaxLogit : ybar >= 1.0 ? kMaxLogit
                                                         : std::clamp(logit(ybar), -kMaxLogit, kMaxLogit);
    fit.deviance = binomial_deviance(y, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(y.size()),
                                                                  expit(fit.coef(0))));
  } else {
    double rss = 0.0;
    for (double v : y) rss += (v - ybar) * (v - ybar);
    fit.deviance = rss;
  }
  return fit;
}

}  // namespace

std::string Term::label(const std::vector<std::string>& names) const {
  auto wname = [&](int j) {
    return j >= 0 && static_cast<std::size_t>(j) < names.size() ? names[j]
                                                                : "w" + std::to_string(j + 1);
  };
  switch (kind) {
    case Kind::intercept: return "(intercept)";
    case Kind::treatment: return "A";
    case Kind::covariate: return wname(covariate);
    case Kind::interaction: return "A:" + wname(covariate);
  }
  return "?";
}

double GlmFit::linear_predictor(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  double eta = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k)
    eta += coef(static_cast<Eigen::Index>(k)) * terms[k].evaluate(a, w);
  return eta;
}

double GlmFit::predict(int a, const Eigen::Ref<const Eigen::RowVectorXd>& w) const {
  const double eta = linear_predictor(a, w);
  return family == Family::binomial ? expit(std::clamp(eta, -kMaxLogit, kMaxLogit)) : eta;
}

double GlmFit::aic(std::size_t n) const {
  const double k = static_cast<double>(terms.size());
  if (family == Family::binomial) return deviance + 2.0 * k;
  const double nn = static_cast<double>(n);
  return nn * std::log(std::max(deviance, 1e-300) / nn) + 2.0 * k;
}

Eigen::MatrixXd build_design(const std::vector<Term>& terms, std::span<const int> a,
                             const Eigen::MatrixXd& w) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Term& t = terms[k];
    const auto col = static_cast<Eigen::Index>(k);
    switch (t.kind) {
      case Term::Kind::intercept: x.col(col).setOnes(); break;
      case Term::Kind::treatment:
        for (Eigen::Index i = 0; i < n; ++i) x(i, col) = a[static_cast<std::size_t>(i)];
        break;
      case Term::Kind::covariate: x.col(col) = w.col(t.covariate); break;
      case Term::Kind::interaction:
        for (Eigen::Index i = 0; i < n; ++i)
          x(i, col) = a[static_cast<std::size_t>(i)] * w(i, t.covariate);
        break;
    }
  }
  return x;
}

GlmFit fit_glm(const std::vector<Term>& terms, std::span<const int> a, const Eigen::MatrixXd& w,
               std::span<const double> y, Family family) {
  require(!terms.empty() && terms.front().kind == Term::Kind::intercept,
          "GLM terms must start with the intercept");
  require(!y.empty() && y.size() == a.size(), "GLM response length mismatch");
  if (terms.size() == 1) return intercept_only(y, family);

  const Eigen::MatrixXd x = build_design(terms, a, w);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols() || x.rows() <= x.cols()) {
    GlmFit fit = intercept_only(y, family);
    fit.singular_fallback = true;
    return fit;
  }

  GlmFit fit;
  fit.terms = terms;
  fit.family = family;
  if (family == Family::gaussian) {
    fit.coef = qr.solve(yv);
    fit.deviance = (yv - x * fit.coef).squaredNorm();
    return fit;
  }

  const double ybar = yv.mean();
  if (ybar <= 0.0 || ybar >= 1.0) return intercept_only(y, family);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  beta(0) = logit(ybar);
  Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd mu = eta.unaryExpr([](double e) { return expit(e); });
  double dev = binomial_deviance(y, mu);
  fit.converged = false;
  for (int iter = 0; iter < kMaxIrls; ++iter) {
    const Eigen::VectorXd var = mu.unaryExpr([](double m) {
      return std::max(m * (1.0 - m), 1e-10);
    });
    const Eigen::VectorXd z = eta + (yv - mu).cwiseQuotient(var);
    const Eigen::MatrixXd xtwx = x.transpose() * var.asDiagonal() * x;
    const Eigen::VectorXd xtwz = x.transpose() * var.cwiseProduct(z);
    const Eigen::VectorXd proposal = xtwx.ldlt().solve(xtwz);
    if (!proposal.allFinite()) break;

    // Step halving keeps the deviance non-increasing.
    Eigen::VectorXd step = proposal - beta;
    double new_dev = std::numeric_limits<double>::infinity();
    Eigen::VectorXd new_beta, new_eta, new_mu;
    for (int half = 0; half < 30; ++half) {
      new_beta = beta + step;
      new_eta = (x * new_beta).cwiseMax(-kMaxLogit).cwiseMin(kMaxLogit);
      new_mu = new_eta.unaryExpr([](double e) { return expit(e); });
      new_dev = binomial_deviance(y, new_mu);
      if (new_dev <= dev + 1e-12 * (1.0 + dev)) break;
      step *= 0.5;
    }
    const double change = std::abs(dev - new_dev);
    beta = new_beta;
    eta = new_eta;
    mu = new_mu;
    dev = new_dev;
    if (change < 1e-10 * (std::abs(dev) + 0.1)) {
      fit.converged = true;
      break;
    }
  }
  fit.coef = beta;
  fit.deviance = dev;
  return fit;
}

Eigen::VectorXd predict_rows(const GlmFit& fit, std::span<const int> a, const Eigen::MatrixXd& w) {
  Eigen::VectorXd eta = build_design(fit.terms, a, w) * fit.coef;
  if (fit.family == Family::binomial)
    eta = eta.unaryExpr([](double e) { return expit(std::clamp(e, -kMaxLogit, kMaxLogit)); });
  return eta;
}

GlmFit fit_stepwise_aic(const std::vector<Term>& pool, std::span<const int> a,
                        const Eigen::MatrixXd& w, std::span<const double> y, Family family,
                        int max_terms) {
  std::vector<Term> current = {Term{}};
  GlmFit best = fit_glm(current, a, w, y, family);
  double best_aic = best.aic(y.size());
  std::vector<Term> remaining = pool;
  while (static_cast<int>(current.size()) - 1 < max_terms && !remaining.empty()) {
    std::size_t pick = remaining.size();
    GlmFit pick_fit;
    double pick_aic = best_aic;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      std::vector<Term> trial = current;
      trial.push_back(remaining[k]);
      GlmFit f = fit_glm(trial, a, w, y, family);
      if (f.singular_fallback) continue;
      const double aic = f.aic(y.size());
      if (aic < pick_aic - 1e-12) {
        pick = k;
        pick_aic = aic;
        pick_fit = std::move(f);
      }
    }
    if (pick == remaining.size()) break;
    current.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    best = std::move(pick_fit);
    best_aic = pick_aic;
  }
  return best;
}

}  // namespace rcpolicy
