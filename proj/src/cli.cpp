#include "rcpolicy/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcpolicy/config.hpp"
#include "rcpolicy/crossfit.hpp"
#include "rcpolicy/dgp.hpp"
#include "rcpolicy/errors.hpp"
#include "rcpolicy/icer.hpp"
#include "rcpolicy/msm.hpp"
#include "rcpolicy/rc_rule.hpp"
#include "rcpolicy/rng.hpp"
#include "rcpolicy/subgroup.hpp"

namespace rcpolicy {

using nlohmann::json;

namespace {

// Paths and switches that select inputs and outputs rather than estimation
// settings.
struct Paths {
  std::string config;
  std::string data;
  std::string out;
  std::string plot_out;
  std::string oracle;
  std::string save_model;
  std::string assignments;
  std::string model;
  std::string results;
  std::string what;
  std::string kappa;
  bool in_sample = false;
};

using Overrides = std::vector<std::function<void(RunConfig&)>>;

template <class T>
void setting(CLI::App* app, Overrides& ov, const std::string& flag, T RunConfig::*member,
             const std::string& help) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(flag, *value, help);
  ov.push_back([=](RunConfig& c) {
    if (opt->count() > 0) c.*member = *value;
  });
}

template <class T>
void optional_setting(CLI::App* app, Overrides& ov, const std::string& flag,
                      std::optional<T> RunConfig::*member, const std::string& help) {
  auto value = std::make_shared<T>();
  CLI::Option* opt = app->add_option(flag, *value, help);
  ov.push_back([=](RunConfig& c) {
    if (opt->count() > 0) c.*member = *value;
  });
}

void switch_setting(CLI::App* app, Overrides& ov, const std::string& flag, bool RunConfig::*member,
                    bool value, const std::string& help) {
  CLI::Option* opt = app->add_flag(flag, help);
  ov.push_back([=](RunConfig& c) {
    if (opt->count() > 0) c.*member = value;
  });
}

void common(CLI::App* app, Overrides& ov, Paths& p) {
  app->add_option("--config", p.config, "JSON config overlay");
  app->add_option("--out", p.out, "output path (default: stdout)");
  setting(app, ov, "--seed", &RunConfig::seed, "master seed");
  setting(app, ov, "--threads", &RunConfig::threads, "cap on worker threads");
}

void data_flags(CLI::App* app, Overrides& ov, Paths& p) {
  app->add_option("--data", p.data, "input CSV");
  setting(app, ov, "--treatment-col", &RunConfig::treatment_col, "treatment column");
  setting(app, ov, "--outcome-col", &RunConfig::outcome_col, "outcome column");
  optional_setting(app, ov, "--cost-col", &RunConfig::cost_col, "cost column");
  auto covs = std::make_shared<std::string>();
  CLI::Option* opt = app->add_option("--covariate-cols", *covs, "comma-separated covariate columns");
  ov.push_back([=](RunConfig& c) {
    if (opt->count() == 0) return;
    c.covariate_cols.clear();
    std::stringstream ss(*covs);
    for (std::string s; std::getline(ss, s, ',');)
      if (!s.empty()) c.covariate_cols.push_back(s);
  });
  optional_setting(app, ov, "--outcome-kind", &RunConfig::outcome_kind, "binary|bounded_real");
}

void estimator_flags(CLI::App* app, Overrides& ov) {
  setting(app, ov, "--folds", &RunConfig::folds, "outer CV-TMLE folds");
  setting(app, ov, "--sl-folds", &RunConfig::sl_folds, "stacking folds");
  optional_setting(app, ov, "--g-known", &RunConfig::g_known, "known P(A=1|W)");
  switch_setting(app, ov, "--g-fit", &RunConfig::g_fit, true, "fit A ~ W even when g is known");
  setting(app, ov, "--g-min", &RunConfig::g_min, "propensity truncation");
  setting(app, ov, "--blip-fit", &RunConfig::blip_fit, "per_fold|shared");
  setting(app, ov, "--policy", &RunConfig::policy, "stochastic|deterministic");
  setting(app, ov, "--confidence", &RunConfig::confidence, "confidence level");
  auto lib = [&](const std::string& flag, std::vector<std::string> RunConfig::*member) {
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = app->add_option(flag, *value, "comma-separated learners");
    ov.push_back([=](RunConfig& c) {
      if (opt->count() == 0) return;
      (c.*member).clear();
      std::stringstream ss(*value);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) (c.*member).push_back(s);
    });
  };
  lib("--outcome-library", &RunConfig::outcome_library);
  lib("--blip-library", &RunConfig::blip_library);
}

std::string read_file(const std::string& path, const std::string& flag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(flag + ": cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path, const std::string& flag) {
  try {
    return json::parse(read_file(path, flag));
  } catch (const json::parse_error& e) {
    throw ValidationError(flag + ": '" + path + "' is not valid JSON (" + e.what() + ")");
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out,
                const std::string& flag) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError(flag + ": cannot write '" + path + "'");
  f << text;
}

void emit(const std::string& path, const json& j, std::ostream& out) {
  write_text(path, j.dump(2) + "\n", out, "--out");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> header_of(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("--data: cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> cols;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(0, 1);
    if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
    cols.push_back(c);
  }
  return cols;
}

Dataset load(const Paths& p, RunConfig& cfg) {
  if (p.data.empty()) throw ValidationError("--data: an input CSV is required");
  if (cfg.covariate_cols.empty()) {
    for (const auto& c : header_of(p.data))
      if (c != cfg.treatment_col && c != cfg.outcome_col && (!cfg.cost_col || c != *cfg.cost_col))
        cfg.covariate_cols.push_back(c);
  }
  return ingest_csv(p.data, csv_schema(cfg));
}

json audit(const RunConfig& cfg, const Paths& p) {
  json a = audit_block(cfg);
  if (!p.data.empty()) a["inputs"] = {{"data", p.data}};
  return a;
}

json value_json(const ValueEstimate& v) {
  return {{"psi", v.psi}, {"se", v.se}, {"ci_lo", v.ci_lo}, {"ci_hi", v.ci_hi}};
}

json estimate_json(const ValueEstimate& v) {
  json j = value_json(v);
  j["kappa"] = v.kappa;
  j["rule"] = to_string(v.rule);
  j["tau"] = v.tau;
  j["fold_tau"] = v.fold_tau;
  j["pct_treated"] = v.pct_treated;
  j["pct_stochastic"] = v.pct_stochastic;
  j["cv"] = v.cross_validated;
  j["epsilon"] = v.epsilon;
  j["score_mean"] = v.score_mean;
  return j;
}

json glm_json(const GlmFit& f, const std::vector<std::string>& names) {
  json coef = json::object();
  for (std::size_t k = 0; k < f.terms.size(); ++k)
    coef[f.terms[k].label(names)] = f.coef(static_cast<Eigen::Index>(k));
  return {{"coefficients", coef},
          {"family", f.family == Family::gaussian ? "gaussian" : "binomial"},
          {"singular_fallback", f.singular_fallback}};
}

json ensemble_json(const StackedEnsemble& e, const std::vector<std::string>& names) {
  json c = json::array();
  for (std::size_t k = 0; k < e.candidates.size(); ++k) {
    json j = glm_json(e.fits[k], names);
    j["name"] = e.candidates[k].name(names);
    j["weight"] = e.weights[k];
    if (!e.cv_risks.empty()) j["cv_risk"] = e.cv_risks[k];
    c.push_back(j);
  }
  return {{"candidates", c}, {"ensemble_cv_risk", e.ensemble_cv_risk}, {"warnings", e.warnings}};
}

// Distinct blip values (grouped within the tie tolerance) with their counts.
json blip_histogram(std::vector<double> blips) {
  std::sort(blips.begin(), blips.end(), std::greater<>());
  json bars = json::array();
  double top = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i <= blips.size(); ++i) {
    if (i == blips.size() || (count > 0 && blips[i] < top - kBlipTieTolerance)) {
      if (count > 0) bars.push_back({{"blip_value", top}, {"count", count}});
      if (i == blips.size()) break;
      count = 0;
    }
    if (count == 0) top = blips[i];
    ++count;
  }
  std::reverse(bars.begin(), bars.end());
  return bars;
}

json threshold_json(const RulePolicy& p) {
  const ThresholdSolution& t = p.threshold();
  return {{"kappa", t.kappa},
          {"tau", t.tau},
          {"eta", t.eta_unbounded() ? json(nullptr) : json(t.eta)},
          {"eta_unbounded", t.eta_unbounded()},
          {"s_at_tau", t.s_at_tau},
          {"tie_mass", t.tie_mass},
          {"tie_prob", t.tie_prob},
          {"pct_treated", p.pct_treated()},
          {"pct_stochastic", p.pct_stochastic()}};
}

std::vector<std::string> fold_warnings(const CrossFit& cf) {
  std::vector<std::string> w;
  for (std::size_t v = 0; v < cf.folds.size(); ++v)
    for (const auto& s : cf.folds[v].warnings) w.push_back("fold " + std::to_string(v + 1) + ": " + s);
  return w;
}

int cmd_simulate(const RunConfig& cfg, const Paths& p, std::ostream& out) {
  if (p.out.empty()) throw ValidationError("--out: simulate needs an output CSV path");
  DgpSpec spec = DgpSpec::preset(dgp_kind_from_string(cfg.dgp));
  spec.with_cost = cfg.with_cost;
  spec.unit_cost = cfg.unit_cost;
  spec.cost_noise_sd = cfg.cost_noise_sd;
  spec.validate();
  const Dataset ds = generate(spec, cfg.n, cfg.seed);
  write_csv(ds, p.out);
  if (!p.oracle.empty()) {
    const std::vector<double> grid = parse_kappa_grid(cfg.kappa_grid);
    const OracleReport r = oracle(spec, grid);
    json pts = json::array();
    for (const auto& pt : r.points)
      pts.push_back({{"kappa", pt.kappa},
                     {"psi", pt.psi},
                     {"tau", pt.tau},
                     {"tie_prob", pt.tie_prob},
                     {"pct_treated", pt.treated},
                     {"chord", pt.chord},
                     {"vs_treat_none", pt.effect_vs_none},
                     {"cost_vs_treat_none", pt.cost_vs_none},
                     {"icer_vs_treat_none", pt.icer_vs_none}});
    json j = {{"audit", audit(cfg, p)}, {"dgp", cfg.dgp}, {"ey0", r.ey0},
              {"ey1", r.ey1},           {"ate", r.ate},   {"oracle", pts}};
    write_text(p.oracle, j.dump(2) + "\n", out, "--oracle");
  }
  return 0;
}

int cmd_fit_rule(RunConfig cfg, const Paths& p, std::ostream& out) {
  const Dataset ds = load(p, cfg);
  const EstimatorConfig ec = estimator_config(cfg, ds.covariate_names());
  const std::vector<double> kappas = parse_kappa_grid(p.kappa.empty() ? cfg.kappa_grid : p.kappa,
                                                      p.kappa.empty() ? "--kappa-grid" : "--kappa");
  const Dataset scaled = scale_outcome(ds);
  const OutcomeModel q =
      fit_outcome(scaled, StackingOptions{ec.outcome_library, ec.sl_folds, derive_seed(ec.seed, 1)});
  const PropensityModel g = fit_propensity(scaled, ec.propensity);
  auto blip = std::make_shared<const BlipModel>(
      fit_blip(scaled, q, g, StackingOptions{ec.blip_library, ec.sl_folds, derive_seed(ec.seed, 2)}));
  const std::vector<double> blips = blip->predict_rows(scaled.covariates());

  json rules = json::array();
  std::vector<std::vector<double>> assign;
  for (double k : kappas) {
    const RulePolicy policy = build_policy(blip, scaled, k, ec.policy);
    rules.push_back(threshold_json(policy));
    std::vector<double> a(blips.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = policy.assign_blip(blips[i]);
    assign.push_back(std::move(a));
  }
  const json model = {{"blip_model", ensemble_json(blip->ensemble(), ds.covariate_names())},
                      {"covariates", ds.covariate_names()},
                      {"blip_histogram", blip_histogram(blips)}};
  std::vector<std::string> warnings = q.ensemble().warnings;
  for (const auto& w : g.warnings()) warnings.push_back(w);
  if (!p.save_model.empty()) {
    json m = model;
    m["audit"] = audit(cfg, p);
    write_text(p.save_model, m.dump(2) + "\n", out, "--save-model");
  }
  if (!p.assignments.empty()) {
    std::string csv = "row,blip";
    for (double k : kappas) csv += ",p_kappa_" + num(k);
    csv += "\n";
    for (std::size_t i = 0; i < blips.size(); ++i) {
      csv += std::to_string(i + 1) + "," + num(blips[i]);
      for (const auto& a : assign) csv += "," + num(a[i]);
      csv += "\n";
    }
    write_text(p.assignments, csv, out, "--assignments");
  }
  json j = {{"audit", audit(cfg, p)}, {"rules", rules}, {"model", model}, {"warnings", warnings}};
  emit(p.out, j, out);
  return 0;
}

int cmd_evaluate(RunConfig cfg, const Paths& p, std::ostream& out) {
  const Dataset ds = load(p, cfg);
  const EstimatorConfig ec = estimator_config(cfg, ds.covariate_names());
  const std::vector<double> kappas = parse_kappa_grid(cfg.kappa_grid);
  const CrossFit cf = p.in_sample ? in_sample_fit(ds, ec) : cross_fit(ds, ec);
  const std::vector<GridEntry> grid = evaluate_grid(cf, kappas, ec);
  json est = json::array();
  std::string csv = "kappa,psi,ci_lo,ci_hi,pct_treated\n";
  for (const auto& e : grid) {
    json j = estimate_json(e.value);
    j["vs_treat_all"] = value_json(e.vs_treat_all);
    j["vs_treat_none"] = value_json(e.vs_treat_none);
    est.push_back(j);
    csv += num(e.value.kappa) + "," + num(e.value.psi) + "," + num(e.value.ci_lo) + "," +
           num(e.value.ci_hi) + "," + num(e.value.pct_treated) + "\n";
  }
  json j = {{"audit", audit(cfg, p)},
            {"cv", cf.cross_validated},
            {"n", ds.size()},
            {"estimates", est},
            {"treat_all", estimate_json(evaluate_rule(cf, RuleSpec::treat_all(), ec))},
            {"treat_none", estimate_json(evaluate_rule(cf, RuleSpec::treat_none(), ec))},
            {"warnings", fold_warnings(cf)}};
  emit(p.out, j, out);
  if (!p.plot_out.empty()) write_text(p.plot_out, csv, out, "--plot-out");
  return 0;
}

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

int cmd_msm(RunConfig cfg, const Paths& p, std::ostream& out) {
  const Dataset ds = load(p, cfg);
  const EstimatorConfig ec = estimator_config(cfg, ds.covariate_names());
  MsmOptions opt;
  opt.kappas = parse_kappa_grid(cfg.kappa_grid);
  opt.replicates = cfg.bootstrap;
  opt.mode = bootstrap_mode_from_string(cfg.mode);
  opt.weighted = cfg.weighted;
  const MsmFit fit = msm_with_bootstrap(ds, opt, ec);
  const MsmPoint& pt = fit.point;
  json values = json::array();
  std::string csv = "kappa,value,fitted,chord\n";
  for (std::size_t k = 0; k < pt.kappas.size(); ++k) {
    const double fitted = pt.coef.beta0 + pt.coef.beta1 * pt.kappas[k];
    values.push_back({{"kappa", pt.kappas[k]},
                      {"value", pt.values[k]},
                      {"se", pt.ses[k]},
                      {"fitted", fitted},
                      {"chord", pt.chord.at(pt.kappas[k])}});
    csv += num(pt.kappas[k]) + "," + num(pt.values[k]) + "," + num(fitted) + "," +
           num(pt.chord.at(pt.kappas[k])) + "\n";
  }
  json j = {{"audit", audit(cfg, p)},
            {"beta0", pt.coef.beta0},
            {"beta1", pt.coef.beta1},
            {"chord", {{"intercept", pt.chord.intercept}, {"slope", pt.chord.slope}}},
            {"contrasts", {{"intercept", pt.contrast_intercept}, {"slope", pt.contrast_slope}}},
            {"ci",
             {{"beta0", interval_json(fit.beta0_ci)},
              {"beta1", interval_json(fit.beta1_ci)},
              {"chord_intercept", interval_json(fit.chord_intercept_ci)},
              {"chord_slope", interval_json(fit.chord_slope_ci)},
              {"contrast_intercept", interval_json(fit.contrast_intercept_ci)},
              {"contrast_slope", interval_json(fit.contrast_slope_ci)}}},
            {"mode", to_string(opt.mode)},
            {"replicates", fit.replicates},
            {"redraws", fit.redraws},
            {"values", values}};
  emit(p.out, j, out);
  if (!p.plot_out.empty()) write_text(p.plot_out, csv, out, "--plot-out");
  return 0;
}

int cmd_icer(RunConfig cfg, const Paths& p, std::ostream& out) {
  if (!cfg.cost_col) throw ValidationError("--cost-col: icer needs a cost column");
  const Dataset ds = load(p, cfg);
  const EstimatorConfig ec = estimator_config(cfg, ds.covariate_names());
  const std::vector<double> kappas = parse_kappa_grid(cfg.kappa_grid);
  const Comparator comp = comparator_from_string(cfg.comparator);
  const CrossFit cf = p.in_sample ? in_sample_fit(ds, ec, true) : cross_fit(ds, ec, true);
  IcerOptions io;
  io.percentage_points = cfg.percentage_points;
  io.eps_den = cfg.eps_den;
  const std::vector<IcerEstimate> curve = icer_curve(cf, kappas, comp, ec, io);
  json est = json::array();
  const bool pp = !curve.empty() && curve.front().percentage_points;
  const std::string den_key = pp ? "denominator_pp" : "denominator";
  std::string csv = den_key + ",numerator,kappa\n";
  for (const auto& e : curve) {
    json j = {{"kappa", e.kappa},
              {"numerator", e.numerator},
              {den_key, e.denominator},
              {"icer", e.ratio},
              {"se", e.se},
              {"ci_lo", e.ci_lo},
              {"ci_hi", e.ci_hi},
              {"unstable", e.unstable}};
    est.push_back(j);
    csv += num(e.denominator) + "," + num(e.numerator) + "," + num(e.kappa) + "\n";
  }
  json j = {{"audit", audit(cfg, p)},
            {"comparator", to_string(comp)},
            {"denominator_units", pp ? "percentage_points" : "outcome"},
            {"cv", cf.cross_validated},
            {"estimates", est},
            {"warnings", fold_warnings(cf)}};
  emit(p.out, j, out);
  if (!p.plot_out.empty()) write_text(p.plot_out, csv, out, "--plot-out");
  return 0;
}

int cmd_subgroups(RunConfig cfg, const Paths& p, std::ostream& out) {
  const Dataset ds = load(p, cfg);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("--alpha: must lie in (0,1)");
  const auto results = subgroup_scan(ds, cfg.alpha);
  json list = json::array();
  std::string csv = "covariate,level,effect,n_treated,n_control\n";
  for (const auto& r : results) {
    json levels = json::array();
    for (const auto& l : r.levels) {
      levels.push_back({{"level", l.level},
                        {"effect", l.effect},
                        {"n_treated", l.n_treated},
                        {"n_control", l.n_control}});
      csv += r.covariate + "," + num(l.level) + "," + num(l.effect) + "," +
             std::to_string(l.n_treated) + "," + std::to_string(l.n_control) + "\n";
    }
    list.push_back({{"covariate", r.covariate},
                    {"p_value", r.p_value},
                    {"flagged", r.flagged},
                    {"skipped", r.skipped},
                    {"note", r.note},
                    {"levels", levels}});
  }
  json j = {{"audit", audit(cfg, p)}, {"alpha", cfg.alpha}, {"covariates", list}};
  emit(p.out, j, out);
  if (!p.plot_out.empty()) write_text(p.plot_out, csv, out, "--plot-out");
  return 0;
}

const json& field(const json& j, const std::string& key, const std::string& flag) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(flag + ": input has no '" + key + "' field");
  return j.at(key);
}

std::string cell(const json& v) {
  if (v.is_number()) return num(v.get<double>());
  if (v.is_null()) return "NA";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string table(const json& rows, const std::vector<std::string>& cols, const std::string& flag) {
  std::string csv;
  for (std::size_t k = 0; k < cols.size(); ++k) csv += (k ? "," : "") + cols[k];
  csv += "\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < cols.size(); ++k) csv += (k ? "," : "") + cell(field(r, cols[k], flag));
    csv += "\n";
  }
  return csv;
}

int cmd_plot_data(const Paths& p, std::ostream& out) {
  std::string csv;
  if (p.what == "blip-hist") {
    if (p.model.empty()) throw ValidationError("--model: blip-hist needs a saved model (fit-rule --save-model)");
    csv = table(field(read_json(p.model, "--model"), "blip_histogram", "--model"),
                {"blip_value", "count"}, "--model");
  } else {
    if (p.results.empty()) throw ValidationError("--results: " + p.what + " needs a results JSON");
    const json r = read_json(p.results, "--results");
    if (p.what == "value-curve") {
      csv = table(field(r, "estimates", "--results"), {"kappa", "psi", "ci_lo", "ci_hi", "pct_treated"},
                  "--results");
    } else if (p.what == "msm-curve") {
      csv = table(field(r, "values", "--results"), {"kappa", "value", "fitted", "chord"}, "--results");
    } else if (p.what == "ce-plane") {
      const json& est = field(r, "estimates", "--results");
      const std::string den = !est.empty() && est.front().contains("denominator_pp") ? "denominator_pp" : "denominator";
      csv = table(est, {den, "numerator", "kappa"}, "--results");
    } else if (p.what == "subgroups") {
      json rows = json::array();
      for (const auto& c : field(r, "covariates", "--results"))
        for (const auto& l : field(c, "levels", "--results")) {
          json row = l;
          row["covariate"] = field(c, "covariate", "--results");
          rows.push_back(row);
        }
      csv = table(rows, {"covariate", "level", "effect", "n_treated", "n_control"}, "--results");
    } else {
      throw ValidationError("--what: expected blip-hist, value-curve, msm-curve, ce-plane or subgroups, got '" +
                            p.what + "'");
    }
  }
  write_text(p.out, csv, out, "--out");
  return 0;
}

RunConfig resolve(const Paths& p, const Overrides& ov) {
  RunConfig cfg;
  if (const char* env = std::getenv("RC_POLICY_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long s = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ValidationError("RC_POLICY_SEED: not an unsigned integer");
    cfg.seed = s;
  }
  if (!p.config.empty()) apply_json(cfg, read_json(p.config, "--config"));
  for (const auto& f : ov) f(cfg);
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Resource-constrained optimal treatment rules: estimation and evaluation", "rcpolicy"};
  app.set_version_flag("--version", std::string(RCPOLICY_VERSION));
  app.require_subcommand(1);

  std::map<CLI::App*, std::pair<Paths, Overrides>> state;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto& [paths, ov] = state[sub];
    common(sub, ov, paths);
    return sub;
  };

  CLI::App* simulate = add("simulate", "draw a synthetic dataset (and its oracle)");
  {
    auto& [p, ov] = state[simulate];
    setting(simulate, ov, "--dgp", &RunConfig::dgp, "process name");
    setting(simulate, ov, "--n", &RunConfig::n, "sample size");
    setting(simulate, ov, "--unit-cost", &RunConfig::unit_cost, "cost per treated unit");
    setting(simulate, ov, "--cost-noise-sd", &RunConfig::cost_noise_sd, "gaussian cost noise");
    switch_setting(simulate, ov, "--no-cost", &RunConfig::with_cost, false, "omit the cost column");
    setting(simulate, ov, "--kappa-grid", &RunConfig::kappa_grid, "oracle grid");
    simulate->add_option("--oracle", p.oracle, "write oracle JSON here");
  }

  CLI::App* fit_rule = add("fit-rule", "fit the blip and solve the constrained rule");
  {
    auto& [p, ov] = state[fit_rule];
    data_flags(fit_rule, ov, p);
    estimator_flags(fit_rule, ov);
    fit_rule->add_option("--kappa", p.kappa, "budget or grid");
    setting(fit_rule, ov, "--kappa-grid", &RunConfig::kappa_grid, "budget grid");
    fit_rule->add_option("--save-model", p.save_model, "write the fitted blip model");
    fit_rule->add_option("--assignments", p.assignments, "write per-row assignment CSV");
  }

  CLI::App* evaluate = add("evaluate", "CV-TMLE of the rule value over a budget grid");
  {
    auto& [p, ov] = state[evaluate];
    data_flags(evaluate, ov, p);
    estimator_flags(evaluate, ov);
    setting(evaluate, ov, "--kappa-grid", &RunConfig::kappa_grid, "budget grid");
    evaluate->add_flag("--in-sample", p.in_sample, "TMLE without cross-fitting");
    evaluate->add_option("--plot-out", p.plot_out, "value-curve CSV");
  }

  CLI::App* msm = add("msm", "working MSM of value on budget, with bootstrap");
  {
    auto& [p, ov] = state[msm];
    data_flags(msm, ov, p);
    estimator_flags(msm, ov);
    setting(msm, ov, "--kappa-grid", &RunConfig::kappa_grid, "budget grid");
    setting(msm, ov, "--bootstrap", &RunConfig::bootstrap, "bootstrap replicates");
    setting(msm, ov, "--mode", &RunConfig::mode, "refit|fixed-rule");
    switch_setting(msm, ov, "--weighted", &RunConfig::weighted, true, "inverse-variance weights");
    msm->add_option("--plot-out", p.plot_out, "curve CSV");
  }

  CLI::App* icer_cmd = add("icer", "incremental cost-effectiveness ratios");
  {
    auto& [p, ov] = state[icer_cmd];
    data_flags(icer_cmd, ov, p);
    estimator_flags(icer_cmd, ov);
    setting(icer_cmd, ov, "--kappa-grid", &RunConfig::kappa_grid, "budget grid");
    setting(icer_cmd, ov, "--comparator", &RunConfig::comparator, "treat-none|treat-all");
    switch_setting(icer_cmd, ov, "--raw-units", &RunConfig::percentage_points, false,
                   "denominator in outcome units, not percentage points");
    setting(icer_cmd, ov, "--eps-den", &RunConfig::eps_den, "instability guard");
    icer_cmd->add_flag("--in-sample", p.in_sample, "TMLE without cross-fitting");
    icer_cmd->add_option("--plot-out", p.plot_out, "cost-effectiveness plane CSV");
  }

  CLI::App* subgroups = add("subgroups", "per-covariate interaction scan");
  {
    auto& [p, ov] = state[subgroups];
    data_flags(subgroups, ov, p);
    setting(subgroups, ov, "--alpha", &RunConfig::alpha, "flagging level");
    subgroups->add_option("--plot-out", p.plot_out, "subgroup effects CSV");
  }

  CLI::App* plot = add("plot-data", "project saved results to plot CSV");
  {
    auto& [p, ov] = state[plot];
    plot->add_option("--what", p.what, "blip-hist|value-curve|msm-curve|ce-plane|subgroups")->required();
    plot->add_option("--model", p.model, "model JSON from fit-rule --save-model");
    plot->add_option("--results", p.results, "results JSON from evaluate, msm, icer or subgroups");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << RCPOLICY_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    for (auto& [sub, st] : state) {
      if (!sub->parsed()) continue;
      const Paths& p = st.first;
      const RunConfig cfg = resolve(p, st.second);
      set_thread_limit(cfg.threads);
      if (sub == simulate) return cmd_simulate(cfg, p, out);
      if (sub == fit_rule) return cmd_fit_rule(cfg, p, out);
      if (sub == evaluate) return cmd_evaluate(cfg, p, out);
      if (sub == msm) return cmd_msm(cfg, p, out);
      if (sub == icer_cmd) return cmd_icer(cfg, p, out);
      if (sub == subgroups) return cmd_subgroups(cfg, p, out);
      if (sub == plot) return cmd_plot_data(p, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand given\n";
  return 1;
}

}  // namespace rcpolicy
